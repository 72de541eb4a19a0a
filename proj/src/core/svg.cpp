#include "core/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/text.hpp"

namespace emsf::svg {

namespace {

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) { return text::format_fixed(v, 2); }

// Round step (1, 2 or 5 times a power of ten) giving about `target` ticks.
double tick_step(double span, int target) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

std::string render(const Plot& plot) {
    const double left = 70, right = 150, top = 40, bottom = 50;
    const double w = plot.width - left - right, h = plot.height - top - bottom;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    for (const auto& g : plot.guides) {
        y0 = std::min(y0, g.y);
        y1 = std::max(y1, g.y);
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1;
    if (!std::isfinite(y0)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * w; };
    auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * h; };

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(plot.width) +
                      "\" height=\"" + std::to_string(plot.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(left + w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(plot.title) + "</text>\n";
    out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"none\" stroke=\"black\"/>\n";

    const double xs = tick_step(x1 - x0, 8), ys = tick_step(y1 - y0, 6);
    for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-9 * xs; t += xs) {
        out += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(top + h) + "\" x2=\"" + num(px(t)) + "\" y2=\"" +
               num(top + h + 5) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(px(t)) + "\" y=\"" + num(top + h + 18) + "\" text-anchor=\"middle\">" +
               text::format_double(std::round(t / xs) * xs) + "</text>\n";
    }
    for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-9 * ys; t += ys) {
        out += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(left) + "\" y2=\"" +
               num(py(t)) + "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(left - 8) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" +
               text::format_double(std::round(t / ys) * ys) + "</text>\n";
    }
    out += "<text x=\"" + num(left + w / 2) + "\" y=\"" + num(plot.height - 10.0) + "\" text-anchor=\"middle\">" +
           escape(plot.x_label) + "</text>\n";
    out += "<text transform=\"translate(16," + num(top + h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(plot.y_label) + "</text>\n";

    for (const auto& g : plot.guides) {
        out += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(g.y)) + "\" x2=\"" + num(left + w) + "\" y2=\"" +
               num(py(g.y)) + "\" stroke=\"black\" stroke-dasharray=\"2,4\"/>\n";
        if (!g.label.empty()) {
            out += "<text x=\"" + num(left + w + 6) + "\" y=\"" + num(py(g.y) + 4) + "\">" + escape(g.label) +
                   "</text>\n";
        }
    }
    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const char* color = kColors[k % std::size(kColors)];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            pts += (pts.empty() ? "" : " ") + num(px(s.x[i])) + "," + num(py(s.y[i]));
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.2\" points=\"" + pts +
               "\"/>\n";
        const double ly = top + 16.0 * static_cast<double>(k) + 10.0;
        out += "<line x1=\"" + num(left + w + 10) + "\" y1=\"" + num(ly + 60) + "\" x2=\"" + num(left + w + 30) +
               "\" y2=\"" + num(ly + 60) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + num(left + w + 36) + "\" y=\"" + num(ly + 64) + "\">" + escape(s.label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace emsf::svg
