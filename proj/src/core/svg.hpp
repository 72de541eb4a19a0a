#pragma once

#include <string>
#include <vector>

// Minimal line-chart emitter: axes with ticks, one polyline per series and
// optional dotted horizontal guides.
namespace emsf::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct Guide {
    double y = 0.0;
    std::string label;
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<Guide> guides;
    int width = 900;
    int height = 420;
};

std::string render(const Plot& plot);

}  // namespace emsf::svg
