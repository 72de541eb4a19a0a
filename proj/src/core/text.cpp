#include "core/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace emsf::text {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

CsvReader::CsvReader(std::string_view content, std::string source_name)
    : rest_(content), source_(std::move(source_name)) {
    // UTF-8 byte order mark
    if (rest_.size() >= 3 && rest_.substr(0, 3) == "\xEF\xBB\xBF") rest_.remove_prefix(3);
}

void CsvReader::fail(const std::string& what) const { throw ParseError(source_, line_, what); }

void CsvReader::expect_header(const std::vector<std::string>& expected) {
    std::vector<std::string_view> fields;
    if (!next(fields)) fail("empty file, expected header");
    bool ok = fields.size() == expected.size();
    for (std::size_t i = 0; ok && i < fields.size(); ++i) ok = fields[i] == expected[i];
    if (!ok) {
        std::string want;
        for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
        fail("header mismatch, expected '" + want + "'");
    }
}

bool CsvReader::next(std::vector<std::string_view>& fields) {
    while (!rest_.empty()) {
        const auto pos = rest_.find('\n');
        const auto line = pos == std::string_view::npos ? rest_ : rest_.substr(0, pos);
        rest_ = pos == std::string_view::npos ? std::string_view{} : rest_.substr(pos + 1);
        ++line_;
        if (trim(line).empty()) continue;
        fields = split(line, ',');
        return true;
    }
    return false;
}

double parse_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

long long parse_int(std::string_view s) {
    s = trim(s);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError("not an integer: '" + std::string(s) + "'");
    }
    return v;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace emsf::text
