#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small text utilities shared by the CSV readers, writers and the model file.
namespace emsf::text {

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

// A header-checked CSV reader. `fields` come back trimmed; empty fields stay
// empty so callers can treat them as missing.
class CsvReader {
public:
    CsvReader(std::string_view content, std::string source_name);

    // Verifies the header row names exactly `expected`, in order.
    void expect_header(const std::vector<std::string>& expected);
    // Returns false at end of input. Blank lines are skipped.
    bool next(std::vector<std::string_view>& fields);
    std::size_t line() const noexcept { return line_; }
    const std::string& source() const noexcept { return source_; }

    [[noreturn]] void fail(const std::string& what) const;

private:
    std::string_view rest_;
    std::string source_;
    std::size_t line_ = 0;
};

double parse_double(std::string_view s);
long long parse_int(std::string_view s);

// Shortest representation that parses back to the identical double.
std::string format_double(double v);
// Fixed number of decimals, for human-facing CSV columns.
std::string format_fixed(double v, int decimals);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace emsf::text
