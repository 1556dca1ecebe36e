#pragma once

#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "xlmdp/errors.hpp"

namespace xlmdp::csv {

/// 17 significant digits: enough for every finite double to round-trip.
inline std::string real(double x) { return fmt::format("{:.17g}", x); }

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        cells.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

inline double parse_real(const std::string& cell) {
    // strtod rather than stod: subnormals set ERANGE but are valid values.
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    const double value = std::strtod(begin, &end);
    if (end == begin || std::isspace(static_cast<unsigned char>(cell.front()))) {
        throw ConfigError("not a number: '" + cell + "'");
    }
    if (errno == ERANGE && std::isinf(value)) throw ConfigError("number out of range: '" + cell + "'");
    if (end != begin + cell.size()) throw ConfigError("trailing characters in number: '" + cell + "'");
    return value;
}

inline int parse_int(const std::string& cell) {
    int value = 0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc() || ptr != end) throw ConfigError("not an integer: '" + cell + "'");
    return value;
}

/// Provenance stamp written as a leading comment line of every output file.
struct Stamp {
    std::string config_hash;
    unsigned long long seed = 0;
};

inline void write_stamp(std::ostream& out, const Stamp& stamp) {
    out << "# xlmdp config_hash=" << stamp.config_hash << " seed=" << stamp.seed << '\n';
}

/// Reads the next non-comment, non-empty line.
inline bool next_row(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        return true;
    }
    return false;
}

}  // namespace xlmdp::csv
