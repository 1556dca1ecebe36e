#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/csv.hpp"
#include "xlmdp/mdp/state_space.hpp"

namespace xlmdp {

/**
 * Real values over a (prefix of a) joint state space.
 *
 * `names` labels the covered coordinates; the table covers exactly
 * `names.size()` leading layers of the model it came from.
 */
class ValueTable {
public:
    ValueTable() = default;

    ValueTable(std::vector<std::string> names, std::vector<int> radices, double fill = 0.0)
        : names_(std::move(names)), shape_(std::move(radices)), values_(shape_.size(), fill) {
        if (names_.size() != shape_.digits()) {
            throw ModelContractError("value table needs one name per coordinate");
        }
    }

    ValueTable(std::vector<std::string> names, std::vector<int> radices, std::vector<double> values)
        : ValueTable(std::move(names), std::move(radices)) {
        if (values.size() != values_.size()) {
            throw ModelContractError("value table size mismatch");
        }
        values_ = std::move(values);
    }

    /// Single-coordinate table over n anonymous states.
    static ValueTable flat(int n, double fill = 0.0) { return ValueTable({"state"}, {n}, fill); }

    std::size_t prefix_length() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const MixedRadix& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double at(std::span<const int> coords) const {
        return values_[static_cast<std::size_t>(shape_.encode(coords))];
    }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool all_finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    void write_csv(std::ostream& out) const {
        for (const auto& n : names_) out << n << ',';
        out << "value\n";
        for (std::size_t i = 0; i < values_.size(); ++i) {
            for (int c : shape_.decode(static_cast<int>(i))) out << c << ',';
            out << csv::real(values_[i]) << '\n';
        }
    }

    /// Reads a table written by write_csv. Radices are inferred from the
    /// largest coordinate seen per column, and every cell must be present.
    static ValueTable read_csv(std::istream& in) {
        std::string line;
        if (!csv::next_row(in, line)) throw ConfigError("value table: missing header");
        auto header = csv::split(line);
        if (header.empty() || header.back() != "value") {
            throw ConfigError("value table: last column must be 'value'");
        }
        header.pop_back();
        std::vector<std::vector<int>> coords;
        std::vector<double> values;
        std::vector<int> radices(header.size(), 0);
        while (csv::next_row(in, line)) {
            const auto cells = csv::split(line);
            if (cells.size() != header.size() + 1) throw ConfigError("value table: ragged row");
            std::vector<int> c(header.size());
            for (std::size_t i = 0; i < header.size(); ++i) {
                c[i] = csv::parse_int(cells[i]);
                if (c[i] < 0) throw ConfigError("value table: negative coordinate");
                radices[i] = std::max(radices[i], c[i] + 1);
            }
            coords.push_back(std::move(c));
            values.push_back(csv::parse_real(cells.back()));
        }
        ValueTable table(header, radices, std::nan(""));
        for (std::size_t r = 0; r < coords.size(); ++r) {
            table.values_[static_cast<std::size_t>(table.shape_.encode(coords[r]))] = values[r];
        }
        if (!table.all_finite()) throw ConfigError("value table: missing or non-finite entries");
        return table;
    }

private:
    std::vector<std::string> names_;
    MixedRadix shape_;
    std::vector<double> values_;
};

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ModelContractError("sup_distance: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline double sup_distance(const ValueTable& a, const ValueTable& b) {
    return sup_distance(a.values(), b.values());
}

}  // namespace xlmdp
