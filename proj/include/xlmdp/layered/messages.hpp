#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "xlmdp/csv.hpp"
#include "xlmdp/errors.hpp"
#include "xlmdp/layered/qos.hpp"
#include "xlmdp/mdp/state_space.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp {

/// Frontier a layer offers to the layer above for its current state prefix.
struct UpwardMessage {
    int from_layer = 0;
    std::vector<int> prefix;  // s_1..s_from_layer
    Frontier frontier;

    friend bool operator==(const UpwardMessage& x, const UpwardMessage& y) {
        if (x.from_layer != y.from_layer || x.prefix != y.prefix || x.frontier.size() != y.frontier.size()) {
            return false;
        }
        for (std::size_t i = 0; i < x.frontier.size(); ++i) {
            if (x.frontier[i].qos != y.frontier[i].qos || x.frontier[i].provenance != y.frontier[i].provenance) {
                return false;
            }
        }
        return true;
    }
};

/// Expected future reward over next-stage prefixes s'_1..s'_k, tagged with
/// the sender's choice that produced it.
struct ContinuationTable {
    int label = 0;
    std::vector<double> values;

    friend bool operator==(const ContinuationTable&, const ContinuationTable&) = default;
};

/// Tables a layer sends to the layer below. The receiver owns coordinate
/// `prefix_length` (1-based) of each table and sums it out.
struct DownwardMessage {
    int from_layer = 0;
    std::vector<int> radices;  // sizes of s'_1..s'_{from_layer-1}
    std::vector<ContinuationTable> tables;

    friend bool operator==(const DownwardMessage&, const DownwardMessage&) = default;

    /// Table i as a labelled ValueTable.
    ValueTable as_value_table(std::size_t i, const std::vector<std::string>& names) const {
        return ValueTable(std::vector<std::string>(names.begin(), names.begin() + static_cast<long>(radices.size())),
                          radices, tables.at(i).values);
    }
};

namespace detail {

inline std::string join_ints(const std::vector<int>& v) { return join_provenance(v); }

inline std::vector<int> split_ints(const std::string& s) {
    if (s.empty()) return {};
    return split_provenance(s);
}

inline std::string expect_line(std::istream& in) {
    std::string line;
    if (!csv::next_row(in, line)) throw ConfigError("message: unexpected end of input");
    return line;
}

}  // namespace detail

inline std::string serialize(const UpwardMessage& m) {
    std::ostringstream out;
    out << "upward," << m.from_layer << ',' << detail::join_ints(m.prefix) << ',' << m.frontier.size() << '\n';
    for (const auto& p : m.frontier) {
        out << csv::real(p.qos.loss) << ',' << csv::real(p.qos.time) << ',' << csv::real(p.qos.cost) << ','
            << join_provenance(p.provenance) << '\n';
    }
    return out.str();
}

inline UpwardMessage parse_upward(const std::string& text) {
    std::istringstream in(text);
    const auto head = csv::split(detail::expect_line(in));
    if (head.size() != 4 || head[0] != "upward") throw ConfigError("message: bad upward header");
    UpwardMessage m{csv::parse_int(head[1]), detail::split_ints(head[2]), {}};
    const int count = csv::parse_int(head[3]);
    for (int i = 0; i < count; ++i) {
        const auto cells = csv::split(detail::expect_line(in));
        if (cells.size() != 4) throw ConfigError("message: bad frontier row");
        m.frontier.push_back({{csv::parse_real(cells[0]), csv::parse_real(cells[1]), csv::parse_real(cells[2])},
                              split_provenance(cells[3])});
    }
    return m;
}

inline std::string serialize(const DownwardMessage& m) {
    std::ostringstream out;
    out << "downward," << m.from_layer << ',' << detail::join_ints(m.radices) << ',' << m.tables.size() << '\n';
    for (const auto& t : m.tables) {
        out << t.label;
        for (double v : t.values) out << ',' << csv::real(v);
        out << '\n';
    }
    return out.str();
}

inline DownwardMessage parse_downward(const std::string& text) {
    std::istringstream in(text);
    const auto head = csv::split(detail::expect_line(in));
    if (head.size() != 4 || head[0] != "downward") throw ConfigError("message: bad downward header");
    DownwardMessage m{csv::parse_int(head[1]), detail::split_ints(head[2]), {}};
    const int count = csv::parse_int(head[3]);
    const std::size_t width = static_cast<std::size_t>(MixedRadix(m.radices).size());
    for (int i = 0; i < count; ++i) {
        const auto cells = csv::split(detail::expect_line(in));
        if (cells.size() != width + 1) throw ConfigError("message: bad table row");
        ContinuationTable t{csv::parse_int(cells[0]), {}};
        for (std::size_t k = 1; k < cells.size(); ++k) t.values.push_back(csv::parse_real(cells[k]));
        m.tables.push_back(std::move(t));
    }
    return m;
}

}  // namespace xlmdp
