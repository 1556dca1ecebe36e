#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/csv.hpp"
#include "xlmdp/errors.hpp"

namespace xlmdp {

/// Service a layer offers upward: loss ratio, seconds per packet, and the
/// weighted internal cost accumulated from layer 1 up to this layer.
struct QosTriple {
    double loss = 0.0;
    double time = 0.0;
    double cost = 0.0;

    friend bool operator==(const QosTriple&, const QosTriple&) = default;
    friend auto operator<=>(const QosTriple&, const QosTriple&) = default;
};

inline void check_qos(const QosTriple& z, const std::string& where) {
    if (!std::isfinite(z.loss) || !std::isfinite(z.time) || !std::isfinite(z.cost)) {
        throw ModelContractError(where + ": non-finite QoS component");
    }
    if (z.loss < 0.0 || z.loss > 1.0) throw ModelContractError(where + ": loss outside [0, 1]");
    if (z.loss < 1.0 && !(z.time > 0.0)) throw ModelContractError(where + ": time must be positive");
    if (z.cost < 0.0) throw ModelContractError(where + ": negative cost");
}

/// z is at least as good as w everywhere and strictly better somewhere.
inline bool dominates(const QosTriple& z, const QosTriple& w) {
    return z.loss <= w.loss && z.time <= w.time && z.cost <= w.cost && z != w;
}

inline bool pareto_equivalent(const QosTriple& z, const QosTriple& w) {
    return !dominates(z, w) && !dominates(w, z);
}

/// Dominance with a relative slack: z counts as dominating w when every
/// component of z is within eps of w's or better. Only used when the
/// optional epsilon knob is on.
inline bool eps_dominates(const QosTriple& z, const QosTriple& w, double eps) {
    auto le = [eps](double x, double y) { return x <= y + eps * std::max(1.0, std::abs(y)); };
    return le(z.loss, w.loss) && le(z.time, w.time) && le(z.cost, w.cost);
}

/// Internal action profile b_1..b_l that produced a triple.
using Provenance = std::vector<int>;

struct FrontierPoint {
    QosTriple qos;
    Provenance provenance;
};

using Frontier = std::vector<FrontierPoint>;

/**
 * Keeps exactly the non-dominated candidates. Among identical triples the
 * lexicographically smallest provenance survives. The output is sorted by
 * (loss, time, cost).
 *
 * With epsilon > 0 a candidate is also dropped when a kept point
 * eps-dominates it; epsilon = 0 is exact.
 */
inline Frontier prune_to_frontier(std::vector<FrontierPoint> candidates, double epsilon = 0.0) {
    if (candidates.empty()) throw EmptyCandidateError("prune_to_frontier: no candidates");
    std::sort(candidates.begin(), candidates.end(), [](const FrontierPoint& x, const FrontierPoint& y) {
        if (x.qos != y.qos) return x.qos < y.qos;
        return x.provenance < y.provenance;
    });
    // After the lexicographic sort a point can only be dominated (or
    // duplicated) by one that precedes it.
    Frontier kept;
    for (auto& c : candidates) {
        const bool beaten = std::any_of(kept.begin(), kept.end(), [&](const FrontierPoint& k) {
            if (epsilon > 0.0) return eps_dominates(k.qos, c.qos, epsilon);
            return k.qos == c.qos || dominates(k.qos, c.qos);
        });
        if (!beaten) kept.push_back(std::move(c));
    }
    return kept;
}

inline std::string join_provenance(std::span<const int> provenance) {
    std::string out;
    for (std::size_t i = 0; i < provenance.size(); ++i) {
        if (i) out += '-';
        out += std::to_string(provenance[i]);
    }
    return out;
}

inline Provenance split_provenance(const std::string& text) {
    Provenance p;
    for (const auto& cell : csv::split(text, '-')) p.push_back(csv::parse_int(cell));
    return p;
}

/// Writes the frontier rows of one state prefix (no header).
inline void write_frontier_rows(std::ostream& out, std::span<const int> prefix, const Frontier& frontier) {
    for (const auto& p : frontier) {
        for (int c : prefix) out << c << ',';
        out << csv::real(p.qos.loss) << ',' << csv::real(p.qos.time) << ',' << csv::real(p.qos.cost) << ','
            << join_provenance(p.provenance) << '\n';
    }
}

inline void write_frontier_header(std::ostream& out, std::span<const std::string> prefix_names) {
    for (const auto& n : prefix_names) out << n << ',';
    out << "loss,time_s,cost,provenance\n";
}

}  // namespace xlmdp
