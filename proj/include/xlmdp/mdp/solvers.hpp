#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp {

/// Minimal interface the generic solvers need from a discounted MDP.
template <class M>
concept FiniteMdp = requires(const M& m, int s, int a, std::span<const double> v) {
    { m.num_states() } -> std::convertible_to<int>;
    { m.num_actions(s) } -> std::convertible_to<int>;
    { m.reward(s, a) } -> std::convertible_to<double>;
    { m.expected_value(s, a, v) } -> std::convertible_to<double>;
};

/// Models that know the coordinate layout of their states expose it so the
/// solvers can label the value tables they return.
template <class M>
concept ShapedMdp = FiniteMdp<M> && requires(const M& m) {
    { m.value_shape() } -> std::convertible_to<ValueTable>;
};

template <FiniteMdp M>
ValueTable blank_table(const M& mdp) {
    if constexpr (ShapedMdp<M>) {
        return mdp.value_shape();
    } else {
        return ValueTable::flat(mdp.num_states());
    }
}

/// Sup-norm residual below which successive sweeps guarantee a value error of
/// at most `tolerance`.
inline double stopping_threshold(double discount, double tolerance) {
    if (discount == 0.0) return std::numeric_limits<double>::infinity();
    return tolerance * (1.0 - discount) / discount;
}

struct SweepRecord {
    int sweep = 0;
    double residual = 0.0;
    long long action_evaluations = 0;
};

struct Backup {
    double value;
    int action;
};

/// Max over pure actions of reward plus discounted expected value. Ties go to
/// the lowest action index.
template <FiniteMdp M>
Backup bellman_backup(const M& mdp, std::span<const double> values, int s, double discount) {
    Backup best{-std::numeric_limits<double>::infinity(), -1};
    const int n = mdp.num_actions(s);
    for (int a = 0; a < n; ++a) {
        const double q = mdp.reward(s, a) + discount * mdp.expected_value(s, a, values);
        if (q > best.value) best = {q, a};
    }
    return best;
}

struct SolveResult {
    ValueTable values;
    Policy policy;
    bool converged = false;
    int sweeps = 0;
    double residual = 0.0;
    std::vector<SweepRecord> history;
};

/**
 * Jacobi value iteration from V = 0.
 *
 * Stops once the sup-norm change drops below tolerance*(1-discount)/discount
 * (after at least `min_sweeps` sweeps) or when `max_sweeps` is reached, in
 * which case the result is flagged unconverged.
 */
template <FiniteMdp M>
SolveResult value_iteration(const M& mdp, double discount, double tolerance, int max_sweeps,
                            int min_sweeps = 1) {
    require_discount(discount);
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");

    const int n = mdp.num_states();
    const double threshold = stopping_threshold(discount, tolerance);
    SolveResult result{blank_table(mdp), {}, false, 0, 0.0, {}};
    std::vector<double> current(static_cast<std::size_t>(n), 0.0);
    std::vector<double> next(current.size());
    std::vector<int> greedy(current.size(), 0);

    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        long long evaluations = 0;
        for (int s = 0; s < n; ++s) {
            const Backup b = bellman_backup(mdp, current, s, discount);
            next[static_cast<std::size_t>(s)] = b.value;
            greedy[static_cast<std::size_t>(s)] = b.action;
            evaluations += mdp.num_actions(s);
        }
        const double residual = sup_distance(next, current);
        current.swap(next);
        result.history.push_back({sweep, residual, evaluations});
        result.sweeps = sweep;
        result.residual = residual;
        if (sweep >= min_sweeps && residual < threshold) {
            result.converged = true;
            break;
        }
    }
    std::copy(current.begin(), current.end(), result.values.values().begin());
    result.policy = Policy::deterministic(greedy);
    return result;
}

/// Expected one-step value of a (possibly mixed) policy row.
template <FiniteMdp M>
double policy_backup(const M& mdp, const std::vector<ActionChoice>& row, std::span<const double> values,
                     int s, double discount) {
    double q = 0.0;
    for (const auto& c : row) {
        q += c.prob * (mdp.reward(s, c.action) + discount * mdp.expected_value(s, c.action, values));
    }
    return q;
}

/// Iterative policy evaluation with the same stopping rule as value_iteration.
template <FiniteMdp M>
ValueTable evaluate_policy(const M& mdp, const Policy& policy, double discount, double tolerance,
                           int max_sweeps = 1000000) {
    require_discount(discount);
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    policy.validate(mdp.num_states(), [&](int s) { return mdp.num_actions(s); });

    const int n = mdp.num_states();
    const double threshold = stopping_threshold(discount, tolerance);
    std::vector<double> current(static_cast<std::size_t>(n), 0.0);
    std::vector<double> next(current.size());
    bool converged = false;
    for (int sweep = 1; sweep <= max_sweeps && !converged; ++sweep) {
        for (int s = 0; s < n; ++s) {
            next[static_cast<std::size_t>(s)] = policy_backup(mdp, policy.row(s), current, s, discount);
        }
        converged = sup_distance(next, current) < threshold;
        current.swap(next);
    }
    if (!converged) throw NotConvergedError("policy evaluation did not converge");
    ValueTable table = blank_table(mdp);
    std::copy(current.begin(), current.end(), table.values().begin());
    return table;
}

/// Sum of discount^k * rewards[k], accumulated front to back.
inline double discounted_return(std::span<const double> rewards, double discount) {
    double total = 0.0;
    double weight = 1.0;
    for (double r : rewards) {
        total += weight * r;
        weight *= discount;
    }
    return total;
}

struct ContractionVerdict {
    bool passed = true;
    int failing_sweep = 0;  // sweep number whose residual broke the bound, 0 if none
    std::string report;
};

/// Checks residual[n+1] <= discount * residual[n] + slack for every
/// consecutive pair of sweeps.
inline ContractionVerdict contraction_residuals(std::span<const SweepRecord> history, double discount,
                                                double slack = 1e-10) {
    if (history.size() < 3) throw Error("contraction check needs at least 3 recorded sweeps");
    for (std::size_t i = 1; i < history.size(); ++i) {
        const double bound = discount * history[i - 1].residual + slack;
        if (history[i].residual > bound) {
            return {false, history[i].sweep,
                    "sweep " + std::to_string(history[i].sweep) + ": residual " +
                        csv::real(history[i].residual) + " exceeds " + csv::real(bound)};
        }
    }
    return {true, 0, "contraction holds over " + std::to_string(history.size()) + " sweeps"};
}

/// Writes `sweep,residual,action_evaluations` rows.
inline void write_sweep_log(std::ostream& out, std::span<const SweepRecord> history) {
    out << "sweep,residual,action_evaluations\n";
    for (const auto& r : history) {
        out << r.sweep << ',' << csv::real(r.residual) << ',' << r.action_evaluations << '\n';
    }
}

}  // namespace xlmdp
