#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "xlmdp/experiment/rollout.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/solvers.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp::experiment {

struct LongRunReward {
    double average = 0.0;
    std::vector<double> occupancy;  // limiting state distribution from the initial state
};

/**
 * Limiting average reward of `policy` started in `initial_state`. Iterates
 * the lazy chain (I + P)/2, which has the same limit as the Cesaro average
 * of P but no periodicity.
 */
inline LongRunReward long_run_reward(const StackMdp& env, const Policy& policy, int initial_state,
                                     double tolerance = 1e-13, int max_iterations = 1000000) {
    policy.validate(env.num_states(), [&](int s) { return env.num_actions(s); });
    const auto n = static_cast<std::size_t>(env.num_states());
    // Policy-averaged kernel rows and rewards.
    std::vector<SparseDist> rows(n);
    std::vector<double> reward(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> dense;
        for (const auto& c : policy.row(static_cast<int>(s))) {
            reward[s] += c.prob * env.reward(static_cast<int>(s), c.action);
            for (const auto& o : env.transition(static_cast<int>(s), c.action)) {
                if (dense.size() <= static_cast<std::size_t>(o.state)) dense.resize(static_cast<std::size_t>(o.state) + 1, 0.0);
                dense[static_cast<std::size_t>(o.state)] += c.prob * o.prob;
            }
        }
        rows[s] = sparse_from_dense(dense);
    }
    LongRunReward out{0.0, std::vector<double>(n, 0.0)};
    out.occupancy[static_cast<std::size_t>(initial_state)] = 1.0;
    std::vector<double> next(n);
    for (int it = 0; it < max_iterations; ++it) {
        for (std::size_t s = 0; s < n; ++s) next[s] = 0.5 * out.occupancy[s];
        for (std::size_t s = 0; s < n; ++s) {
            const double m = 0.5 * out.occupancy[s];
            if (m == 0.0) continue;
            for (const auto& o : rows[s]) next[static_cast<std::size_t>(o.state)] += m * o.prob;
        }
        const double change = sup_distance(next, out.occupancy);
        out.occupancy.swap(next);
        if (change < tolerance) break;
    }
    for (std::size_t s = 0; s < n; ++s) out.average += out.occupancy[s] * reward[s];
    return out;
}

struct BatchMeans {
    double mean = 0.0;
    double half_width = std::numeric_limits<double>::infinity();  // 95%
    int batches = 0;
};

/// 95% confidence interval for the mean of a correlated series from
/// non-overlapping batch means; leftover samples join the last batch.
inline BatchMeans batch_means(std::span<const double> x, int batches = 20) {
    BatchMeans out;
    if (x.empty()) return out;
    double total = 0.0;
    for (double v : x) total += v;
    out.mean = total / static_cast<double>(x.size());
    const int b = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(batches), x.size()));
    out.batches = b;
    if (b < 2) return out;
    const std::size_t width = x.size() / static_cast<std::size_t>(b);
    std::vector<double> means;
    for (int i = 0; i < b; ++i) {
        const std::size_t lo = static_cast<std::size_t>(i) * width;
        const std::size_t hi = i + 1 == b ? x.size() : lo + width;
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += x[k];
        means.push_back(s / static_cast<double>(hi - lo));
    }
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= b;
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    var /= (b - 1);
    const boost::math::students_t t(b - 1);
    out.half_width = boost::math::quantile(t, 0.975) * std::sqrt(var / b);
    return out;
}

struct Comparison {
    RolloutTrace trace_a, trace_b;
    double delta_r = 0.0;        // mean over stages of R_B - R_A
    BatchMeans delta_ci;
    ValueTable value_a, value_b;
    std::vector<double> value_gap;  // V_A(s) - V_B(s)
    double min_gap = 0.0, max_gap = 0.0;
    LongRunReward long_run_a, long_run_b;
    double long_run_gap = 0.0;   // limiting average of R_B - R_A from the initial state
};

/**
 * Simulated and exact comparison of B against A. Both rollouts use the
 * same seed, hence the same per-stage draws.
 */
inline Comparison compare_policies(const StackMdp& env, const Policy& a, const Policy& b, int initial_state,
                                   long stages, std::uint64_t seed, double discount, double tolerance) {
    Comparison c;
    c.trace_a = rollout(env, a, initial_state, stages, seed, discount);
    c.trace_b = rollout(env, b, initial_state, stages, seed, discount);
    std::vector<double> diff(static_cast<std::size_t>(stages));
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = c.trace_b.rows[k].reward - c.trace_a.rows[k].reward;
    c.delta_ci = batch_means(diff);
    c.delta_r = c.delta_ci.mean;

    c.value_a = evaluate_policy(env, a, discount, tolerance);
    c.value_b = evaluate_policy(env, b, discount, tolerance);
    c.value_gap.resize(c.value_a.size());
    for (std::size_t s = 0; s < c.value_gap.size(); ++s) c.value_gap[s] = c.value_a[s] - c.value_b[s];
    if (!c.value_gap.empty()) {
        const auto [lo, hi] = std::minmax_element(c.value_gap.begin(), c.value_gap.end());
        c.min_gap = *lo;
        c.max_gap = *hi;
    }
    c.long_run_a = long_run_reward(env, a, initial_state);
    c.long_run_b = long_run_reward(env, b, initial_state);
    c.long_run_gap = c.long_run_b.average - c.long_run_a.average;
    return c;
}

}  // namespace xlmdp::experiment
