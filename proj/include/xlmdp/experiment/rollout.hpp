#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/mdp/distribution.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/solvers.hpp"

namespace xlmdp::experiment {

struct TraceRow {
    int state;
    int action;
    double reward;
};

struct RolloutTrace {
    std::vector<TraceRow> rows;
    int initial_state = 0;
    double discount = 0.0;
    double average_reward = 0.0;
    double discounted_return = 0.0;

    std::vector<double> rewards() const {
        std::vector<double> r;
        r.reserve(rows.size());
        for (const auto& row : rows) r.push_back(row.reward);
        return r;
    }
};

/// Mean of the reward column, summed front to back.
inline double average_reward(std::span<const TraceRow> rows) {
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (const auto& r : rows) total += r.reward;
    return total / static_cast<double>(rows.size());
}

/// Picks from a policy row by inverse CDF; a single-choice row ignores `u`.
inline int choose_action(const std::vector<ActionChoice>& row, double u) {
    if (row.size() == 1) return row.front().action;
    double c = 0.0;
    for (const auto& choice : row) {
        c += choice.prob;
        if (u < c) return choice.action;
    }
    return row.back().action;
}

/**
 * K stages of `policy` on the stack's true kernel. Every stage consumes the
 * same draws, one for the action and one per layer for the next state, so
 * two rollouts with one seed share their randomness stage by stage.
 */
inline RolloutTrace rollout(const StackMdp& env, const Policy& policy, int initial_state, long stages,
                            std::uint64_t seed, double discount) {
    if (stages < 0) throw ConfigError("stage count must be non-negative");
    require_discount(discount);
    policy.validate(env.num_states(), [&](int s) { return env.num_actions(s); });
    if (initial_state < 0 || initial_state >= env.num_states()) throw ConfigError("initial state out of range");

    const auto layers = static_cast<std::size_t>(env.stack().layer_count());
    UniformStream rng(seed);
    std::vector<double> u(layers + 1);
    RolloutTrace trace;
    trace.initial_state = initial_state;
    trace.discount = discount;
    trace.rows.reserve(static_cast<std::size_t>(stages));
    int s = initial_state;
    for (long k = 0; k < stages; ++k) {
        for (auto& x : u) x = rng.next();
        const int a = choose_action(policy.row(s), u[0]);
        const double r = env.reward(s, a);
        trace.rows.push_back({s, a, r});
        s = env.sample_next(s, a, std::span(u).subspan(1));
    }
    trace.average_reward = average_reward(trace.rows);
    trace.discounted_return = discounted_return(trace.rewards(), discount);
    return trace;
}

}  // namespace xlmdp::experiment
