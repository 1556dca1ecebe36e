#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/csv.hpp"
#include "xlmdp/errors.hpp"
#include "xlmdp/experiment/compare.hpp"
#include "xlmdp/experiment/rollout.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/learning/actor_critic.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp::experiment {

namespace detail {

inline void state_header(std::ostream& out, const LayeredStack& stack) {
    for (const auto& n : stack.layer_names()) out << n << ',';
}

inline void action_header(std::ostream& out, const LayeredStack& stack) {
    for (const auto& n : stack.layer_names()) out << "a_" << n << ",b_" << n << ',';
}

inline void state_cells(std::ostream& out, const LayeredStack& stack, int s) {
    for (int c : stack.joint().decode(s)) out << c << ',';
}

inline void action_cells(std::ostream& out, const JointActionCodec& codec, int a) {
    const JointAction ja = codec.decode(a);
    for (std::size_t l = 0; l < ja.external.size(); ++l) out << ja.external[l] << ',' << ja.internal[l] << ',';
}

}  // namespace detail

/// One row per (state, action choice): state coordinates, per-layer
/// (external, internal) actions, probability.
inline void write_policy(std::ostream& out, const csv::Stamp& stamp, const LayeredStack& stack,
                         const JointActionCodec& codec, const Policy& policy) {
    csv::write_stamp(out, stamp);
    detail::state_header(out, stack);
    detail::action_header(out, stack);
    out << "prob\n";
    for (int s = 0; s < policy.num_states(); ++s) {
        for (const auto& c : policy.row(s)) {
            detail::state_cells(out, stack, s);
            detail::action_cells(out, codec, c.action);
            out << csv::real(c.prob) << '\n';
        }
    }
}

/// Reads a policy file back; every joint state must have at least one row.
inline Policy read_policy(std::istream& in, const LayeredStack& stack, const JointActionCodec& codec) {
    const auto layers = static_cast<std::size_t>(stack.layer_count());
    std::string line;
    if (!csv::next_row(in, line)) throw ConfigError("policy file: missing header");
    const auto header = csv::split(line);
    if (header.size() != 3 * layers + 1 || header.back() != "prob") {
        throw ConfigError("policy file: header does not match a " + std::to_string(layers) + "-layer stack");
    }
    for (std::size_t l = 0; l < layers; ++l) {
        if (header[l] != stack.layer_names()[l]) throw ConfigError("policy file: column '" + header[l] + "' does not match layer '" + stack.layer_names()[l] + "'");
    }
    std::vector<std::vector<ActionChoice>> rows(static_cast<std::size_t>(stack.num_states()));
    while (csv::next_row(in, line)) {
        const auto cells = csv::split(line);
        if (cells.size() != header.size()) throw ConfigError("policy file: ragged row '" + line + "'");
        std::vector<int> state(layers);
        for (std::size_t l = 0; l < layers; ++l) {
            state[l] = csv::parse_int(cells[l]);
            if (state[l] < 0 || state[l] >= stack.joint().radix(l)) throw ConfigError("policy file: state out of range in '" + line + "'");
        }
        JointAction ja;
        for (std::size_t l = 0; l < layers; ++l) {
            ja.external.push_back(csv::parse_int(cells[layers + 2 * l]));
            ja.internal.push_back(csv::parse_int(cells[layers + 2 * l + 1]));
            const Layer& layer = stack.layer(static_cast<int>(l) + 1);
            if (ja.external.back() < 0 || ja.external.back() >= layer.num_external() || ja.internal.back() < 0 ||
                ja.internal.back() >= layer.num_internal()) {
                throw InvalidPolicyError("policy file: action out of range in '" + line + "'");
            }
        }
        const int s = stack.joint().encode(state);
        rows[static_cast<std::size_t>(s)].push_back({codec.encode(ja), csv::parse_real(cells.back())});
    }
    Policy policy(std::move(rows));
    policy.validate(stack.num_states(), [&](int) { return codec.size(); });
    return policy;
}

/// Columns: stage, state coordinates, per-layer actions, reward, running average.
template <class Row>
void write_trajectory(std::ostream& out, const csv::Stamp& stamp, const LayeredStack& stack,
                      const JointActionCodec& codec, std::span<const Row> rows) {
    csv::write_stamp(out, stamp);
    out << "stage,";
    detail::state_header(out, stack);
    detail::action_header(out, stack);
    out << "reward,running_avg_reward\n";
    double avg = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        avg += (rows[k].reward - avg) / static_cast<double>(k + 1);
        out << k << ',';
        detail::state_cells(out, stack, rows[k].state);
        detail::action_cells(out, codec, rows[k].action);
        out << csv::real(rows[k].reward) << ',' << csv::real(avg) << '\n';
    }
}

inline void write_value_table(std::ostream& out, const csv::Stamp& stamp, const ValueTable& table) {
    csv::write_stamp(out, stamp);
    table.write_csv(out);
}

inline void write_rollout_summary(std::ostream& out, const csv::Stamp& stamp, const LayeredStack& stack,
                                  const RolloutTrace& trace) {
    csv::write_stamp(out, stamp);
    out << "key,value\n";
    out << "stages," << trace.rows.size() << '\n';
    const auto s0 = stack.joint().decode(trace.initial_state);
    for (std::size_t l = 0; l < s0.size(); ++l) out << "initial_" << stack.layer_names()[l] << ',' << s0[l] << '\n';
    out << "discount," << csv::real(trace.discount) << '\n';
    out << "average_reward," << csv::real(trace.average_reward) << '\n';
    out << "discounted_return," << csv::real(trace.discounted_return) << '\n';
}

/// Centralized and layered optimal values side by side.
inline void write_fig7_values(std::ostream& out, const csv::Stamp& stamp, const LayeredStack& stack,
                              const ValueTable& centralized, const ValueTable& layered) {
    csv::write_stamp(out, stamp);
    detail::state_header(out, stack);
    out << "centralized,layered,abs_diff\n";
    for (int s = 0; s < stack.num_states(); ++s) {
        const auto i = static_cast<std::size_t>(s);
        detail::state_cells(out, stack, s);
        out << csv::real(centralized[i]) << ',' << csv::real(layered[i]) << ','
            << csv::real(std::abs(centralized[i] - layered[i])) << '\n';
    }
}

/// Per-stage rewards of two policies under common draws, every `every` stages.
inline void write_fig8_rewards(std::ostream& out, const csv::Stamp& stamp, const Comparison& c, long every) {
    csv::write_stamp(out, stamp);
    out << "stage,reward_a,reward_b,running_avg_a,running_avg_b\n";
    double avg_a = 0.0, avg_b = 0.0;
    for (std::size_t k = 0; k < c.trace_a.rows.size(); ++k) {
        const double ra = c.trace_a.rows[k].reward, rb = c.trace_b.rows[k].reward;
        avg_a += (ra - avg_a) / static_cast<double>(k + 1);
        avg_b += (rb - avg_b) / static_cast<double>(k + 1);
        if ((k + 1) % static_cast<std::size_t>(every) != 0 && k + 1 != c.trace_a.rows.size()) continue;
        out << k << ',' << csv::real(ra) << ',' << csv::real(rb) << ',' << csv::real(avg_a) << ','
            << csv::real(avg_b) << '\n';
    }
}

/// Exact values of both policies and their gap at every state.
inline void write_fig9_values(std::ostream& out, const csv::Stamp& stamp, const LayeredStack& stack,
                              const Comparison& c) {
    csv::write_stamp(out, stamp);
    detail::state_header(out, stack);
    out << "value_a,value_b,gap\n";
    for (int s = 0; s < stack.num_states(); ++s) {
        const auto i = static_cast<std::size_t>(s);
        detail::state_cells(out, stack, s);
        out << csv::real(c.value_a[i]) << ',' << csv::real(c.value_b[i]) << ',' << csv::real(c.value_gap[i]) << '\n';
    }
}

inline void write_comparison_summary(std::ostream& out, const csv::Stamp& stamp, const Comparison& c) {
    csv::write_stamp(out, stamp);
    out << "key,value\n";
    out << "stages," << c.trace_a.rows.size() << '\n';
    out << "average_reward_a," << csv::real(c.trace_a.average_reward) << '\n';
    out << "average_reward_b," << csv::real(c.trace_b.average_reward) << '\n';
    out << "delta_r," << csv::real(c.delta_r) << '\n';
    out << "delta_r_ci95_half_width," << csv::real(c.delta_ci.half_width) << '\n';
    out << "batches," << c.delta_ci.batches << '\n';
    out << "exact_gap_min," << csv::real(c.min_gap) << '\n';
    out << "exact_gap_max," << csv::real(c.max_gap) << '\n';
    out << "long_run_average_a," << csv::real(c.long_run_a.average) << '\n';
    out << "long_run_average_b," << csv::real(c.long_run_b.average) << '\n';
    out << "long_run_gap," << csv::real(c.long_run_gap) << '\n';
}

/// Running average reward of a learning run, every `every` stages.
inline void write_fig10_learning(std::ostream& out, const csv::Stamp& stamp, const learning::LearningRun& run, long every) {
    csv::write_stamp(out, stamp);
    out << "stage,running_avg_reward\n";
    const auto& avg = run.running_average;
    for (std::size_t k = 0; k < avg.size(); ++k) {
        if ((k + 1) % static_cast<std::size_t>(every) != 0 && k + 1 != avg.size()) continue;
        out << k << ',' << csv::real(avg[k]) << '\n';
    }
}

}  // namespace xlmdp::experiment
