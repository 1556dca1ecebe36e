#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "xlmdp/csv.hpp"
#include "xlmdp/errors.hpp"
#include "xlmdp/experiment/compare.hpp"
#include "xlmdp/experiment/io.hpp"
#include "xlmdp/experiment/rollout.hpp"
#include "xlmdp/layered/frontier.hpp"
#include "xlmdp/layered/layered_vi.hpp"
#include "xlmdp/layered/simplified.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/learning/actor_critic.hpp"
#include "xlmdp/mdp/solvers.hpp"
#include "xlmdp/wireless/config.hpp"
#include "xlmdp/wireless/reference_stack.hpp"

namespace xlmdp::experiment {

namespace fs = std::filesystem;

enum class ExitCode : int { ok = 0, other = 1, config = 2, not_converged = 3, model_contract = 4 };

/// Maps a library error to the process exit code.
inline ExitCode exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const PolicyCoverageError*>(&e) ||
        dynamic_cast<const InvalidPolicyError*>(&e) || dynamic_cast<const InvalidDiscountError*>(&e)) {
        return ExitCode::config;
    }
    if (dynamic_cast<const NotConvergedError*>(&e)) return ExitCode::not_converged;
    if (dynamic_cast<const ModelContractError*>(&e) || dynamic_cast<const EmptyCandidateError*>(&e)) {
        return ExitCode::model_contract;
    }
    return ExitCode::other;
}

struct ExperimentSpec {
    wireless::StackConfig config;
    std::string mode;
    fs::path out = ".";
    std::optional<fs::path> policy, policy_a, policy_b;
};

/// Effective seed and hash stamped on every output.
inline csv::Stamp stamp_of(const ExperimentSpec& spec) {
    return {wireless::config_hash(spec.config), spec.config.learning.seed};
}

namespace detail {

inline std::ofstream open_output(const fs::path& dir, const std::string& name, std::vector<fs::path>& written) {
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    written.push_back(path);
    return out;
}

inline Policy load_policy(const fs::path& path, const LayeredStack& stack, const JointActionCodec& codec) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open policy file '" + path.string() + "'");
    return read_policy(in, stack, codec);
}

inline void write_sweeps(const fs::path& dir, const csv::Stamp& stamp, std::span<const SweepRecord> history,
                         const std::string& name, std::vector<fs::path>& written) {
    auto out = open_output(dir, name, written);
    csv::write_stamp(out, stamp);
    write_sweep_log(out, history);
}

}  // namespace detail

struct CommandOutcome {
    ExitCode code = ExitCode::ok;
    std::vector<fs::path> written;
    std::vector<std::string> notes;  // one-line human summaries
};

/// Solves the configured stack with the selected solver and persists its
/// value table, policy, sweep log and (for the two exact solvers) the
/// side-by-side value comparison.
inline CommandOutcome cmd_solve(const ExperimentSpec& spec) {
    const auto& cfg = spec.config;
    const std::string mode = spec.mode.empty() ? "layered" : spec.mode;
    if (mode != "centralized" && mode != "layered" && mode != "simplified1" && mode != "simplified2") {
        throw ConfigError("solve: unknown mode '" + mode + "'");
    }
    CommandOutcome result;
    const auto stamp = stamp_of(spec);
    const auto model = wireless::build_model(cfg);
    result.notes = model.warnings;
    const LayeredStack& stack = model.stack;
    const StackMdp env(stack);
    const double gamma = cfg.solver.gamma, tol = cfg.solver.tolerance;
    const int max_sweeps = cfg.solver.max_sweeps;

    ValueTable values;
    Policy policy;
    std::vector<SweepRecord> history;
    bool converged = false;
    int sweeps = 0;
    std::optional<ValueTable> centralized, layered;

    if (mode == "centralized" || mode == "layered") {
        const SolveResult c = value_iteration(env, gamma, tol, max_sweeps);
        LayeredOptions options;
        options.tolerance = tol;
        options.max_sweeps = max_sweeps;
        const LayeredResult l = layered_value_iteration(stack, gamma, options);
        centralized = c.values;
        layered = l.values;
        detail::write_sweeps(spec.out, stamp, mode == "centralized" ? l.history : c.history,
                             mode == "centralized" ? "sweeps_layered.csv" : "sweeps_centralized.csv", result.written);
        if (mode == "centralized") {
            values = c.values;
            policy = c.policy;
            history = c.history;
            converged = c.converged;
            sweeps = c.sweeps;
        } else {
            values = l.values;
            policy = l.policy.to_policy(env.codec());
            history = l.history;
            converged = l.converged;
            sweeps = l.sweeps;
        }
        result.notes.push_back("sup |centralized - layered| = " + csv::real(sup_distance(c.values, l.values)));
    } else if (mode == "simplified1") {
        const FrontierCatalog catalog(stack);
        const auto solved = simplified1_value_iteration(stack.top(), uniform_frontier_prior(stack, catalog), gamma, tol,
                                                        max_sweeps);
        const std::vector<int> fixed(static_cast<std::size_t>(stack.layer_count() - 1), cfg.solver.simplified1_bid);
        policy = simplified1_joint_policy(stack, catalog, solved, fixed);
        values = evaluate_policy(env, policy, gamma, tol);
        history = solved.history;
        converged = solved.converged;
        sweeps = solved.sweeps;
        auto out = detail::open_output(spec.out, "values_top_layer.csv", result.written);
        write_value_table(out, stamp, solved.values);
    } else {
        LayeredOptions options;
        options.tolerance = tol;
        options.max_sweeps = max_sweeps;
        const LayeredResult l = simplified2_value_iteration(stack, cfg.solver.simplified2_arrival, gamma, options);
        policy = l.policy.to_policy(env.codec());
        values = evaluate_policy(env, policy, gamma, tol);
        history = l.history;
        converged = l.converged;
        sweeps = l.sweeps;
    }

    {
        auto out = detail::open_output(spec.out, "values.csv", result.written);
        write_value_table(out, stamp, values);
    }
    {
        auto out = detail::open_output(spec.out, "policy.csv", result.written);
        write_policy(out, stamp, stack, env.codec(), policy);
    }
    detail::write_sweeps(spec.out, stamp, history, "sweeps.csv", result.written);
    if (centralized && layered) {
        auto out = detail::open_output(spec.out, "fig7_values.csv", result.written);
        write_fig7_values(out, stamp, stack, *centralized, *layered);
    }
    result.notes.push_back(mode + ": " + std::to_string(sweeps) + " sweeps, " + (converged ? "converged" : "NOT converged") +
                           ", V(s0) = " + csv::real(values[static_cast<std::size_t>(model.initial_state)]));
    if (!converged) result.code = ExitCode::not_converged;
    return result;
}

/// Seeded rollout of a stored policy.
inline CommandOutcome cmd_simulate(const ExperimentSpec& spec) {
    if (!spec.policy) throw ConfigError("simulate: --policy is required");
    const auto& cfg = spec.config;
    CommandOutcome result;
    const auto stamp = stamp_of(spec);
    const auto model = wireless::build_model(cfg);
    result.notes = model.warnings;
    const StackMdp env(model.stack);
    const Policy policy = detail::load_policy(*spec.policy, model.stack, env.codec());
    const RolloutTrace trace =
        rollout(env, policy, model.initial_state, cfg.learning.stages, cfg.learning.seed, cfg.solver.gamma);
    {
        auto out = detail::open_output(spec.out, "trace.csv", result.written);
        write_trajectory<TraceRow>(out, stamp, model.stack, env.codec(), trace.rows);
    }
    {
        auto out = detail::open_output(spec.out, "summary.csv", result.written);
        write_rollout_summary(out, stamp, model.stack, trace);
    }
    result.notes.push_back("average reward per stage " + csv::real(trace.average_reward) + ", discounted return " +
                           csv::real(trace.discounted_return));
    return result;
}

/// Policy B against policy A: simulated difference under common draws and
/// the exact per-state value gap.
inline CommandOutcome cmd_compare(const ExperimentSpec& spec) {
    if (!spec.policy_a || !spec.policy_b) throw ConfigError("compare: --policy-a and --policy-b are required");
    const auto& cfg = spec.config;
    CommandOutcome result;
    const auto stamp = stamp_of(spec);
    const auto model = wireless::build_model(cfg);
    result.notes = model.warnings;
    const StackMdp env(model.stack);
    const Policy a = detail::load_policy(*spec.policy_a, model.stack, env.codec());
    const Policy b = detail::load_policy(*spec.policy_b, model.stack, env.codec());
    const Comparison c = compare_policies(env, a, b, model.initial_state, cfg.learning.stages, cfg.learning.seed,
                                          cfg.solver.gamma, cfg.solver.tolerance);
    {
        auto out = detail::open_output(spec.out, "comparison.csv", result.written);
        write_comparison_summary(out, stamp, c);
    }
    {
        auto out = detail::open_output(spec.out, "fig8_rewards.csv", result.written);
        write_fig8_rewards(out, stamp, c, cfg.learning.curve_every);
    }
    {
        auto out = detail::open_output(spec.out, "fig9_simplifications.csv", result.written);
        write_fig9_values(out, stamp, model.stack, c);
    }
    result.notes.push_back("delta R (B - A) = " + csv::real(c.delta_r) + " +/- " + csv::real(c.delta_ci.half_width) +
                           "; exact gap V_A - V_B in [" + csv::real(c.min_gap) + ", " + csv::real(c.max_gap) + "]");
    return result;
}

/// Actor-critic learning against the stack's true dynamics.
inline CommandOutcome cmd_learn(const ExperimentSpec& spec) {
    const auto& cfg = spec.config;
    const std::string mode = spec.mode.empty() ? "layered" : spec.mode;
    learning::LearningMode lm;
    if (mode == "centralized") lm = learning::LearningMode::centralized;
    else if (mode == "layered") lm = learning::LearningMode::layered;
    else throw ConfigError("learn: unknown mode '" + mode + "'");

    CommandOutcome result;
    const auto stamp = stamp_of(spec);
    const auto model = wireless::build_model(cfg);
    result.notes = model.warnings;
    const StackMdp env(model.stack);
    const FrontierCatalog catalog(model.stack);
    learning::LearningParams params;
    params.alpha = cfg.learning.alpha;
    params.beta = cfg.learning.beta;
    params.discount = cfg.solver.gamma;
    params.stages = cfg.learning.stages;
    params.seed = cfg.learning.seed;
    params.alpha_decay = cfg.learning.alpha_decay;
    const auto run = learning::run_learning(env, catalog, lm, params, model.initial_state);
    {
        auto out = detail::open_output(spec.out, "trajectory.csv", result.written);
        write_trajectory<learning::StageRecord>(out, stamp, model.stack, env.codec(), run.trajectory);
    }
    {
        auto out = detail::open_output(spec.out, "fig10_learning.csv", result.written);
        write_fig10_learning(out, stamp, run, cfg.learning.curve_every);
    }
    {
        auto out = detail::open_output(spec.out, "policy.csv", result.written);
        write_policy(out, stamp, model.stack, env.codec(), run.greedy);
    }
    {
        ValueTable critic = model.stack.prefix_table(model.stack.layer_count());
        std::copy(run.values.begin(), run.values.end(), critic.values().begin());
        auto out = detail::open_output(spec.out, "critic.csv", result.written);
        write_value_table(out, stamp, critic);
    }
    const double avg = run.running_average.empty() ? 0.0 : run.running_average.back();
    result.notes.push_back(mode + " learning: " + std::to_string(run.trajectory.size()) +
                           " stages, average reward " + csv::real(avg));
    return result;
}

}  // namespace xlmdp::experiment
