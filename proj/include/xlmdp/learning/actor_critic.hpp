#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/frontier.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/mdp/distribution.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp::learning {

/// Gibbs distribution exp(rho_i) / sum_j exp(rho_j), shifted by the max.
inline std::vector<double> gibbs_softmax(std::span<const double> tendencies) {
    std::vector<double> p(tendencies.size());
    if (p.empty()) return p;
    const double top = *std::max_element(tendencies.begin(), tendencies.end());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] = std::exp(tendencies[i] - top));
    for (auto& x : p) x /= total;
    return p;
}

inline double td_error_centralized(double reward, std::span<const double> values, int s, int s_next, double discount) {
    return reward + discount * values[static_cast<std::size_t>(s_next)] - values[static_cast<std::size_t>(s)];
}

inline void critic_update_centralized(std::span<double> values, int s, double delta, double alpha) {
    values[static_cast<std::size_t>(s)] += alpha * delta;
}

/// Tendency bump for the action taken; `prob` is its probability before the update.
inline void actor_update(std::span<double> tendencies, int action, double delta, double beta, double prob) {
    tendencies[static_cast<std::size_t>(action)] += beta * delta * (1.0 - prob);
}

/// What one stage of the layered learner observed.
struct LayeredStage {
    int state = 0;       // joint index of s^k
    int next_state = 0;  // joint index of s^{k+1}
    double top_term = 0.0;             // R_in(s_L, Z_L) - lambda_L c_L(s_L, a_L)
    std::vector<double> lower_costs;   // lambda_l c_l(s_l, a_l) for l = 1..L-1
};

/// Full-state critic plus one critic per proper prefix length.
struct LayeredCritics {
    std::vector<double> full;
    std::vector<std::vector<double>> prefix;  // prefix[l-1] over s_1..s_l, l = 1..L-1
};

/// Layer-wise temporal-difference errors, delta[l-1] for layer l.
inline std::vector<double> layered_td_errors(const LayeredStage& st, const LayeredCritics& v,
                                             const MixedRadix& joint, double discount) {
    const std::size_t layers = joint.digits();
    std::vector<double> delta(layers);
    auto prefix_value = [&](std::size_t l, int s) {  // V_l at the prefix of joint state s
        return v.prefix[l - 1][static_cast<std::size_t>(joint.prefix_index(s, l))];
    };
    const double next_full = v.full[static_cast<std::size_t>(st.next_state)];
    const double cur_full = v.full[static_cast<std::size_t>(st.state)];
    if (layers == 1) {
        delta[0] = st.top_term + discount * next_full - cur_full;
        return delta;
    }
    delta[layers - 1] = st.top_term + discount * next_full - prefix_value(layers - 1, st.next_state);
    for (std::size_t l = layers - 1; l >= 2; --l) {
        delta[l - 1] = -st.lower_costs[l - 1] + prefix_value(l, st.next_state) - prefix_value(l - 1, st.next_state);
    }
    delta[0] = -st.lower_costs[0] + prefix_value(1, st.next_state) - cur_full;
    return delta;
}

/// Visit-count bookkeeping for optional 1/n step sizes.
struct StepSize {
    double base = 0.5;
    bool decay = false;

    double next(std::uint32_t& visits) const {
        ++visits;
        return decay ? base / static_cast<double>(visits) : base;
    }
};

/**
 * Prefix critics move by the error of the layer above; the full-state
 * critic moves by the one-step error of the whole stack.
 */
inline void layered_critic_update(LayeredCritics& v, const LayeredStage& st, std::span<const double> delta,
                                  double central_delta, const MixedRadix& joint, const std::vector<double>& alphas) {
    const std::size_t layers = joint.digits();
    for (std::size_t l = 1; l < layers; ++l) {
        v.prefix[l - 1][static_cast<std::size_t>(joint.prefix_index(st.next_state, l))] += alphas[l - 1] * delta[l];
    }
    v.full[static_cast<std::size_t>(st.state)] += alphas[layers - 1] * central_delta;
}

enum class LearningMode { centralized, layered };

struct LearningParams {
    double alpha = 0.5;
    double beta = 5.0;
    double discount = 0.9;
    long stages = 100000;
    std::uint64_t seed = 1;
    bool alpha_decay = false;
};

struct StageRecord {
    int state;
    int action;  // joint action index
    double reward;
};

struct LearningRun {
    std::uint64_t seed = 0;
    LearningMode mode = LearningMode::centralized;
    std::vector<StageRecord> trajectory;
    std::vector<double> running_average;  // after each stage
    std::vector<double> values;           // full-state critic at the end
    Policy greedy;                        // argmax of the final tendencies
};

/// Uniforms drawn per stage regardless of mode: one per layer for the
/// action choice, then one per layer for the next state.
inline std::vector<double> stage_uniforms(UniformStream& rng, int layers) {
    std::vector<double> u(static_cast<std::size_t>(2 * layers));
    for (auto& x : u) x = rng.next();
    return u;
}

inline int sample_index(std::span<const double> probs, double u) {
    double c = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        c += probs[i];
        if (u < c) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

/// Lowest index of the largest entry.
inline int argmax(std::span<const double> x) {
    return static_cast<int>(std::max_element(x.begin(), x.end()) - x.begin());
}

namespace detail {

inline void require_finite(double x, long stage, const std::string& what) {
    if (!std::isfinite(x)) throw DivergedRunError(stage, what + " became non-finite");
}

inline void record(LearningRun& run, int s, int a, double r) {
    const double n = static_cast<double>(run.trajectory.size() + 1);
    const double prev = run.running_average.empty() ? 0.0 : run.running_average.back();
    run.trajectory.push_back({s, a, r});
    run.running_average.push_back(prev + (r - prev) / n);
}

inline LearningRun run_centralized(const StackMdp& env, const LearningParams& p, int initial_state) {
    const int n = env.num_states();
    const int m = env.codec().size();
    const int layers = env.stack().layer_count();
    LearningRun run{p.seed, LearningMode::centralized, {}, {}, std::vector<double>(static_cast<std::size_t>(n), 0.0), {}};
    std::vector<double> rho(static_cast<std::size_t>(n) * m, 0.0);
    std::vector<std::uint32_t> visits(static_cast<std::size_t>(n), 0);
    const StepSize alpha{p.alpha, p.alpha_decay};
    UniformStream rng(p.seed);
    int s = initial_state;
    run.trajectory.reserve(static_cast<std::size_t>(p.stages));
    run.running_average.reserve(static_cast<std::size_t>(p.stages));
    for (long k = 0; k < p.stages; ++k) {
        const auto u = stage_uniforms(rng, layers);
        const std::span<double> row(rho.data() + static_cast<std::size_t>(s) * m, static_cast<std::size_t>(m));
        const auto probs = gibbs_softmax(row);
        const int a = sample_index(probs, u[0]);
        const double r = env.reward(s, a);
        const int next = env.sample_next(s, a, std::span(u).subspan(static_cast<std::size_t>(layers)));
        const double delta = td_error_centralized(r, run.values, s, next, p.discount);
        critic_update_centralized(run.values, s, delta, alpha.next(visits[static_cast<std::size_t>(s)]));
        actor_update(row, a, delta, p.beta, probs[static_cast<std::size_t>(a)]);
        require_finite(run.values[static_cast<std::size_t>(s)], k, "critic value");
        require_finite(row[static_cast<std::size_t>(a)], k, "tendency");
        record(run, s, a, r);
        s = next;
    }
    std::vector<int> greedy(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        greedy[static_cast<std::size_t>(x)] = argmax(std::span(rho.data() + static_cast<std::size_t>(x) * m, static_cast<std::size_t>(m)));
    }
    run.greedy = Policy::deterministic(greedy);
    return run;
}

inline LearningRun run_layered(const StackMdp& env, const FrontierCatalog& catalog, const LearningParams& p,
                               int initial_state) {
    const LayeredStack& stack = env.stack();
    const MixedRadix& joint = stack.joint();
    const int n = env.num_states();
    const int layers = stack.layer_count();
    const auto L = static_cast<std::size_t>(layers);
    const Layer& top = stack.top();

    LearningRun run{p.seed, LearningMode::layered, {}, {}, {}, {}};
    LayeredCritics critics{std::vector<double>(static_cast<std::size_t>(n), 0.0), {}};
    std::vector<std::vector<std::uint32_t>> visits(L);  // per table: prefix tables, then full
    for (int l = 1; l < layers; ++l) {
        const auto size = static_cast<std::size_t>(stack.prefix_shape(l).size());
        critics.prefix.emplace_back(size, 0.0);
        visits[static_cast<std::size_t>(l - 1)].assign(size, 0);
    }
    visits[L - 1].assign(static_cast<std::size_t>(n), 0);

    // Top tendencies over (a_L, frontier element) per state; lower ones over a_l.
    std::vector<std::vector<double>> top_rho(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        top_rho[static_cast<std::size_t>(s)].assign(
            static_cast<std::size_t>(top.num_external()) * catalog.at(layers, s).size(), 0.0);
    }
    std::vector<std::vector<double>> lower_rho(L > 0 ? L - 1 : 0);
    for (int l = 1; l < layers; ++l) {
        lower_rho[static_cast<std::size_t>(l - 1)].assign(
            static_cast<std::size_t>(n) * static_cast<std::size_t>(stack.layer(l).num_external()), 0.0);
    }

    const StepSize alpha{p.alpha, p.alpha_decay};
    UniformStream rng(p.seed);
    int s = initial_state;
    run.trajectory.reserve(static_cast<std::size_t>(p.stages));
    run.running_average.reserve(static_cast<std::size_t>(p.stages));
    for (long k = 0; k < p.stages; ++k) {
        const auto u = stage_uniforms(rng, layers);
        const auto state = joint.decode(s);
        const Frontier& frontier = catalog.at(layers, s);
        const int width = static_cast<int>(frontier.size());

        // Each layer samples its own slot.
        JointAction ja;
        std::vector<double> lower_probs(L, 0.0);
        for (int l = 1; l < layers; ++l) {
            const int actions = stack.layer(l).num_external();
            const std::span<double> row(lower_rho[static_cast<std::size_t>(l - 1)].data() + static_cast<std::size_t>(s) * actions,
                                        static_cast<std::size_t>(actions));
            const auto probs = gibbs_softmax(row);
            const int a = sample_index(probs, u[static_cast<std::size_t>(l - 1)]);
            ja.external.push_back(a);
            lower_probs[static_cast<std::size_t>(l - 1)] = probs[static_cast<std::size_t>(a)];
        }
        auto& trow = top_rho[static_cast<std::size_t>(s)];
        const auto top_probs = gibbs_softmax(trow);
        const int choice = sample_index(top_probs, u[L - 1]);
        const int a_top = choice / width;
        const FrontierPoint& z = frontier[static_cast<std::size_t>(choice % width)];
        ja.external.push_back(a_top);
        ja.internal = z.provenance;

        const int a = env.codec().encode(ja);
        const double r = env.reward(s, a);
        const int next = env.sample_next(s, a, std::span(u).subspan(L));

        LayeredStage st{s, next, top.internal_reward(state.back(), z.qos) - top.weighted_external_cost(state.back(), a_top), {}};
        for (int l = 1; l < layers; ++l) {
            const auto i = static_cast<std::size_t>(l - 1);
            st.lower_costs.push_back(stack.layer(l).weighted_external_cost(state[i], ja.external[i]));
        }
        const auto delta = layered_td_errors(st, critics, joint, p.discount);
        const double central = td_error_centralized(r, critics.full, s, next, p.discount);

        std::vector<double> alphas(L);
        for (int l = 1; l < layers; ++l) {
            const auto i = static_cast<std::size_t>(l - 1);
            alphas[i] = alpha.next(visits[i][static_cast<std::size_t>(joint.prefix_index(next, static_cast<std::size_t>(l)))]);
        }
        alphas[L - 1] = alpha.next(visits[L - 1][static_cast<std::size_t>(s)]);
        layered_critic_update(critics, st, delta, central, joint, alphas);

        actor_update(trow, choice, delta[L - 1], p.beta, top_probs[static_cast<std::size_t>(choice)]);
        require_finite(trow[static_cast<std::size_t>(choice)], k, "top tendency");
        for (int l = 1; l < layers; ++l) {
            const auto i = static_cast<std::size_t>(l - 1);
            const int actions = stack.layer(l).num_external();
            std::span<double> row(lower_rho[i].data() + static_cast<std::size_t>(s) * actions, static_cast<std::size_t>(actions));
            actor_update(row, ja.external[i], delta[i], p.beta, lower_probs[i]);
            require_finite(row[static_cast<std::size_t>(ja.external[i])], k, "tendency of layer " + std::to_string(l));
        }
        require_finite(critics.full[static_cast<std::size_t>(s)], k, "critic value");
        for (int l = 1; l < layers; ++l) {
            const auto i = static_cast<std::size_t>(l - 1);
            require_finite(critics.prefix[i][static_cast<std::size_t>(joint.prefix_index(next, static_cast<std::size_t>(l)))], k,
                           "prefix critic " + std::to_string(l));
        }
        record(run, s, a, r);
        s = next;
    }

    std::vector<int> greedy(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        const Frontier& frontier = catalog.at(layers, x);
        const int width = static_cast<int>(frontier.size());
        JointAction ja;
        for (int l = 1; l < layers; ++l) {
            const int actions = stack.layer(l).num_external();
            ja.external.push_back(argmax(std::span(lower_rho[static_cast<std::size_t>(l - 1)].data() + static_cast<std::size_t>(x) * actions,
                                                   static_cast<std::size_t>(actions))));
        }
        const int choice = argmax(top_rho[static_cast<std::size_t>(x)]);
        ja.external.push_back(choice / width);
        ja.internal = frontier[static_cast<std::size_t>(choice % width)].provenance;
        greedy[static_cast<std::size_t>(x)] = env.codec().encode(ja);
    }
    run.values = std::move(critics.full);
    run.greedy = Policy::deterministic(greedy);
    return run;
}

}  // namespace detail

/// Runs K stages of actor-critic learning against the stack's true dynamics.
inline LearningRun run_learning(const StackMdp& env, const FrontierCatalog& catalog, LearningMode mode,
                                const LearningParams& params, int initial_state) {
    if (!(params.alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (!(params.beta >= 0.0)) throw ConfigError("beta must be non-negative");
    require_discount(params.discount);
    if (params.stages < 0) throw ConfigError("stage count must be non-negative");
    if (mode == LearningMode::centralized) return detail::run_centralized(env, params, initial_state);
    return detail::run_layered(env, catalog, params, initial_state);
}

}  // namespace xlmdp::learning
