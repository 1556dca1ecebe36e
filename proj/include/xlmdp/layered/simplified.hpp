#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/frontier.hpp"
#include "xlmdp/layered/stack.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/solvers.hpp"

namespace xlmdp {

/// One service level the top layer may receive, with its prior weight.
struct WeightedQos {
    QosTriple qos;
    double weight;
};

/// Uniform prior over every frontier element of layer L-1, pooled across
/// all prefixes s_1..s_{L-1} (each element of each prefix counts once).
inline std::vector<WeightedQos> uniform_frontier_prior(const LayeredStack& stack, const FrontierCatalog& catalog) {
    if (stack.layer_count() < 2) throw ModelContractError("a service prior needs a layer below the top");
    const int level = stack.layer_count() - 1;
    std::size_t total = 0;
    for (std::size_t p = 0; p < catalog.prefix_count(level); ++p) total += catalog.at(level, static_cast<int>(p)).size();
    if (total == 0) throw EmptyCandidateError("service prior over an empty frontier");
    std::vector<WeightedQos> prior;
    prior.reserve(total);
    for (std::size_t p = 0; p < catalog.prefix_count(level); ++p) {
        for (const auto& e : catalog.at(level, static_cast<int>(p))) {
            prior.push_back({e.qos, 1.0 / static_cast<double>(total)});
        }
    }
    return prior;
}

struct Simplified1Result {
    ValueTable values;          // over the top layer's states
    std::vector<int> external;  // top external action per top state
    bool converged = false;
    int sweeps = 0;
    std::vector<SweepRecord> history;
};

/**
 * Simplification 1: the top layer treats the service it receives as a
 * random triple drawn from `prior` and runs value iteration over its own
 * states only, with its internal action fixed to 0.
 */
inline Simplified1Result simplified1_value_iteration(const Layer& top, const std::vector<WeightedQos>& prior,
                                                     double discount, double tolerance, int max_sweeps = 10000) {
    require_discount(discount);
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (prior.empty()) throw EmptyCandidateError("service prior over an empty frontier");
    double mass = 0.0;
    for (const auto& w : prior) {
        if (!(w.weight >= 0.0)) throw ModelContractError("negative prior weight");
        mass += w.weight;
    }
    if (std::abs(mass - 1.0) > kProductTolerance) throw ModelContractError("service prior does not sum to 1");
    if (!top.is_top()) throw ModelContractError("simplification 1 runs on the top layer");
    if (top.spec().top_uses_lower_state || top.spec().top_uses_next_lower) {
        throw ModelContractError("simplification 1 needs a top transition independent of lower layers");
    }

    const int n = top.num_states();
    const int actions = top.num_external();
    // Per (state, action, prior element): reward and row id.
    std::vector<double> reward(static_cast<std::size_t>(n) * actions * prior.size());
    std::vector<int> rows(reward.size());
    std::vector<int> state(static_cast<std::size_t>(top.position()), 0);
    for (int s = 0; s < n; ++s) {
        state.back() = s;
        for (int a = 0; a < actions; ++a) {
            for (std::size_t k = 0; k < prior.size(); ++k) {
                const QosTriple z = top.position() == 1 ? prior[k].qos : top.compose(s, 0, prior[k].qos);
                const std::size_t i = (static_cast<std::size_t>(s) * actions + static_cast<std::size_t>(a)) * prior.size() + k;
                reward[i] = top.internal_reward(s, z) - top.weighted_external_cost(s, a);
                rows[i] = top.top_row_id(TopQuery{state, {}, a, z}, s, 0);
            }
        }
    }

    const double threshold = stopping_threshold(discount, tolerance);
    std::vector<double> current(static_cast<std::size_t>(n), 0.0), next(current.size());
    Simplified1Result result{ValueTable({top.name()}, {n}), std::vector<int>(current.size(), 0), false, 0, {}};
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < actions; ++a) {
                double q = 0.0;
                for (std::size_t k = 0; k < prior.size(); ++k) {
                    const std::size_t i = (static_cast<std::size_t>(s) * actions + static_cast<std::size_t>(a)) * prior.size() + k;
                    double future = 0.0;
                    for (const auto& o : top.row(rows[i])) future += o.prob * current[static_cast<std::size_t>(o.state)];
                    q += prior[k].weight * (reward[i] + discount * future);
                }
                if (q > best) {
                    best = q;
                    result.external[static_cast<std::size_t>(s)] = a;
                }
            }
            next[static_cast<std::size_t>(s)] = best;
        }
        const double residual = sup_distance(next, current);
        current.swap(next);
        result.history.push_back({sweep, residual, static_cast<long long>(n) * actions * static_cast<long long>(prior.size())});
        result.sweeps = sweep;
        if (residual < threshold) {
            result.converged = true;
            break;
        }
    }
    std::copy(current.begin(), current.end(), result.values.values().begin());
    return result;
}

/**
 * Joint-stack policy that deploys a simplification-1 solution: lower layers
 * play fixed external actions, the service level is drawn uniformly from the
 * current frontier of layer L-1, and the top plays the solved action.
 */
inline Policy simplified1_joint_policy(const LayeredStack& stack, const FrontierCatalog& catalog,
                                       const Simplified1Result& solved, const std::vector<int>& lower_external) {
    const int layers = stack.layer_count();
    if (static_cast<int>(lower_external.size()) != layers - 1) {
        throw ConfigError("need one fixed external action per lower layer");
    }
    const JointActionCodec codec(stack);
    std::vector<std::vector<ActionChoice>> rows;
    rows.reserve(static_cast<std::size_t>(stack.num_states()));
    for (int s = 0; s < stack.num_states(); ++s) {
        const auto state = stack.joint().decode(s);
        const Frontier& frontier = catalog.at(layers - 1, stack.prefix_index(s, layers - 1));
        JointAction ja;
        ja.external = lower_external;
        ja.external.push_back(solved.external[static_cast<std::size_t>(state.back())]);
        std::vector<ActionChoice> row;
        for (const auto& e : frontier) {
            ja.internal = e.provenance;
            ja.internal.push_back(0);
            row.push_back({codec.encode(ja), 1.0 / static_cast<double>(frontier.size())});
        }
        rows.push_back(std::move(row));
    }
    return Policy(std::move(rows));
}

}  // namespace xlmdp
