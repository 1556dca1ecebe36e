#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/frontier.hpp"
#include "xlmdp/layered/messages.hpp"
#include "xlmdp/layered/stack.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/mdp/policy.hpp"
#include "xlmdp/mdp/solvers.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp {

/**
 * How lower layers treat the tables they receive.
 *
 * `exact` keeps one continuation table per top-layer choice all the way
 * down, so the service choice is made before next-stage lower states are
 * known. `collapsed` merges the tables by pointwise maximum at every
 * layer, which lets the service choice depend on next-stage lower states
 * and overestimates the optimal value whenever that matters.
 */
enum class SweepForm { exact, collapsed };

struct LayeredOptions {
    double tolerance = 1e-8;
    int max_sweeps = 10000;
    int min_sweeps = 1;
    SweepForm form = SweepForm::exact;
    std::optional<int> pinned_top_external;  // restricts the top layer's external action
    bool prune_tables = true;                // drop pointwise-dominated continuation tables
    bool verify_preservation = true;         // check every service map before the first sweep
};

/// Decisions of every layer in one joint state.
struct LayeredDecision {
    std::vector<int> external;  // a_1..a_L
    int frontier_index = 0;     // chosen element of the top layer's frontier
    QosTriple service;
    Provenance provenance;      // b_1..b_L behind `service`
};

class LayeredPolicy {
public:
    LayeredPolicy() = default;
    explicit LayeredPolicy(std::vector<LayeredDecision> decisions) : decisions_(std::move(decisions)) {}

    int num_states() const noexcept { return static_cast<int>(decisions_.size()); }
    const LayeredDecision& at(int s) const { return decisions_.at(static_cast<std::size_t>(s)); }

    JointAction joint_action(int s) const { return {at(s).external, at(s).provenance}; }

    /// Expands every decision into a deterministic joint-action policy.
    Policy to_policy(const JointActionCodec& codec) const {
        std::vector<int> actions;
        actions.reserve(decisions_.size());
        for (int s = 0; s < num_states(); ++s) actions.push_back(codec.encode(joint_action(s)));
        return Policy::deterministic(actions);
    }

private:
    std::vector<LayeredDecision> decisions_;
};

/// Agent of a layer below the top: offers its frontier upward and extends
/// continuation tables downward. It sees only its own layer.
class LowerAgent {
public:
    explicit LowerAgent(const Layer& layer) : layer_(&layer) {}

    UpwardMessage offer(std::span<const int> prefix, const UpwardMessage* below) const {
        const int s = prefix.back();
        UpwardMessage m{layer_->position(), {prefix.begin(), prefix.end()}, {}};
        if (below == nullptr) {
            m.frontier = prune_to_frontier(base_candidates(*layer_, s));
        } else {
            m.frontier = prune_to_frontier(compose_candidates(*layer_, s, below->frontier));
        }
        return m;
    }

    /// Sums this layer's next state out of every received table, once per
    /// external action. Output labels are table * num_external + action.
    DownwardMessage extend(int s, const DownwardMessage& above, SweepForm form, bool prune,
                           long long& evaluations) const {
        const int own = layer_->num_states();
        const int actions = layer_->num_external();
        DownwardMessage out{layer_->position(), {above.radices.begin(), above.radices.end() - 1}, {}};
        const int width = MixedRadix(out.radices).size();
        out.tables.reserve(above.tables.size() * static_cast<std::size_t>(actions));
        for (std::size_t j = 0; j < above.tables.size(); ++j) {
            const auto& in = above.tables[j].values;
            for (int a = 0; a < actions; ++a) {
                const double cost = layer_->weighted_external_cost(s, a);
                ContinuationTable t{static_cast<int>(j) * actions + a, std::vector<double>(static_cast<std::size_t>(width))};
                for (int p = 0; p < width; ++p) {
                    double sum = 0.0;
                    for (const auto& o : layer_->lower_row(p, s, a)) {
                        sum += o.prob * in[static_cast<std::size_t>(p * own + o.state)];
                    }
                    t.values[static_cast<std::size_t>(p)] = -cost + sum;
                }
                ++evaluations;
                out.tables.push_back(std::move(t));
            }
        }
        finish(out, form, prune);
        return out;
    }

    const Layer& layer() const noexcept { return *layer_; }

    /// Collapses or prunes (exact) a freshly built message.
    static void finish(DownwardMessage& m, SweepForm form, bool prune) {
        if (m.tables.empty()) return;
        if (form == SweepForm::collapsed) {
            ContinuationTable best{0, m.tables.front().values};
            for (const auto& t : m.tables) {
                for (std::size_t i = 0; i < best.values.size(); ++i) {
                    best.values[i] = std::max(best.values[i], t.values[i]);
                }
            }
            m.tables.assign(1, std::move(best));
            return;
        }
        if (!prune || m.tables.size() < 2) return;
        std::vector<bool> dropped(m.tables.size(), false);
        for (std::size_t i = 0; i < m.tables.size(); ++i) {
            for (std::size_t k = 0; k < m.tables.size() && !dropped[i]; ++k) {
                if (k == i || dropped[k]) continue;
                // k covers i when k >= i everywhere; among equal tables the
                // earlier one survives.
                bool covers = true, equal = true;
                const auto& vi = m.tables[i].values;
                const auto& vk = m.tables[k].values;
                for (std::size_t x = 0; x < vi.size() && covers; ++x) {
                    covers = vk[x] >= vi[x];
                    equal = equal && vk[x] == vi[x];
                }
                if (covers && (!equal || k < i)) dropped[i] = true;
            }
        }
        std::vector<ContinuationTable> kept;
        for (std::size_t i = 0; i < m.tables.size(); ++i) {
            if (!dropped[i]) kept.push_back(std::move(m.tables[i]));
        }
        m.tables = std::move(kept);
    }

private:
    const Layer* layer_;
};

/// Agent of the top layer: picks the external action and the service level,
/// and owns the full-state value table of the previous sweep.
class TopAgent {
public:
    struct Candidate {
        int external;
        int frontier_index;
        double reward;  // R_in(s_L, Z) - lambda^a c_L(s_L, a_L)
    };

    /// Candidates sharing a transition row (per next lower prefix) differ
    /// only in reward; the best one speaks for the group.
    struct Group {
        int candidate;
        double reward;
        std::vector<int> rows;  // one row id, or one per next lower prefix
    };

    struct Plan {
        Frontier frontier;
        std::vector<Candidate> candidates;
        std::vector<Group> groups;
    };

    TopAgent(const Layer& layer, std::vector<int> lower_radices)
        : layer_(&layer), lower_shape_(std::move(lower_radices)) {}

    Frontier offer(std::span<const int> state, const UpwardMessage* below) const {
        const int s = state.back();
        if (below == nullptr) return prune_to_frontier(base_candidates(*layer_, s));
        return prune_to_frontier(compose_candidates(*layer_, s, below->frontier));
    }

    Plan plan(std::span<const int> state, int state_index, const UpwardMessage* below,
              std::optional<int> pinned) const {
        Plan plan;
        plan.frontier = offer(state, below);
        const int s = state.back();
        const bool per_prefix = layer_->spec().top_uses_next_lower;
        const int slots = per_prefix ? lower_shape_.size() : 1;
        std::map<std::vector<int>, std::size_t> by_rows;
        for (int a = 0; a < layer_->num_external(); ++a) {
            if (pinned && a != *pinned) continue;
            const double cost = layer_->weighted_external_cost(s, a);
            for (int k = 0; k < static_cast<int>(plan.frontier.size()); ++k) {
                const QosTriple& z = plan.frontier[static_cast<std::size_t>(k)].qos;
                const Candidate c{a, k, layer_->internal_reward(s, z) - cost};
                std::vector<int> rows;
                for (int p = 0; p < slots; ++p) {
                    const auto next_lower = lower_shape_.decode(p);
                    rows.push_back(layer_->top_row_id(TopQuery{state, next_lower, a, z}, state_index, p));
                }
                const int index = static_cast<int>(plan.candidates.size());
                plan.candidates.push_back(c);
                auto [it, inserted] = by_rows.try_emplace(rows, plan.groups.size());
                if (inserted) {
                    plan.groups.push_back({index, c.reward, std::move(rows)});
                } else if (c.reward > plan.groups[it->second].reward) {
                    plan.groups[it->second].candidate = index;
                    plan.groups[it->second].reward = c.reward;
                }
            }
        }
        if (plan.candidates.empty()) throw ModelContractError("top layer has no admissible choice");
        return plan;
    }

    /// Continuation tables over next lower prefixes, one per group.
    DownwardMessage tables(const Plan& plan, std::span<const double> values, double discount, SweepForm form,
                           bool prune, long long& evaluations) const {
        const int width = lower_shape_.size();
        const int own = layer_->num_states();
        DownwardMessage out{layer_->position(), lower_shape_.radices(), {}};
        out.tables.reserve(plan.groups.size());
        for (std::size_t g = 0; g < plan.groups.size(); ++g) {
            const Group& group = plan.groups[g];
            ContinuationTable t{static_cast<int>(g), std::vector<double>(static_cast<std::size_t>(width))};
            for (int p = 0; p < width; ++p) {
                const SparseDist& row = layer_->row(group.rows[group.rows.size() == 1 ? 0 : static_cast<std::size_t>(p)]);
                double future = 0.0;
                for (const auto& o : row) future += o.prob * values[static_cast<std::size_t>(p * own + o.state)];
                t.values[static_cast<std::size_t>(p)] = group.reward + discount * future;
            }
            out.tables.push_back(std::move(t));
        }
        evaluations += static_cast<long long>(plan.candidates.size());
        LowerAgent::finish(out, form, prune);
        return out;
    }

    const Layer& layer() const noexcept { return *layer_; }

private:
    const Layer* layer_;
    MixedRadix lower_shape_;
};

struct LayeredResult {
    ValueTable values;
    LayeredPolicy policy;
    bool converged = false;
    int sweeps = 0;
    double residual = 0.0;
    std::vector<SweepRecord> history;
};

/// Messages of one state's backup: frontiers of layers 1..L-1 and the
/// tables sent by layers L..2.
struct MessageRound {
    std::vector<UpwardMessage> upward;
    std::vector<DownwardMessage> downward;
};

/**
 * Layered value iteration. Each sweep visits every joint state; in each
 * state the top agent builds continuation tables from the previous sweep's
 * values and the layers below extend them in turn, layer 1 taking the final
 * maximum. All inter-layer data travels in UpwardMessage and
 * DownwardMessage objects.
 */
class LayeredValueIteration {
public:
    LayeredValueIteration(const LayeredStack& stack, LayeredOptions options = {})
        : stack_(&stack), options_(options),
          top_(stack.top(), stack.prefix_shape(stack.layer_count() - 1).radices()) {
        for (int l = 1; l < stack.layer_count(); ++l) lower_.emplace_back(stack.layer(l));
        if (options_.pinned_top_external &&
            (*options_.pinned_top_external < 0 || *options_.pinned_top_external >= stack.top().num_external())) {
            throw ConfigError("pinned top external action out of range");
        }
        if (options_.verify_preservation) (void)FrontierCatalog(stack, true);
        build_upward();
        plans_.reserve(static_cast<std::size_t>(stack.num_states()));
        for (int s = 0; s < stack.num_states(); ++s) {
            const auto state = stack.joint().decode(s);
            plans_.push_back(top_.plan(state, s, upward_below_top(s), options_.pinned_top_external));
        }
    }

    const TopAgent::Plan& plan(int s) const { return plans_.at(static_cast<std::size_t>(s)); }

    /// Frontier message of layer l (< L) for the prefix of joint state s.
    const UpwardMessage& upward(int l, int s) const {
        return upward_.at(static_cast<std::size_t>(l - 1)).at(static_cast<std::size_t>(stack_->prefix_index(s, l)));
    }

    LayeredResult run(double discount) const {
        require_discount(discount);
        if (!(options_.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
        if (options_.max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
        const int n = stack_->num_states();
        const double threshold = stopping_threshold(discount, options_.tolerance);
        std::vector<double> current(static_cast<std::size_t>(n), 0.0), next(current.size());
        std::vector<LayeredDecision> decisions(current.size());
        LayeredResult result{stack_->prefix_table(stack_->layer_count()), {}, false, 0, 0.0, {}};

        for (int sweep = 1; sweep <= options_.max_sweeps; ++sweep) {
            long long evaluations = 0;
            for (int s = 0; s < n; ++s) {
                const auto backup = backup_state(s, current, discount, options_.form, evaluations, nullptr);
                next[static_cast<std::size_t>(s)] = backup.first;
                decisions[static_cast<std::size_t>(s)] = backup.second;
            }
            const double residual = sup_distance(next, current);
            current.swap(next);
            result.history.push_back({sweep, residual, evaluations});
            result.sweeps = sweep;
            result.residual = residual;
            if (sweep >= options_.min_sweeps && residual < threshold) {
                result.converged = true;
                break;
            }
        }
        if (options_.form == SweepForm::collapsed) {
            // Greedy decisions with respect to the collapsed values.
            long long ignored = 0;
            for (int s = 0; s < n; ++s) {
                decisions[static_cast<std::size_t>(s)] =
                    backup_state(s, current, discount, SweepForm::exact, ignored, nullptr).second;
            }
        }
        std::copy(current.begin(), current.end(), result.values.values().begin());
        result.policy = LayeredPolicy(std::move(decisions));
        return result;
    }

    /// Messages exchanged while backing up state s against `values`.
    MessageRound exchange_messages(int s, std::span<const double> values, double discount) const {
        MessageRound round;
        for (int l = 1; l < stack_->layer_count(); ++l) round.upward.push_back(upward(l, s));
        long long ignored = 0;
        backup_state(s, values, discount, options_.form, ignored, &round.downward);
        return round;
    }

private:
    void build_upward() {
        upward_.resize(lower_.size());
        for (int l = 1; l < stack_->layer_count(); ++l) {
            const MixedRadix shape = stack_->prefix_shape(l);
            auto& level = upward_[static_cast<std::size_t>(l - 1)];
            for (int p = 0; p < shape.size(); ++p) {
                const auto prefix = shape.decode(p);
                const UpwardMessage* below =
                    l == 1 ? nullptr
                           : &upward_[static_cast<std::size_t>(l - 2)][static_cast<std::size_t>(p / shape.radix(static_cast<std::size_t>(l - 1)))];
                level.push_back(lower_[static_cast<std::size_t>(l - 1)].offer(prefix, below));
            }
        }
    }

    const UpwardMessage* upward_below_top(int s) const {
        if (stack_->layer_count() == 1) return nullptr;
        return &upward(stack_->layer_count() - 1, s);
    }

    std::pair<double, LayeredDecision> backup_state(int s, std::span<const double> values, double discount,
                                                    SweepForm form, long long& evaluations,
                                                    std::vector<DownwardMessage>* trace) const {
        const int layers = stack_->layer_count();
        const auto state = stack_->joint().decode(s);
        const TopAgent::Plan& plan = plans_[static_cast<std::size_t>(s)];

        std::vector<DownwardMessage> messages;  // messages[i] was sent by layer L - i
        messages.reserve(static_cast<std::size_t>(layers));
        messages.push_back(top_.tables(plan, values, discount, form, options_.prune_tables, evaluations));
        for (int l = layers - 1; l >= 1; --l) {
            const auto& agent = lower_[static_cast<std::size_t>(l - 1)];
            messages.push_back(agent.extend(state[static_cast<std::size_t>(l - 1)], messages.back(), form,
                                            options_.prune_tables, evaluations));
        }
        // The last message holds scalars (tables over the empty prefix).
        const DownwardMessage& final_tables = messages.back();
        std::size_t best = 0;
        for (std::size_t i = 1; i < final_tables.tables.size(); ++i) {
            if (final_tables.tables[i].values[0] > final_tables.tables[best].values[0]) best = i;
        }
        const double value = final_tables.tables[best].values[0];

        LayeredDecision d;
        d.external.assign(static_cast<std::size_t>(layers), 0);
        if (form == SweepForm::exact) {
            // Follow the labels back up to the top layer's group.
            int label = final_tables.tables[best].label;
            for (int l = 1; l < layers; ++l) {
                const int actions = stack_->layer(l).num_external();
                d.external[static_cast<std::size_t>(l - 1)] = label % actions;
                const int parent = label / actions;
                label = messages[static_cast<std::size_t>(layers - 1 - l)].tables[static_cast<std::size_t>(parent)].label;
            }
            const TopAgent::Candidate& c =
                plan.candidates[static_cast<std::size_t>(plan.groups[static_cast<std::size_t>(label)].candidate)];
            d.external.back() = c.external;
            d.frontier_index = c.frontier_index;
            d.service = plan.frontier[static_cast<std::size_t>(c.frontier_index)].qos;
            d.provenance = plan.frontier[static_cast<std::size_t>(c.frontier_index)].provenance;
        }
        if (trace) {
            messages.pop_back();  // layer 1 sends nothing down
            *trace = std::move(messages);
        }
        return {value, std::move(d)};
    }

    const LayeredStack* stack_;
    LayeredOptions options_;
    TopAgent top_;
    std::vector<LowerAgent> lower_;
    std::vector<std::vector<UpwardMessage>> upward_;
    std::vector<TopAgent::Plan> plans_;
};

inline LayeredResult layered_value_iteration(const LayeredStack& stack, double discount, LayeredOptions options = {}) {
    return LayeredValueIteration(stack, options).run(discount);
}

/// Simplification 2: the top layer's external action is held fixed and it
/// only chooses among service levels; lower layers are unchanged.
inline LayeredResult simplified2_value_iteration(const LayeredStack& stack, int pinned_top_external,
                                                 double discount, LayeredOptions options = {}) {
    options.pinned_top_external = pinned_top_external;
    options.form = SweepForm::exact;
    return LayeredValueIteration(stack, options).run(discount);
}

struct FrontierEquivalence {
    bool passed = true;
    double frontier_max = 0.0;
    double exhaustive_max = 0.0;
    Provenance witness;  // profile attaining the exhaustive maximum
};

/// Compares the best internal reward over the top frontier with the best
/// over every internal action profile in joint state s.
inline FrontierEquivalence frontier_equivalence_check(const LayeredStack& stack, const FrontierCatalog& catalog,
                                                      int s, double tolerance = 1e-12) {
    const auto state = stack.joint().decode(s);
    const int s_top = state.back();
    const Layer& top = stack.top();
    FrontierEquivalence v;
    v.frontier_max = -std::numeric_limits<double>::infinity();
    for (const auto& p : catalog.at(stack.layer_count(), s)) {
        v.frontier_max = std::max(v.frontier_max, top.internal_reward(s_top, p.qos));
    }
    std::vector<int> radices;
    for (int l = 1; l <= stack.layer_count(); ++l) radices.push_back(stack.layer(l).num_internal());
    const MixedRadix profiles(radices);
    const RewardModel model(stack);
    v.exhaustive_max = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < profiles.size(); ++b) {
        const auto profile = profiles.decode(b);
        const double r = top.internal_reward(s_top, model.service(state, profile));
        if (r > v.exhaustive_max) {
            v.exhaustive_max = r;
            v.witness = profile;
        }
    }
    v.passed = std::abs(v.frontier_max - v.exhaustive_max) <= tolerance;
    return v;
}

}  // namespace xlmdp
