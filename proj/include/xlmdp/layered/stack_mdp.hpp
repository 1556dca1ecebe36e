#pragma once

#include <span>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/frontier.hpp"
#include "xlmdp/layered/stack.hpp"
#include "xlmdp/mdp/distribution.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp {

/// Per-layer (external, internal) action indices, layer 1 first.
struct JointAction {
    std::vector<int> external;
    std::vector<int> internal;

    friend bool operator==(const JointAction&, const JointAction&) = default;
};

/// Flat numbering of joint actions: digits (a_1, b_1, ..., a_L, b_L), first
/// digit most significant.
class JointActionCodec {
public:
    explicit JointActionCodec(const LayeredStack& stack) {
        std::vector<int> radices;
        for (int l = 1; l <= stack.layer_count(); ++l) {
            radices.push_back(stack.layer(l).num_external());
            radices.push_back(stack.layer(l).num_internal());
        }
        radix_ = MixedRadix(radices);
        layers_ = stack.layer_count();
    }

    int size() const noexcept { return radix_.size(); }

    int encode(const JointAction& a) const {
        if (static_cast<int>(a.external.size()) != layers_ || static_cast<int>(a.internal.size()) != layers_) {
            throw ModelContractError("joint action needs one external and one internal entry per layer");
        }
        std::vector<int> digits;
        for (int l = 0; l < layers_; ++l) {
            digits.push_back(a.external[static_cast<std::size_t>(l)]);
            digits.push_back(a.internal[static_cast<std::size_t>(l)]);
        }
        return radix_.encode(digits);
    }

    JointAction decode(int index) const {
        const auto digits = radix_.decode(index);
        JointAction a;
        for (int l = 0; l < layers_; ++l) {
            a.external.push_back(digits[static_cast<std::size_t>(2 * l)]);
            a.internal.push_back(digits[static_cast<std::size_t>(2 * l + 1)]);
        }
        return a;
    }

private:
    MixedRadix radix_;
    int layers_ = 0;
};

/// Reward of a joint state and joint action, split into its parts.
struct RewardParts {
    double internal = 0.0;       // R_in(s_L, Z); carries the accumulated internal cost
    double external_cost = 0.0;  // sum over layers of lambda^a_l c_l(s_l, a_l)
    double internal_cost = 0.0;  // sum over layers of lambda^b_l d_l(s_l, b_l), equal to Z.cost

    double total() const { return internal - external_cost; }
};

/// Reward model assembled from the stack's layers.
class RewardModel {
public:
    explicit RewardModel(const LayeredStack& stack) : stack_(&stack) {}

    /// Triple offered by the top layer for an internal action profile.
    QosTriple service(std::span<const int> state, std::span<const int> internal) const {
        QosTriple z = stack_->layer(1).base_qos(state[0], internal[0]);
        for (int l = 2; l <= stack_->layer_count(); ++l) {
            const auto i = static_cast<std::size_t>(l - 1);
            z = stack_->layer(l).compose(state[i], internal[i], z);
        }
        return z;
    }

    RewardParts parts(std::span<const int> state, const JointAction& action) const {
        return parts(state, action, service(state, action.internal));
    }

    /// Same as above with the top-layer triple already composed.
    RewardParts parts(std::span<const int> state, const JointAction& action, const QosTriple& z) const {
        RewardParts r;
        r.internal = stack_->top().internal_reward(state.back(), z);
        for (int l = 1; l <= stack_->layer_count(); ++l) {
            const auto i = static_cast<std::size_t>(l - 1);
            r.external_cost += stack_->layer(l).weighted_external_cost(state[i], action.external[i]);
            r.internal_cost += stack_->layer(l).weighted_internal_cost(state[i], action.internal[i]);
        }
        return r;
    }

    double reward(std::span<const int> state, const JointAction& action) const {
        return parts(state, action).total();
    }

private:
    const LayeredStack* stack_;
};

/**
 * The stack seen as one flat MDP over joint states and joint actions.
 *
 * This is the centralized model: rewards and the factored kernel are
 * precomputed per (state, joint action), and expected values are taken over
 * the full product of the layer factors.
 */
class StackMdp {
public:
    explicit StackMdp(const LayeredStack& stack)
        : stack_(&stack), codec_(stack), rewards_model_(stack) {
        const int n = stack.num_states();
        const int m = codec_.size();
        const int top_states = stack.top().num_states();
        lower_count_ = n / top_states;
        top_varies_ = stack.top().spec().top_uses_next_lower;
        const int top_slots = top_varies_ ? lower_count_ : 1;
        const MixedRadix lower_shape = stack.prefix_shape(stack.layer_count() - 1);

        // Lower external profiles: digits a_1..a_{L-1}.
        std::vector<int> lower_ext;
        for (int l = 1; l < stack.layer_count(); ++l) lower_ext.push_back(stack.layer(l).num_external());
        lower_ext_ = MixedRadix(lower_ext);

        lower_profiles_.resize(static_cast<std::size_t>(m));
        for (int a = 0; a < m; ++a) {
            const JointAction ja = codec_.decode(a);
            int e = 0;
            for (int l = 0; l + 1 < stack.layer_count(); ++l) {
                e = e * lower_ext_.radix(static_cast<std::size_t>(l)) + ja.external[static_cast<std::size_t>(l)];
            }
            lower_profiles_[static_cast<std::size_t>(a)] = e;
        }
        rewards_.resize(static_cast<std::size_t>(n) * m);
        top_ids_.resize(static_cast<std::size_t>(n) * m * top_slots);
        lower_dists_.resize(static_cast<std::size_t>(n) * lower_ext_.size());

        for (int s = 0; s < n; ++s) {
            const auto state = stack.joint().decode(s);
            for (int e = 0; e < lower_ext_.size(); ++e) {
                lower_dists_[slot(s, e, lower_ext_.size())] = lower_product(state, lower_ext_.decode(e));
            }
            for (int a = 0; a < m; ++a) {
                const JointAction ja = codec_.decode(a);
                const QosTriple z = rewards_model_.service(state, ja.internal);
                const RewardParts parts = rewards_model_.parts(state, ja, z);
                rewards_[slot(s, a, m)] = parts.total();
                for (int p = 0; p < top_slots; ++p) {
                    const auto next_lower = lower_shape.decode(p);
                    const TopQuery q{state, next_lower, ja.external.back(), z};
                    top_ids_[(slot(s, a, m)) * top_slots + p] = stack.top().top_row_id(q, s, p);
                }
            }
        }
    }

    const LayeredStack& stack() const noexcept { return *stack_; }
    const JointActionCodec& codec() const noexcept { return codec_; }
    const RewardModel& reward_model() const noexcept { return rewards_model_; }

    int num_states() const noexcept { return stack_->num_states(); }
    int num_actions(int) const noexcept { return codec_.size(); }
    ValueTable value_shape() const { return stack_->prefix_table(stack_->layer_count()); }

    double reward(int s, int a) const { return rewards_[slot(s, a, codec_.size())]; }

    double expected_value(int s, int a, std::span<const double> values) const {
        const auto& lower = lower_dists_[slot(s, lower_profile(a), lower_ext_.size())];
        const int top_states = stack_->top().num_states();
        double sum = 0.0;
        for (const auto& o : lower) {
            const SparseDist& top = stack_->top().row(top_id(s, a, o.state));
            double inner = 0.0;
            const std::size_t base = static_cast<std::size_t>(o.state) * static_cast<std::size_t>(top_states);
            for (const auto& t : top) inner += t.prob * values[base + static_cast<std::size_t>(t.state)];
            sum += o.prob * inner;
        }
        return sum;
    }

    /// Full product kernel row over joint next states, in increasing index order.
    SparseDist transition(int s, int a) const {
        SparseDist out;
        const int top_states = stack_->top().num_states();
        for (const auto& o : lower_dists_[slot(s, lower_profile(a), lower_ext_.size())]) {
            for (const auto& t : stack_->top().row(top_id(s, a, o.state))) {
                out.push_back({o.state * top_states + t.state, o.prob * t.prob});
            }
        }
        return out;
    }

    /// Draws the next joint state factor by factor, layer 1 first, one
    /// uniform per layer.
    int sample_next(int s, int a, std::span<const double> uniforms) const {
        const int layers = stack_->layer_count();
        const auto state = stack_->joint().decode(s);
        const JointAction ja = codec_.decode(a);
        int prefix = 0;
        for (int l = 1; l < layers; ++l) {
            const Layer& layer = stack_->layer(l);
            const auto i = static_cast<std::size_t>(l - 1);
            const int next = sample(layer.lower_row(prefix, state[i], ja.external[i]), uniforms[i]);
            prefix = prefix * layer.num_states() + next;
        }
        const SparseDist& top = stack_->top().row(top_id(s, a, prefix));
        return prefix * stack_->top().num_states() + sample(top, uniforms[static_cast<std::size_t>(layers - 1)]);
    }

private:
    static std::size_t slot(int s, int a, int m) {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(m) + static_cast<std::size_t>(a);
    }

    int top_id(int s, int a, int lower_prefix) const {
        const std::size_t base = slot(s, a, codec_.size());
        if (!top_varies_) return top_ids_[base];
        return top_ids_[base * static_cast<std::size_t>(lower_count_) + static_cast<std::size_t>(lower_prefix)];
    }

    /// Index of (a_1..a_{L-1}) within a joint action index.
    int lower_profile(int a) const { return lower_profiles_[static_cast<std::size_t>(a)]; }

    /// Product of the lower layers' factors over s'_1..s'_{L-1}.
    SparseDist lower_product(std::span<const int> state, std::span<const int> external) const {
        SparseDist acc{{0, 1.0}};
        for (int l = 1; l < stack_->layer_count(); ++l) {
            const Layer& layer = stack_->layer(l);
            const auto i = static_cast<std::size_t>(l - 1);
            SparseDist next;
            for (const auto& o : acc) {
                for (const auto& f : layer.lower_row(o.state, state[i], external[i])) {
                    next.push_back({o.state * layer.num_states() + f.state, o.prob * f.prob});
                }
            }
            acc = std::move(next);
        }
        check_stochastic(acc, kProductTolerance, "lower product kernel");
        return acc;
    }

    const LayeredStack* stack_;
    JointActionCodec codec_;
    RewardModel rewards_model_;
    MixedRadix lower_ext_;
    int lower_count_ = 1;
    bool top_varies_ = false;
    std::vector<int> lower_profiles_;
    std::vector<double> rewards_;
    std::vector<int> top_ids_;
    std::vector<SparseDist> lower_dists_;
};

}  // namespace xlmdp
