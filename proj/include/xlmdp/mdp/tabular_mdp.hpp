#pragma once

#include <span>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/mdp/distribution.hpp"

namespace xlmdp {

/// Explicit finite MDP with a sparse successor list per (state, action).
class TabularMdp {
public:
    TabularMdp(int num_states, int num_actions)
        : num_states_(num_states),
          num_actions_(num_actions),
          rewards_(static_cast<std::size_t>(num_states) * num_actions, 0.0),
          next_(static_cast<std::size_t>(num_states) * num_actions) {
        if (num_states < 1 || num_actions < 1) throw ModelContractError("empty tabular MDP");
    }

    void set(int s, int a, double reward, SparseDist next) {
        check_stochastic(next, kRowTolerance,
                         "transition (" + std::to_string(s) + ", " + std::to_string(a) + ")");
        for (const auto& o : next) {
            if (o.state < 0 || o.state >= num_states_) throw ModelContractError("successor out of range");
        }
        rewards_[slot(s, a)] = reward;
        next_[slot(s, a)] = std::move(next);
    }

    int num_states() const noexcept { return num_states_; }
    int num_actions(int) const noexcept { return num_actions_; }
    double reward(int s, int a) const { return rewards_[slot(s, a)]; }
    const SparseDist& transition(int s, int a) const { return next_[slot(s, a)]; }

    double expected_value(int s, int a, std::span<const double> values) const {
        double sum = 0.0;
        for (const auto& o : next_[slot(s, a)]) sum += o.prob * values[static_cast<std::size_t>(o.state)];
        return sum;
    }

private:
    std::size_t slot(int s, int a) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) + static_cast<std::size_t>(a);
    }

    int num_states_;
    int num_actions_;
    std::vector<double> rewards_;
    std::vector<SparseDist> next_;
};

}  // namespace xlmdp
