#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/mdp/distribution.hpp"

namespace xlmdp {

struct ActionChoice {
    int action;
    double prob;

    friend bool operator==(const ActionChoice&, const ActionChoice&) = default;
};

/// Stationary Markov policy: per state, a probability vector over actions
/// kept sparse. A deterministic policy has one entry of mass 1 per state.
class Policy {
public:
    Policy() = default;
    explicit Policy(std::vector<std::vector<ActionChoice>> rows) : rows_(std::move(rows)) {}

    static Policy deterministic(const std::vector<int>& actions) {
        std::vector<std::vector<ActionChoice>> rows;
        rows.reserve(actions.size());
        for (int a : actions) rows.push_back({{a, 1.0}});
        return Policy(std::move(rows));
    }

    int num_states() const noexcept { return static_cast<int>(rows_.size()); }
    const std::vector<ActionChoice>& row(int s) const { return rows_.at(static_cast<std::size_t>(s)); }
    const std::vector<std::vector<ActionChoice>>& rows() const noexcept { return rows_; }

    bool is_deterministic() const {
        for (const auto& r : rows_) {
            if (r.size() != 1) return false;
        }
        return true;
    }

    /// Action of a deterministic row; throws for a mixed row.
    int action(int s) const {
        const auto& r = row(s);
        if (r.size() != 1) throw InvalidPolicyError("state " + std::to_string(s) + " has a mixed row");
        return r.front().action;
    }

    /// Checks coverage, action ranges and that each row is a probability vector.
    template <class ActionCount>
    void validate(int num_states, ActionCount&& num_actions) const {
        if (this->num_states() != num_states) {
            throw PolicyCoverageError("policy covers " + std::to_string(this->num_states()) +
                                      " states, model has " + std::to_string(num_states));
        }
        for (int s = 0; s < num_states; ++s) {
            const auto& r = row(s);
            if (r.empty()) throw PolicyCoverageError("policy has no action for state " + std::to_string(s));
            double mass = 0.0;
            for (const auto& c : r) {
                if (c.action < 0 || c.action >= num_actions(s)) {
                    throw InvalidPolicyError("state " + std::to_string(s) + ": action " +
                                             std::to_string(c.action) + " out of range");
                }
                if (!(c.prob >= 0.0 && c.prob <= 1.0)) {
                    throw InvalidPolicyError("state " + std::to_string(s) + ": probability out of [0, 1]");
                }
                mass += c.prob;
            }
            if (std::abs(mass - 1.0) > kRowTolerance) {
                throw InvalidPolicyError("state " + std::to_string(s) + ": row sums to " +
                                         std::to_string(mass));
            }
        }
    }

private:
    std::vector<std::vector<ActionChoice>> rows_;
};

}  // namespace xlmdp
