#pragma once

#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/layer_spec.hpp"
#include "xlmdp/mdp/state_space.hpp"
#include "xlmdp/mdp/value_table.hpp"

namespace xlmdp {

/// Ordered list of compiled layers (layer 1 first) and the joint state layout.
class LayeredStack {
public:
    explicit LayeredStack(std::vector<LayerSpec> specs) {
        if (specs.empty()) throw ModelContractError("a stack needs at least one layer");
        const int count = static_cast<int>(specs.size());
        std::vector<int> radices;
        for (int l = 0; l < count; ++l) {
            const int states = specs[static_cast<std::size_t>(l)].num_states;
            layers_.emplace_back(std::move(specs[static_cast<std::size_t>(l)]), l + 1, count, radices);
            radices.push_back(states);
            names_.push_back(layers_.back().name());
        }
        joint_ = MixedRadix(radices);
    }

    int layer_count() const noexcept { return static_cast<int>(layers_.size()); }
    /// Layer at 1-based position l.
    const Layer& layer(int l) const { return layers_.at(static_cast<std::size_t>(l - 1)); }
    const Layer& top() const { return layers_.back(); }

    const MixedRadix& joint() const noexcept { return joint_; }
    int num_states() const noexcept { return joint_.size(); }

    /// Layout of the prefix covering layers 1..length.
    MixedRadix prefix_shape(int length) const { return joint_.prefix(static_cast<std::size_t>(length)); }
    int prefix_index(int state, int length) const {
        return joint_.prefix_index(state, static_cast<std::size_t>(length));
    }

    const std::vector<std::string>& layer_names() const noexcept { return names_; }

    /// Empty value table over the prefix of layers 1..length.
    ValueTable prefix_table(int length, double fill = 0.0) const {
        const auto l = static_cast<std::size_t>(length);
        return ValueTable(std::vector<std::string>(names_.begin(), names_.begin() + static_cast<long>(l)),
                          prefix_shape(length).radices(), fill);
    }

private:
    std::vector<Layer> layers_;
    std::vector<std::string> names_;
    MixedRadix joint_;
};

}  // namespace xlmdp
