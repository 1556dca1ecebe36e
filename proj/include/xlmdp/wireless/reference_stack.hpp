#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "xlmdp/layered/stack.hpp"
#include "xlmdp/wireless/app.hpp"
#include "xlmdp/wireless/config.hpp"
#include "xlmdp/wireless/mac.hpp"
#include "xlmdp/wireless/phy.hpp"

namespace xlmdp::wireless {

/// A built stack plus what rollouts need to start from.
struct StackModel {
    LayeredStack stack;
    int initial_state = 0;
    std::vector<std::string> warnings;
};

inline LayerSpec phy_layer(const PhyConfig& c, std::vector<std::string>& warnings) {
    auto fsmc = std::make_shared<FsmcMatrix>(phy_transition(c));
    warnings.insert(warnings.end(), fsmc->warnings.begin(), fsmc->warnings.end());
    LayerSpec l;
    l.name = "phy";
    l.num_states = static_cast<int>(c.gains_db.size());
    l.num_internal = phy_action_count(c);
    l.internal_multiplier = c.internal_multiplier;
    l.internal_cost = [c](int, int b) { return c.powers_w[static_cast<std::size_t>(phy_action(c, b).power)]; };
    l.base_service = [c](int s, int b) {
        const QosTriple z = phy_qos(c, s, b);
        return Service{z.loss, z.time};
    };
    l.transition = [fsmc](std::span<const int>, int s, int) {
        return sparse_from_dense(fsmc->rows[static_cast<std::size_t>(s)]);
    };
    return l;
}

inline LayerSpec mac_layer(const MacConfig& c) {
    LayerSpec l;
    l.name = "mac";
    l.num_states = static_cast<int>(c.allocations.size());
    l.num_external = static_cast<int>(c.bids.size());
    l.num_internal = c.max_retries + 1;
    l.external_multiplier = c.external_multiplier;
    l.external_cost = [c](int, int a) { return c.bids[static_cast<std::size_t>(a)]; };
    l.service = [c](int s, int b, const QosTriple& lower) {
        const QosTriple z = mac_qos(lower, c.allocations[static_cast<std::size_t>(s)], b, c.time_form);
        return Service{z.loss, z.time};
    };
    l.transition = [c](std::span<const int>, int s, int a) { return mac_transition(c, s, a); };
    return l;
}

/// APP layer with arrival-rate control; no internal action of its own.
inline LayerSpec app_layer(const AppConfig& c) {
    const MixedRadix states = app_states(c);
    LayerSpec l;
    l.name = "app";
    l.num_states = states.size();
    l.num_external = static_cast<int>(c.arrival_means.size());
    l.service = [](int, int, const QosTriple& lower) { return Service{lower.loss, lower.time}; };
    l.internal_reward = [c, states](int s, const QosTriple& z) {
        return app_internal_reward(c, states.decode(s), z);
    };
    // Capacity beyond the largest possible backlog behaves the same.
    const int saturation = c.lifetime * c.buffer_cap;
    l.top_transition = [c, states, saturation](const TopQuery& q) {
        const int v = std::min(app_throughput(q.service, c.stage_s), saturation);
        return app_transition(c, states.decode(q.state.back()), c.arrival_means[static_cast<std::size_t>(q.external)], v);
    };
    l.top_transition_key = [c, saturation](const TopQuery& q) {
        const auto v = static_cast<std::uint64_t>(std::min(app_throughput(q.service, c.stage_s), saturation));
        return (static_cast<std::uint64_t>(q.state.back()) << 40) | (static_cast<std::uint64_t>(q.external) << 20) | v;
    };
    return l;
}

inline StackModel reference_model(const StackConfig& c) {
    std::vector<std::string> warnings;
    std::vector<LayerSpec> specs;
    specs.push_back(phy_layer(c.phy, warnings));
    specs.push_back(mac_layer(c.mac));
    specs.push_back(app_layer(c.app));
    LayeredStack stack(std::move(specs));
    const std::vector<int> s0{c.solver.initial_phy, c.solver.initial_mac, 0};
    const int initial = stack.joint().encode(s0);
    return {std::move(stack), initial, std::move(warnings)};
}

/**
 * Two-layer toy: a channel that is good (1) or bad (0). The external action
 * requests the next channel state and is honoured with probability 0.9;
 * requesting the good one costs 0.2. A one-state application on top earns
 * 1 - loss - cost, and a bad channel loses every packet. At gamma = 0.9
 * the best policy requests the good channel everywhere; the myopic one never does.
 */
inline StackModel toy_model() {
    LayerSpec chan;
    chan.name = "chan";
    chan.num_states = 2;
    chan.num_external = 2;
    chan.external_multiplier = 1.0;
    chan.external_cost = [](int, int a) { return 0.2 * a; };
    chan.base_service = [](int s, int) { return Service{s == 1 ? 0.0 : 1.0, 1.0}; };
    chan.transition = [](std::span<const int>, int, int a) {
        return a == 0 ? SparseDist{{0, 0.9}, {1, 0.1}} : SparseDist{{0, 0.1}, {1, 0.9}};
    };

    LayerSpec app;
    app.name = "app";
    app.service = [](int, int, const QosTriple& lower) { return Service{lower.loss, lower.time}; };
    app.internal_reward = [](int, const QosTriple& z) { return 1.0 - z.loss - z.cost; };
    app.top_transition = [](const TopQuery&) { return SparseDist{{0, 1.0}}; };

    std::vector<LayerSpec> specs;
    specs.push_back(std::move(chan));
    specs.push_back(std::move(app));
    return {LayeredStack(std::move(specs)), 0, {}};
}

inline StackModel build_model(const StackConfig& c) {
    return c.solver.model == ModelKind::toy ? toy_model() : reference_model(c);
}

/// Stage reward of the reference stack written directly in wireless terms:
/// application gain, less the power cost carried in Z, less the bid cost.
inline double stage_reward(const StackConfig& c, std::span<const int> s3, const QosTriple& z, int bid) {
    const int v = app_throughput(z, c.app.stage_s);
    return app_gain(s3, v, c.app.loss_tradeoff, c.app.gain_form) - z.cost -
           c.mac.external_multiplier * c.mac.bids[static_cast<std::size_t>(bid)];
}

}  // namespace xlmdp::wireless
