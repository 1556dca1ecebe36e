#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/qos.hpp"
#include "xlmdp/mdp/distribution.hpp"
#include "xlmdp/mdp/state_space.hpp"
#include "xlmdp/wireless/config.hpp"

namespace xlmdp::wireless {

/// Packet counts by remaining lifetime; entry 0 expires after this stage.
using AppState = std::vector<int>;

/// APP states enumerate (s_{3,1}, ..., s_{3,J}) with lifetime 1 most significant.
inline MixedRadix app_states(const AppConfig& c) {
    return MixedRadix(std::vector<int>(static_cast<std::size_t>(c.lifetime), c.buffer_cap + 1));
}

/// Packets the granted service can carry in one stage. A tiny slack absorbs
/// rounding in quotients that are integers in exact arithmetic.
inline int app_throughput(const QosTriple& z, double stage_s) {
    if (z.loss >= 1.0) return 0;
    if (!(z.time > 0.0)) throw ModelContractError("service time must be positive");
    const double v = std::floor(stage_s * (1.0 - z.loss) / z.time + 1e-9);
    return v > 0.0 ? static_cast<int>(std::min(v, 1e9)) : 0;
}

struct AppStep {
    AppState next;
    int transmitted = 0;
    int expired = 0;
};

/// Earliest-deadline-first service of up to v packets, then aging; arrivals
/// fill the longest-lifetime slot, clamped at the cap.
inline AppStep app_step(std::span<const int> s3, int v, int arrivals, int cap) {
    const std::size_t j = s3.size();
    AppState left(s3.begin(), s3.end());
    int budget = std::max(v, 0);
    AppStep out;
    for (std::size_t i = 0; i < j; ++i) {
        const int served = std::min(budget, left[i]);
        left[i] -= served;
        budget -= served;
        out.transmitted += served;
    }
    out.expired = left[0];
    out.next.assign(j, 0);
    for (std::size_t i = 0; i + 1 < j; ++i) out.next[i] = std::clamp(left[i + 1], 0, cap);
    out.next[j - 1] = std::clamp(std::max(arrivals, 0), 0, cap);
    return out;
}

/// Poisson probabilities on 0..cap with the tail mass folded into cap.
inline std::vector<double> truncated_poisson(double mean, int cap) {
    std::vector<double> pmf(static_cast<std::size_t>(cap) + 1, 0.0);
    double term = std::exp(-mean);
    double below = 0.0;
    for (int y = 0; y < cap; ++y) {
        pmf[static_cast<std::size_t>(y)] = term;
        below += term;
        term *= mean / (y + 1);
    }
    pmf[static_cast<std::size_t>(cap)] = std::max(0.0, 1.0 - below);
    return pmf;
}

/// Distribution of the next APP state index given capacity v.
inline SparseDist app_transition(const AppConfig& c, std::span<const int> s3, double arrival_mean, int v) {
    const MixedRadix states = app_states(c);
    const auto pmf = truncated_poisson(arrival_mean, c.buffer_cap);
    std::vector<double> mass(static_cast<std::size_t>(states.size()), 0.0);
    for (int y = 0; y <= c.buffer_cap; ++y) {
        const double p = pmf[static_cast<std::size_t>(y)];
        if (p == 0.0) continue;
        mass[static_cast<std::size_t>(states.encode(app_step(s3, v, y, c.buffer_cap).next))] += p;
    }
    return sparse_from_dense(mass);
}

/// Stage gain of the application: packets delivered minus a penalty per
/// packet whose deadline passes unserved. The capacity-bonus variant instead adds
/// lambda_g * max(v - s_{3,1}, 0) to the capacity.
inline double app_gain(std::span<const int> s3, int v, double loss_tradeoff, GainForm form = GainForm::lost_packets) {
    if (form == GainForm::capacity_bonus) {
        return static_cast<double>(v) - loss_tradeoff * std::min(s3[0] - v, 0);
    }
    const AppStep step = app_step(s3, v, 0, std::numeric_limits<int>::max());
    return static_cast<double>(step.transmitted) - loss_tradeoff * static_cast<double>(step.expired);
}

/// R_in of the APP layer: gain less the cost carried in the triple.
inline double app_internal_reward(const AppConfig& c, std::span<const int> s3, const QosTriple& z) {
    return app_gain(s3, app_throughput(z, c.stage_s), c.loss_tradeoff, c.gain_form) - z.cost;
}

}  // namespace xlmdp::wireless
