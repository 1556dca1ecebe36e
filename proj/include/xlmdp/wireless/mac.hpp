#pragma once

#include <cmath>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/qos.hpp"
#include "xlmdp/mdp/distribution.hpp"
#include "xlmdp/wireless/config.hpp"

namespace xlmdp::wireless {

/**
 * Truncated ARQ over a time-slotted MAC: a packet is sent up to
 * retry_limit + 1 times and the station holds a fraction `allocation` of the
 * stage. Loss is the chance that every attempt fails; time is the expected
 * number of attempts times the per-attempt time, stretched by the share.
 * The cost component passes through.
 */
inline QosTriple mac_qos(const QosTriple& lower, double allocation, int retry_limit,
                         MacTimeForm form = MacTimeForm::corrected) {
    if (!(allocation > 0.0)) throw ModelContractError("MAC allocation state must be positive");
    if (retry_limit < 0) throw ModelContractError("negative retry limit");
    const double e = lower.loss;
    // Expected attempts: sum of e^i over the attempts that can happen.
    const int terms = form == MacTimeForm::corrected ? retry_limit + 1 : retry_limit;
    double attempts = 0.0;
    double power = 1.0;
    for (int i = 0; i < terms; ++i) {
        attempts += power;
        power *= e;
    }
    return {std::pow(e, retry_limit + 1), attempts * lower.time / allocation, lower.cost};
}

/// Row of the bid-controlled allocation chain.
inline SparseDist mac_transition(const MacConfig& c, int s2, int bid) {
    if (bid < 0 || bid >= static_cast<int>(c.transitions.size())) {
        throw ConfigError("mac.transition_bid_" + std::to_string(bid) + ": missing matrix");
    }
    return sparse_from_dense(c.transitions[static_cast<std::size_t>(bid)].at(static_cast<std::size_t>(s2)));
}

}  // namespace xlmdp::wireless
