#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/qos.hpp"
#include "xlmdp/wireless/config.hpp"

namespace xlmdp::wireless {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Bit error rate of M-PSK with order 2^m at transmit power sigma over a
/// channel of the given gain.
inline double ber(double gain_db, int m, double sigma, double kappa) {
    const double arg = kappa * sigma * db_to_linear(gain_db) * std::sin(std::numbers::pi / std::ldexp(1.0, m));
    return std::clamp(std::erfc(arg), 0.0, 1.0);
}

/// Probability that a packet of `bits` bits has at least one bit error.
inline double packet_loss(double bit_error_rate, int bits) {
    if (bit_error_rate >= 1.0) return 1.0;
    return std::clamp(-std::expm1(static_cast<double>(bits) * std::log1p(-bit_error_rate)), 0.0, 1.0);
}

/// PHY internal action b enumerates (modulation, power) with power fastest.
struct PhyAction {
    int modulation;  // index into PhyConfig::modulations
    int power;       // index into PhyConfig::powers_w
};

inline int phy_action_count(const PhyConfig& c) {
    return static_cast<int>(c.modulations.size() * c.powers_w.size());
}

inline PhyAction phy_action(const PhyConfig& c, int b) {
    const int n = static_cast<int>(c.powers_w.size());
    return {b / n, b % n};
}

/// Service of the PHY layer in gain state s_1 under internal action b; the
/// cost component is the weighted transmit power.
inline QosTriple phy_qos(const PhyConfig& c, int s1, int b) {
    const PhyAction a = phy_action(c, b);
    const int m = c.modulations.at(static_cast<std::size_t>(a.modulation));
    const double sigma = c.powers_w.at(static_cast<std::size_t>(a.power));
    const double e = packet_loss(ber(c.gains_db.at(static_cast<std::size_t>(s1)), m, sigma, c.ber_constant), c.packet_bits);
    return {e, c.packet_time_s / m, c.internal_multiplier * sigma};
}

/// Level-crossing rate of the fading envelope at linear gain mu.
inline double crossing_rate(double mu, double mean_gain, double doppler_hz) {
    return std::sqrt(2.0 * std::numbers::pi * mu / mean_gain) * doppler_hz * std::exp(-mu / mean_gain);
}

struct FsmcMatrix {
    Matrix rows;
    std::vector<std::string> warnings;  // entries clamped into [0, 1]
};

/**
 * Adjacent-state Markov chain over the gain levels. Region boundaries are
 * midpoints between neighbouring linear gains (0 and infinity at the ends);
 * a move between neighbours k and k+1 happens with the level-crossing rate
 * at state k+1's representative gain times the step duration, divided by
 * the stationary probability of the region being left.
 */
inline FsmcMatrix phy_transition(const PhyConfig& c) {
    const std::size_t n = c.gains_db.size();
    std::vector<double> g(n), bound(n + 1);
    for (std::size_t k = 0; k < n; ++k) g[k] = db_to_linear(c.gains_db[k]);
    bound[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) bound[k] = 0.5 * (g[k - 1] + g[k]);
    bound[n] = std::numeric_limits<double>::infinity();

    FsmcMatrix out{Matrix(n, std::vector<double>(n, 0.0)), {}};
    auto clamp_entry = [&](double p, std::size_t k, const char* dir) {
        if (p < 0.0 || p > 1.0) {
            out.warnings.push_back("state " + std::to_string(k) + " " + dir + " probability " + csv::real(p) +
                                   " clamped");
            return std::clamp(p, 0.0, 1.0);
        }
        return p;
    };
    for (std::size_t k = 0; k < n; ++k) {
        const double omega = std::exp(-bound[k] / c.mean_gain) - std::exp(-bound[k + 1] / c.mean_gain);
        double up = 0.0, down = 0.0;
        if (k + 1 < n) up = clamp_entry(crossing_rate(g[k + 1], c.mean_gain, c.doppler_hz) * c.fsmc_step_s / omega, k, "up");
        if (k > 0) down = clamp_entry(crossing_rate(g[k], c.mean_gain, c.doppler_hz) * c.fsmc_step_s / omega, k, "down");
        const double stay = 1.0 - up - down;
        if (stay < 0.0) {
            throw ConfigError("phy.fsmc_step_s: state " + std::to_string(k) +
                              " has negative self-transition (step too long for the Doppler rate)");
        }
        if (k > 0) out.rows[k][k - 1] = down;
        out.rows[k][k] = stay;
        if (k + 1 < n) out.rows[k][k + 1] = up;
    }
    return out;
}

}  // namespace xlmdp::wireless
