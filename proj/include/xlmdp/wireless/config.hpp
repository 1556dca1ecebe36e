#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "xlmdp/csv.hpp"
#include "xlmdp/errors.hpp"
#include "xlmdp/mdp/distribution.hpp"

namespace xlmdp::wireless {

using Matrix = std::vector<std::vector<double>>;

struct PhyConfig {
    std::vector<double> gains_db{-8, -6, -4, -2, 0, 2, 4, 6, 8};
    double mean_gain = 1.0;  // average linear channel gain
    double doppler_hz = 50.0;
    double packet_time_s = 0.8e-3;
    double fsmc_step_s = 0.8e-3;  // duration factor of the level-crossing transitions
    std::vector<int> modulations{1, 2, 3, 4};
    std::vector<double> powers_w{0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
    double ber_constant = 283.5;
    int packet_bits = 1000;
    double internal_multiplier = 1.0;
};

enum class MacTimeForm { corrected, short_sum };
enum class GainForm { lost_packets, capacity_bonus };

struct MacConfig {
    std::vector<double> allocations{0.1, 0.5, 1.0};
    std::vector<double> bids{0, 1};
    int max_retries = 5;
    double external_multiplier = 1.0;
    std::vector<Matrix> transitions{
        {{0.9, 0.1, 0.0}, {0.6, 0.3, 0.1}, {0.0, 0.6, 0.4}},
        {{0.4, 0.6, 0.0}, {0.1, 0.3, 0.6}, {0.0, 0.1, 0.9}},
    };
    MacTimeForm time_form = MacTimeForm::corrected;
};

struct AppConfig {
    int lifetime = 2;
    int buffer_cap = 4;
    std::vector<double> arrival_means{1, 2, 3};
    double stage_s = 2e-3;
    double loss_tradeoff = 0.1;
    GainForm gain_form = GainForm::lost_packets;
};

enum class ModelKind { reference, toy };

struct SolverConfig {
    ModelKind model = ModelKind::reference;
    double gamma = 0.9;
    double tolerance = 1e-8;
    int max_sweeps = 10000;
    int initial_phy = 4;  // 0 dB
    int initial_mac = 1;  // allocation 0.5
    int simplified1_bid = 0;
    int simplified2_arrival = 0;  // index into arrival_means (mean 1)
};

struct LearningConfig {
    double alpha = 0.5;
    double beta = 5.0;
    bool alpha_decay = false;
    long stages = 100000;
    std::uint64_t seed = 1;
    long curve_every = 100;
};

struct StackConfig {
    PhyConfig phy;
    MacConfig mac;
    AppConfig app;
    SolverConfig solver;
    LearningConfig learning;
};

namespace detail {

inline std::string fmt_real(double x) { return csv::real(x); }

template <class T>
std::string fmt_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        if constexpr (std::is_floating_point_v<T>) {
            out += fmt_real(v[i]);
        } else {
            out += std::to_string(v[i]);
        }
    }
    return out;
}

inline std::string fmt_matrix(const Matrix& m) {
    std::string out;
    for (std::size_t r = 0; r < m.size(); ++r) {
        if (r) out += ", ";
        out += fmt_list(m[r]);
    }
    return out;
}

inline std::vector<std::string> words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

inline double to_real(const std::string& key, const std::string& text) {
    const auto w = words(text);
    if (w.size() != 1) throw ConfigError(key + ": expected one number");
    try {
        return csv::parse_real(w[0]);
    } catch (const ConfigError&) {
        throw ConfigError(key + ": not a number: '" + text + "'");
    }
}

inline long to_long(const std::string& key, const std::string& text) {
    const double x = to_real(key, text);
    if (x != std::floor(x) || std::abs(x) > 9e15) throw ConfigError(key + ": expected an integer");
    return static_cast<long>(x);
}

inline bool to_bool(const std::string& key, const std::string& text) {
    const auto w = words(text);
    if (w.size() == 1 && (w[0] == "true" || w[0] == "1")) return true;
    if (w.size() == 1 && (w[0] == "false" || w[0] == "0")) return false;
    throw ConfigError(key + ": expected true or false");
}

inline std::vector<double> to_reals(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& w : words(text)) {
        try {
            out.push_back(csv::parse_real(w));
        } catch (const ConfigError&) {
            throw ConfigError(key + ": not a number: '" + w + "'");
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

inline std::vector<int> to_ints(const std::string& key, const std::string& text) {
    std::vector<int> out;
    for (double x : to_reals(key, text)) {
        if (x != std::floor(x)) throw ConfigError(key + ": expected integers");
        out.push_back(static_cast<int>(x));
    }
    return out;
}

inline Matrix to_matrix(const std::string& key, const std::string& text) {
    Matrix m;
    for (const auto& row : csv::split(text, ',')) m.push_back(to_reals(key, row));
    return m;
}

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Checks every per-type invariant; the message names the offending field.
inline void validate(const StackConfig& c) {
    auto fail = [](const std::string& field, const std::string& why) { throw ConfigError(field + ": " + why); };
    const auto& p = c.phy;
    if (p.gains_db.empty()) fail("phy.gains_db", "empty");
    for (std::size_t i = 1; i < p.gains_db.size(); ++i) {
        if (!(p.gains_db[i] > p.gains_db[i - 1])) fail("phy.gains_db", "must be strictly increasing");
    }
    if (!(p.mean_gain > 0)) fail("phy.mean_gain", "must be positive");
    if (!(p.doppler_hz >= 0)) fail("phy.doppler_hz", "must be non-negative");
    if (!(p.packet_time_s > 0)) fail("phy.packet_time_s", "must be positive");
    if (!(p.fsmc_step_s > 0)) fail("phy.fsmc_step_s", "must be positive");
    for (int m : p.modulations) {
        if (m < 1) fail("phy.modulations", "orders must be at least 1");
    }
    for (double s : p.powers_w) {
        if (!(s >= 0)) fail("phy.powers_w", "must be non-negative");
    }
    if (!(p.ber_constant > 0)) fail("phy.ber_constant", "must be positive");
    if (p.packet_bits < 1) fail("phy.packet_bits", "must be at least 1");
    if (!(p.internal_multiplier >= 0)) fail("phy.internal_multiplier", "must be non-negative");

    const auto& m = c.mac;
    for (double s : m.allocations) {
        if (!(s > 0 && s <= 1)) fail("mac.allocations", "must lie in (0, 1]");
    }
    for (double b : m.bids) {
        if (!(b >= 0)) fail("mac.bids", "must be non-negative");
    }
    if (m.max_retries < 0) fail("mac.max_retries", "must be non-negative");
    if (!(m.external_multiplier >= 0)) fail("mac.external_multiplier", "must be non-negative");
    if (m.transitions.size() != m.bids.size()) fail("mac.transition_bid_*", "need one matrix per bid");
    for (std::size_t k = 0; k < m.transitions.size(); ++k) {
        const std::string field = "mac.transition_bid_" + std::to_string(k);
        if (m.transitions[k].size() != m.allocations.size()) fail(field, "needs one row per allocation state");
        for (const auto& row : m.transitions[k]) {
            if (row.size() != m.allocations.size()) fail(field, "needs one column per allocation state");
            try {
                check_stochastic(row, kRowTolerance, field);
            } catch (const ModelContractError& e) {
                throw ConfigError(e.what());
            }
        }
    }

    const auto& a = c.app;
    if (a.lifetime < 1) fail("app.lifetime", "must be at least 1");
    if (a.buffer_cap < 0) fail("app.buffer_cap", "must be non-negative");
    for (double mu : a.arrival_means) {
        if (!(mu >= 0)) fail("app.arrival_means", "must be non-negative");
    }
    if (!(a.stage_s > 0)) fail("app.stage_s", "must be positive");
    if (!(a.loss_tradeoff >= 0)) fail("app.loss_tradeoff", "must be non-negative");

    const auto& s = c.solver;
    if (!(s.gamma >= 0 && s.gamma < 1)) fail("solver.gamma", "must lie in [0, 1)");
    if (!(s.tolerance > 0)) fail("solver.tolerance", "must be positive");
    if (s.max_sweeps < 1) fail("solver.max_sweeps", "must be at least 1");
    if (s.model == ModelKind::reference) {
        if (s.initial_phy < 0 || s.initial_phy >= static_cast<int>(p.gains_db.size())) fail("solver.initial_phy", "out of range");
        if (s.initial_mac < 0 || s.initial_mac >= static_cast<int>(m.allocations.size())) fail("solver.initial_mac", "out of range");
        if (s.simplified1_bid < 0 || s.simplified1_bid >= static_cast<int>(m.bids.size())) fail("solver.simplified1_bid", "out of range");
        if (s.simplified2_arrival < 0 || s.simplified2_arrival >= static_cast<int>(a.arrival_means.size())) {
            fail("solver.simplified2_arrival", "out of range");
        }
    }

    const auto& l = c.learning;
    if (!(l.alpha > 0)) fail("learning.alpha", "must be positive");
    if (!(l.beta >= 0)) fail("learning.beta", "must be non-negative");
    if (l.stages < 0) fail("learning.stages", "must be non-negative");
    if (l.curve_every < 1) fail("learning.curve_every", "must be at least 1");
}

/// Canonical text of the effective configuration: every key in a fixed order.
inline std::string canonical(const StackConfig& c) {
    using detail::fmt_list;
    using detail::fmt_real;
    std::string out;
    auto put = [&out](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
    out += "[phy]\n";
    put("gains_db", fmt_list(c.phy.gains_db));
    put("mean_gain", fmt_real(c.phy.mean_gain));
    put("doppler_hz", fmt_real(c.phy.doppler_hz));
    put("packet_time_s", fmt_real(c.phy.packet_time_s));
    put("fsmc_step_s", fmt_real(c.phy.fsmc_step_s));
    put("modulations", fmt_list(c.phy.modulations));
    put("powers_w", fmt_list(c.phy.powers_w));
    put("ber_constant", fmt_real(c.phy.ber_constant));
    put("packet_bits", std::to_string(c.phy.packet_bits));
    put("internal_multiplier", fmt_real(c.phy.internal_multiplier));
    out += "[mac]\n";
    put("allocations", fmt_list(c.mac.allocations));
    put("bids", fmt_list(c.mac.bids));
    put("max_retries", std::to_string(c.mac.max_retries));
    put("external_multiplier", fmt_real(c.mac.external_multiplier));
    for (std::size_t k = 0; k < c.mac.transitions.size(); ++k) {
        put("transition_bid_" + std::to_string(k), detail::fmt_matrix(c.mac.transitions[k]));
    }
    put("mac_time_form", c.mac.time_form == MacTimeForm::corrected ? "corrected" : "short-sum");
    out += "[app]\n";
    put("lifetime", std::to_string(c.app.lifetime));
    put("buffer_cap", std::to_string(c.app.buffer_cap));
    put("arrival_means", fmt_list(c.app.arrival_means));
    put("stage_s", fmt_real(c.app.stage_s));
    put("loss_tradeoff", fmt_real(c.app.loss_tradeoff));
    put("gain_form", c.app.gain_form == GainForm::lost_packets ? "lost-packets" : "capacity-bonus");
    out += "[solver]\n";
    put("model", c.solver.model == ModelKind::reference ? "reference" : "toy");
    put("gamma", fmt_real(c.solver.gamma));
    put("tolerance", fmt_real(c.solver.tolerance));
    put("max_sweeps", std::to_string(c.solver.max_sweeps));
    put("initial_phy", std::to_string(c.solver.initial_phy));
    put("initial_mac", std::to_string(c.solver.initial_mac));
    put("simplified1_bid", std::to_string(c.solver.simplified1_bid));
    put("simplified2_arrival", std::to_string(c.solver.simplified2_arrival));
    out += "[learning]\n";
    put("alpha", fmt_real(c.learning.alpha));
    put("beta", fmt_real(c.learning.beta));
    put("alpha_decay", c.learning.alpha_decay ? "true" : "false");
    put("stages", std::to_string(c.learning.stages));
    put("seed", std::to_string(c.learning.seed));
    put("curve_every", std::to_string(c.learning.curve_every));
    return out;
}

/// FNV-1a 64-bit hash of the canonical text, as 16 hex digits.
inline std::string config_hash(const StackConfig& c) { return fmt::format("{:016x}", detail::fnv1a64(canonical(c))); }

/// Parses sectioned key-value text. Missing keys keep their defaults;
/// unknown sections or keys are errors.
inline StackConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    StackConfig c;
    std::vector<std::size_t> mac_matrices_seen;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
        for (const auto& [key, node] : body) {
            const std::string v = node.data();
            const std::string k = section + "." + key;
            using namespace detail;
            if (section == "phy") {
                if (key == "gains_db") c.phy.gains_db = to_reals(k, v);
                else if (key == "mean_gain") c.phy.mean_gain = to_real(k, v);
                else if (key == "doppler_hz") c.phy.doppler_hz = to_real(k, v);
                else if (key == "packet_time_s") c.phy.packet_time_s = to_real(k, v);
                else if (key == "fsmc_step_s") c.phy.fsmc_step_s = to_real(k, v);
                else if (key == "modulations") c.phy.modulations = to_ints(k, v);
                else if (key == "powers_w") c.phy.powers_w = to_reals(k, v);
                else if (key == "ber_constant") c.phy.ber_constant = to_real(k, v);
                else if (key == "packet_bits") c.phy.packet_bits = static_cast<int>(to_long(k, v));
                else if (key == "internal_multiplier") c.phy.internal_multiplier = to_real(k, v);
                else throw ConfigError("unknown key " + k);
            } else if (section == "mac") {
                if (key == "allocations") c.mac.allocations = to_reals(k, v);
                else if (key == "bids") c.mac.bids = to_reals(k, v);
                else if (key == "max_retries") c.mac.max_retries = static_cast<int>(to_long(k, v));
                else if (key == "external_multiplier") c.mac.external_multiplier = to_real(k, v);
                else if (key.rfind("transition_bid_", 0) == 0) {
                    std::size_t idx = 0;
                    try {
                        idx = static_cast<std::size_t>(csv::parse_int(key.substr(15)));
                    } catch (const ConfigError&) {
                        throw ConfigError("unknown key " + k);
                    }
                    if (idx > 64) throw ConfigError(k + ": bid index too large");
                    if (c.mac.transitions.size() <= idx) c.mac.transitions.resize(idx + 1);
                    c.mac.transitions[idx] = to_matrix(k, v);
                    mac_matrices_seen.push_back(idx);
                } else if (key == "mac_time_form") {
                    const auto w = words(v);
                    if (w.size() == 1 && w[0] == "corrected") c.mac.time_form = MacTimeForm::corrected;
                    else if (w.size() == 1 && w[0] == "short-sum") c.mac.time_form = MacTimeForm::short_sum;
                    else throw ConfigError(k + ": expected corrected or short-sum");
                } else throw ConfigError("unknown key " + k);
            } else if (section == "app") {
                if (key == "lifetime") c.app.lifetime = static_cast<int>(to_long(k, v));
                else if (key == "buffer_cap") c.app.buffer_cap = static_cast<int>(to_long(k, v));
                else if (key == "arrival_means") c.app.arrival_means = to_reals(k, v);
                else if (key == "stage_s") c.app.stage_s = to_real(k, v);
                else if (key == "loss_tradeoff") c.app.loss_tradeoff = to_real(k, v);
                else if (key == "gain_form") {
                    const auto w = words(v);
                    if (w.size() == 1 && w[0] == "lost-packets") c.app.gain_form = GainForm::lost_packets;
                    else if (w.size() == 1 && w[0] == "capacity-bonus") c.app.gain_form = GainForm::capacity_bonus;
                    else throw ConfigError(k + ": expected lost-packets or capacity-bonus");
                } else throw ConfigError("unknown key " + k);
            } else if (section == "solver") {
                if (key == "model") {
                    const auto w = words(v);
                    if (w.size() == 1 && w[0] == "reference") c.solver.model = ModelKind::reference;
                    else if (w.size() == 1 && w[0] == "toy") c.solver.model = ModelKind::toy;
                    else throw ConfigError(k + ": expected reference or toy");
                } else if (key == "gamma") c.solver.gamma = to_real(k, v);
                else if (key == "tolerance") c.solver.tolerance = to_real(k, v);
                else if (key == "max_sweeps") c.solver.max_sweeps = static_cast<int>(to_long(k, v));
                else if (key == "initial_phy") c.solver.initial_phy = static_cast<int>(to_long(k, v));
                else if (key == "initial_mac") c.solver.initial_mac = static_cast<int>(to_long(k, v));
                else if (key == "simplified1_bid") c.solver.simplified1_bid = static_cast<int>(to_long(k, v));
                else if (key == "simplified2_arrival") c.solver.simplified2_arrival = static_cast<int>(to_long(k, v));
                else throw ConfigError("unknown key " + k);
            } else if (section == "learning") {
                if (key == "alpha") c.learning.alpha = to_real(k, v);
                else if (key == "beta") c.learning.beta = to_real(k, v);
                else if (key == "alpha_decay") c.learning.alpha_decay = to_bool(k, v);
                else if (key == "stages") c.learning.stages = to_long(k, v);
                else if (key == "seed") c.learning.seed = static_cast<std::uint64_t>(to_long(k, v));
                else if (key == "curve_every") c.learning.curve_every = to_long(k, v);
                else throw ConfigError("unknown key " + k);
            } else {
                throw ConfigError("unknown section [" + section + "]");
            }
        }
    }
    // Matrices given in the file replace the shipped set entirely.
    if (!mac_matrices_seen.empty()) {
        std::set<std::size_t> seen(mac_matrices_seen.begin(), mac_matrices_seen.end());
        c.mac.transitions.resize(*seen.rbegin() + 1);
        for (std::size_t k = 0; k < c.mac.transitions.size(); ++k) {
            if (!seen.count(k)) throw ConfigError("mac.transition_bid_" + std::to_string(k) + ": missing matrix");
        }
    }
    validate(c);
    return c;
}

inline StackConfig parse_config_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline StackConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

}  // namespace xlmdp::wireless
