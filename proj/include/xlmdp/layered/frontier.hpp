#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"
#include "xlmdp/layered/qos.hpp"
#include "xlmdp/layered/stack.hpp"

namespace xlmdp {

/// Service offered by `layer` (position >= 2) in state s under internal
/// action b, given the triple received from below.
inline QosTriple qos_compose(const Layer& layer, int s, int b, const QosTriple& lower) {
    if (layer.position() < 2) throw ModelContractError("qos_compose needs a layer above layer 1");
    return layer.compose(s, b, lower);
}

/// Every (triple, provenance) layer `level` can offer in the given prefix
/// state when it composes each element of `lower` with each internal action.
inline std::vector<FrontierPoint> compose_candidates(const Layer& layer, int s, const Frontier& lower) {
    std::vector<FrontierPoint> out;
    out.reserve(lower.size() * static_cast<std::size_t>(layer.num_internal()));
    for (const auto& p : lower) {
        for (int b = 0; b < layer.num_internal(); ++b) {
            Provenance prov = p.provenance;
            prov.push_back(b);
            out.push_back({layer.compose(s, b, p.qos), std::move(prov)});
        }
    }
    return out;
}

inline std::vector<FrontierPoint> base_candidates(const Layer& layer, int s) {
    std::vector<FrontierPoint> out;
    for (int b = 0; b < layer.num_internal(); ++b) out.push_back({layer.base_qos(s, b), {b}});
    return out;
}

struct PreservationViolation {
    QosTriple better;
    QosTriple worse;
    int internal_action;
};

/// Checks that composing with every internal action keeps every dominated
/// pair of inputs ordered (dominance or equality). Returns the first
/// violation, if any, and counts the dominated pairs examined.
inline std::optional<PreservationViolation> check_preservation(const Layer& layer, int s,
                                                               std::span<const QosTriple> inputs,
                                                               long long* pairs_checked = nullptr) {
    for (const auto& z : inputs) {
        for (const auto& w : inputs) {
            if (!dominates(z, w)) continue;
            if (pairs_checked) ++*pairs_checked;
            for (int b = 0; b < layer.num_internal(); ++b) {
                const QosTriple cz = layer.compose(s, b, z);
                const QosTriple cw = layer.compose(s, b, w);
                if (!(cz == cw || dominates(cz, cw))) return PreservationViolation{z, w, b};
            }
        }
    }
    return std::nullopt;
}

/// Frontier of layer `level` (1..L) in the prefix state s_1..s_level,
/// rebuilt recursively from layer 1.
inline Frontier build_frontier(const LayeredStack& stack, int level, std::span<const int> prefix) {
    if (level < 1 || level > stack.layer_count()) throw ModelContractError("frontier level out of range");
    if (static_cast<int>(prefix.size()) < level) throw ModelContractError("frontier prefix too short");
    const Layer& layer = stack.layer(level);
    const int s = prefix[static_cast<std::size_t>(level - 1)];
    if (level == 1) return prune_to_frontier(base_candidates(layer, s));
    const Frontier lower = build_frontier(stack, level - 1, prefix);
    return prune_to_frontier(compose_candidates(layer, s, lower));
}

/**
 * Frontiers of every layer for every state prefix, built once. Level l is
 * indexed by the flat index of s_1..s_l.
 *
 * With `verify_preservation` set, each layer's service map is checked on the
 * unpruned candidate set it receives and a violation aborts construction.
 */
class FrontierCatalog {
public:
    FrontierCatalog(const LayeredStack& stack, bool verify_preservation = true, double epsilon = 0.0)
        : levels_(static_cast<std::size_t>(stack.layer_count())) {
        std::vector<std::vector<FrontierPoint>> raw;  // unpruned candidates of the level below
        for (int level = 1; level <= stack.layer_count(); ++level) {
            const Layer& layer = stack.layer(level);
            const MixedRadix shape = stack.prefix_shape(level);
            auto& frontiers = levels_[static_cast<std::size_t>(level - 1)];
            frontiers.resize(static_cast<std::size_t>(shape.size()));
            std::vector<std::vector<FrontierPoint>> next_raw(frontiers.size());
            for (int p = 0; p < shape.size(); ++p) {
                const int s = shape.digit(p, static_cast<std::size_t>(level - 1));
                std::vector<FrontierPoint> cands;
                if (level == 1) {
                    cands = base_candidates(layer, s);
                } else {
                    const int lower_p = p / layer.num_states();
                    const Frontier& lower = levels_[static_cast<std::size_t>(level - 2)][static_cast<std::size_t>(lower_p)];
                    if (verify_preservation) verify(layer, s, raw[static_cast<std::size_t>(lower_p)]);
                    cands = compose_candidates(layer, s, lower);
                }
                frontiers[static_cast<std::size_t>(p)] = prune_to_frontier(cands, epsilon);
                next_raw[static_cast<std::size_t>(p)] = std::move(cands);
            }
            raw = std::move(next_raw);
        }
    }

    int levels() const noexcept { return static_cast<int>(levels_.size()); }
    const Frontier& at(int level, int prefix_index) const {
        return levels_.at(static_cast<std::size_t>(level - 1)).at(static_cast<std::size_t>(prefix_index));
    }
    std::size_t prefix_count(int level) const { return levels_.at(static_cast<std::size_t>(level - 1)).size(); }

    std::size_t max_size(int level) const {
        std::size_t m = 0;
        for (const auto& f : levels_.at(static_cast<std::size_t>(level - 1))) m = std::max(m, f.size());
        return m;
    }

    void write_csv(std::ostream& out, const LayeredStack& stack, int level) const {
        const auto& names = stack.layer_names();
        write_frontier_header(out, std::span(names.data(), static_cast<std::size_t>(level)));
        const MixedRadix shape = stack.prefix_shape(level);
        for (int p = 0; p < shape.size(); ++p) write_frontier_rows(out, shape.decode(p), at(level, p));
    }

private:
    static void verify(const Layer& layer, int s, const std::vector<FrontierPoint>& inputs) {
        std::vector<QosTriple> triples;
        triples.reserve(inputs.size());
        for (const auto& p : inputs) triples.push_back(p.qos);
        if (auto v = check_preservation(layer, s, triples)) {
            throw ModelContractError("layer '" + layer.name() + "' state " + std::to_string(s) +
                                     ": service map breaks QoS preservation under internal action " +
                                     std::to_string(v->internal_action));
        }
    }

    std::vector<std::vector<Frontier>> levels_;
};

}  // namespace xlmdp
