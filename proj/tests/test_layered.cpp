#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "xlmdp/layered/frontier.hpp"
#include "xlmdp/layered/layered_vi.hpp"
#include "xlmdp/layered/messages.hpp"
#include "xlmdp/layered/simplified.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/mdp/solvers.hpp"
#include "xlmdp/wireless/config.hpp"
#include "xlmdp/wireless/reference_stack.hpp"

using namespace xlmdp;

namespace {

QosTriple random_triple(std::mt19937& rng) {
    std::uniform_int_distribution<int> pick(0, 3);  // small grid so ties and dominance both occur
    return {0.25 * pick(rng), 1.0 + pick(rng), 0.5 * pick(rng)};
}

Frontier brute_force_frontier(const std::vector<FrontierPoint>& cands) {
    Frontier out;
    for (const auto& c : cands) {
        bool keep = true;
        for (const auto& d : cands) {
            if (dominates(d.qos, c.qos)) keep = false;
            if (d.qos == c.qos && d.provenance < c.provenance) keep = false;
        }
        if (keep) out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.qos < y.qos; });
    return out;
}

bool same_points(const Frontier& a, const Frontier& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].qos != b[i].qos || a[i].provenance != b[i].provenance) return false;
    }
    return true;
}

SparseDist random_row(std::mt19937& rng, int n) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& x : w) total += (x = u(rng));
    for (auto& x : w) x /= total;
    return sparse_from_dense(w);
}

// Mixes two rows with weight t on the first.
SparseDist mix(const SparseDist& a, const SparseDist& b, double t, int n) {
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    for (const auto& o : a) w[static_cast<std::size_t>(o.state)] += t * o.prob;
    for (const auto& o : b) w[static_cast<std::size_t>(o.state)] += (1.0 - t) * o.prob;
    return sparse_from_dense(w);
}

/// Random three-layer stack with strictly monotone service maps, a
/// monotone top reward and a top transition that depends on the service.
LayeredStack random_stack(unsigned seed, bool top_sees_next_lower) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n1 = 2, n2 = 2, n3 = 3;

    LayerSpec l1;
    l1.name = "low";
    l1.num_states = n1;
    l1.num_external = 2;
    l1.num_internal = 3;
    l1.external_multiplier = 1.0;
    l1.internal_multiplier = 0.5;
    auto base = std::make_shared<std::vector<Service>>();
    auto d1 = std::make_shared<std::vector<double>>();
    auto c1 = std::make_shared<std::vector<double>>();
    auto p1 = std::make_shared<std::vector<SparseDist>>();
    for (int i = 0; i < n1 * 3; ++i) {
        base->push_back({0.8 * u(rng), 0.5 + u(rng)});
        d1->push_back(u(rng));
    }
    for (int i = 0; i < n1 * 2; ++i) {
        c1->push_back(0.3 * u(rng));
        p1->push_back(random_row(rng, n1));
    }
    l1.base_service = [base](int s, int b) { return (*base)[static_cast<std::size_t>(s * 3 + b)]; };
    l1.internal_cost = [d1](int s, int b) { return (*d1)[static_cast<std::size_t>(s * 3 + b)]; };
    l1.external_cost = [c1](int s, int a) { return (*c1)[static_cast<std::size_t>(s * 2 + a)]; };
    l1.transition = [p1](std::span<const int>, int s, int a) { return (*p1)[static_cast<std::size_t>(s * 2 + a)]; };

    LayerSpec l2;
    l2.name = "mid";
    l2.num_states = n2;
    l2.num_external = 2;
    l2.num_internal = 2;
    l2.external_multiplier = 1.0;
    l2.internal_multiplier = 1.0;
    auto k2 = std::make_shared<std::vector<std::array<double, 3>>>();
    auto c2 = std::make_shared<std::vector<double>>();
    auto p2 = std::make_shared<std::vector<SparseDist>>();
    for (int i = 0; i < n2 * 2; ++i) k2->push_back({0.3 + 0.7 * u(rng), 0.5 + u(rng), 0.2 * u(rng)});
    for (int i = 0; i < n2 * 2; ++i) c2->push_back(0.3 * u(rng));
    for (int i = 0; i < n1 * n2 * 2; ++i) p2->push_back(random_row(rng, n2));
    l2.service = [k2](int s, int b, const QosTriple& z) {
        const auto& k = (*k2)[static_cast<std::size_t>(s * 2 + b)];
        return Service{z.loss * k[0], z.time * k[1] + k[2]};
    };
    l2.internal_cost = [](int, int b) { return 0.1 * b; };
    l2.external_cost = [c2](int s, int a) { return (*c2)[static_cast<std::size_t>(s * 2 + a)]; };
    l2.transition_uses_next_lower = true;
    l2.transition = [p2, n2](std::span<const int> next, int s, int a) {
        return (*p2)[static_cast<std::size_t>((next[0] * n2 + s) * 2 + a)];
    };

    LayerSpec l3;
    l3.name = "top";
    l3.num_states = n3;
    l3.num_external = 2;
    l3.num_internal = 2;
    l3.external_multiplier = 1.0;
    l3.internal_multiplier = 1.0;
    auto w3 = std::make_shared<std::vector<double>>();
    auto hi = std::make_shared<std::vector<SparseDist>>();
    auto lo = std::make_shared<std::vector<SparseDist>>();
    for (int i = 0; i < n3; ++i) w3->push_back(1.0 + 2.0 * u(rng));
    const int slots = top_sees_next_lower ? n1 * n2 : 1;
    for (int i = 0; i < slots * n3 * 2; ++i) {
        hi->push_back(random_row(rng, n3));
        lo->push_back(random_row(rng, n3));
    }
    l3.service = [](int, int b, const QosTriple& z) { return Service{z.loss, z.time * (1.0 + 0.5 * b)}; };
    l3.internal_cost = [](int, int b) { return 0.05 * (1 - b); };
    l3.external_cost = [](int, int a) { return 0.2 * a; };
    l3.internal_reward = [w3](int s, const QosTriple& z) {
        return (*w3)[static_cast<std::size_t>(s)] * (1.0 - z.loss) - 0.3 * z.time - z.cost;
    };
    l3.top_uses_next_lower = top_sees_next_lower;
    l3.top_transition = [hi, lo, n1, n2, n3, top_sees_next_lower](const TopQuery& q) {
        const int slot = top_sees_next_lower ? q.next_lower[0] + n1 * q.next_lower[1] : 0;
        const auto i = static_cast<std::size_t>((slot * n3 + q.state.back()) * 2 + q.external);
        return mix((*hi)[i], (*lo)[i], 1.0 - q.service.loss, n3);
    };
    (void)n2;

    std::vector<LayerSpec> specs;
    specs.push_back(std::move(l1));
    specs.push_back(std::move(l2));
    specs.push_back(std::move(l3));
    return LayeredStack(std::move(specs));
}

/// One-layer stack whose only layer is also the top.
LayeredStack single_layer_stack(unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LayerSpec l;
    l.name = "only";
    l.num_states = 4;
    l.num_external = 3;
    l.num_internal = 2;
    l.external_multiplier = 1.0;
    auto rows = std::make_shared<std::vector<SparseDist>>();
    for (int i = 0; i < 4 * 3; ++i) rows->push_back(random_row(rng, 4));
    l.base_service = [](int s, int b) { return Service{0.1 * s, 1.0 + b}; };
    l.external_cost = [](int s, int a) { return 0.1 * a * (s + 1); };
    l.internal_reward = [](int s, const QosTriple& z) { return (s + 1) * (1.0 - z.loss) - 0.2 * z.time; };
    l.top_transition = [rows](const TopQuery& q) {
        return (*rows)[static_cast<std::size_t>(q.state.back() * 3 + q.external)];
    };
    std::vector<LayerSpec> specs;
    specs.push_back(std::move(l));
    return LayeredStack(std::move(specs));
}

/// Two-layer stack whose top reward is chosen by the caller.
LayeredStack two_layer_stack(std::function<double(int, const QosTriple&)> reward) {
    LayerSpec l1;
    l1.name = "low";
    l1.num_internal = 2;
    l1.base_service = [](int, int b) { return b == 0 ? Service{0.1, 1.0} : Service{0.2, 2.0}; };
    l1.transition = [](std::span<const int>, int, int) { return SparseDist{{0, 1.0}}; };
    LayerSpec l2;
    l2.name = "top";
    l2.service = [](int, int, const QosTriple& z) { return Service{z.loss, z.time}; };
    l2.internal_reward = std::move(reward);
    l2.top_transition = [](const TopQuery&) { return SparseDist{{0, 1.0}}; };
    std::vector<LayerSpec> specs;
    specs.push_back(std::move(l1));
    specs.push_back(std::move(l2));
    return LayeredStack(std::move(specs));
}

const wireless::StackModel& reference() {
    static const wireless::StackModel m = wireless::reference_model(wireless::StackConfig{});
    return m;
}

}  // namespace

TEST(Dominance, Examples) {
    EXPECT_TRUE(dominates({0.1, 1.0e-3, 2.0}, {0.2, 1.5e-3, 2.0}));
    const QosTriple z{0.3, 2e-3, 1.0};
    EXPECT_FALSE(dominates(z, z));
    EXPECT_FALSE(dominates({0.1, 2.0e-3, 1.0}, {0.2, 1.0e-3, 1.0}));
    EXPECT_TRUE(pareto_equivalent({0.1, 2.0e-3, 1.0}, {0.2, 1.0e-3, 1.0}));
    EXPECT_TRUE(pareto_equivalent(z, z));
    EXPECT_FALSE(pareto_equivalent({0, 1e-3, 0}, {1, 1e-3, 0}));
}

TEST(Dominance, StrictPartialOrderOnRandomTriples) {
    std::mt19937 rng(3);
    std::vector<QosTriple> pts;
    for (int i = 0; i < 60; ++i) pts.push_back(random_triple(rng));
    for (const auto& x : pts) {
        EXPECT_FALSE(dominates(x, x));
        for (const auto& y : pts) {
            EXPECT_FALSE(dominates(x, y) && dominates(y, x));
            EXPECT_EQ(pareto_equivalent(x, y), !dominates(x, y) && !dominates(y, x));
            if (!dominates(x, y)) continue;
            for (const auto& w : pts) {
                if (dominates(y, w)) EXPECT_TRUE(dominates(x, w));
            }
        }
    }
}

TEST(Prune, SingleCandidate) {
    const Frontier f = prune_to_frontier({{{0.1, 1.0, 0.0}, {2}}});
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].provenance, (Provenance{2}));
}

TEST(Prune, ChainKeepsTheBest) {
    const Frontier f = prune_to_frontier({{{0.3, 3, 3}, {0}}, {{0.1, 1, 1}, {1}}, {{0.2, 2, 2}, {2}}});
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].qos, (QosTriple{0.1, 1, 1}));
}

TEST(Prune, DuplicateKeepsSmallestProvenance) {
    const Frontier f = prune_to_frontier({{{0.1, 1, 1}, {1, 0}}, {{0.1, 1, 1}, {0, 2}}});
    ASSERT_EQ(f.size(), 1u);
    EXPECT_EQ(f[0].provenance, (Provenance{0, 2}));
}

TEST(Prune, EmptyInputThrows) { EXPECT_THROW(prune_to_frontier({}), EmptyCandidateError); }

TEST(Prune, MatchesQuadraticBruteForce) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<FrontierPoint> cands;
        for (int i = 0; i < 50; ++i) cands.push_back({random_triple(rng), {i}});
        const Frontier f = prune_to_frontier(cands);
        EXPECT_TRUE(same_points(f, brute_force_frontier(cands))) << "trial " << trial;
        EXPECT_TRUE(same_points(prune_to_frontier(f), f));  // idempotent
    }
}

TEST(QosCompose, IdentityLayerPassesThrough) {
    const LayeredStack stack = two_layer_stack([](int, const QosTriple& z) { return -z.loss; });
    const QosTriple in{0.3, 2e-3, 0.7};
    EXPECT_EQ(qos_compose(stack.layer(2), 0, 0, in), in);
    EXPECT_THROW(qos_compose(stack.layer(1), 0, 0, in), ModelContractError);
}

TEST(QosCompose, MacExamples) {
    const Layer& mac = reference().stack.layer(2);  // allocations 0.1, 0.5, 1
    const QosTriple lossless = qos_compose(mac, 1, 2, {0.0, 0.4e-3, 0.25});
    EXPECT_DOUBLE_EQ(lossless.loss, 0.0);
    EXPECT_DOUBLE_EQ(lossless.time, 0.4e-3 / 0.5);
    EXPECT_DOUBLE_EQ(lossless.cost, 0.25);
    const QosTriple z = qos_compose(mac, 2, 1, {0.5, 0.4e-3, 0.0});
    EXPECT_DOUBLE_EQ(z.loss, 0.25);
    EXPECT_NEAR(z.time, 0.6e-3, 1e-15);
}

TEST(QosCompose, OutOfRangeServiceIsContractError) {
    LayerSpec l1;
    l1.name = "low";
    l1.base_service = [](int, int) { return Service{0.5, 1.0}; };
    l1.transition = [](std::span<const int>, int, int) { return SparseDist{{0, 1.0}}; };
    LayerSpec l2;
    l2.name = "top";
    l2.service = [](int, int, const QosTriple& z) { return Service{2.0 * z.loss + 0.5, z.time}; };
    l2.internal_reward = [](int, const QosTriple&) { return 0.0; };
    l2.top_transition = [](const TopQuery&) { return SparseDist{{0, 1.0}}; };
    std::vector<LayerSpec> specs;
    specs.push_back(std::move(l1));
    specs.push_back(std::move(l2));
    const LayeredStack stack(std::move(specs));
    EXPECT_THROW(qos_compose(stack.layer(2), 0, 0, {0.5, 1.0, 0.0}), ModelContractError);
}

TEST(BuildFrontier, PairwiseIncomparableAllSurvive) {
    auto make = [](std::vector<Service> table) {
        LayerSpec l;
        l.name = "only";
        l.num_internal = static_cast<int>(table.size());
        l.internal_multiplier = 1.0;
        auto costs = std::make_shared<std::vector<double>>();
        for (std::size_t i = 0; i < table.size(); ++i) costs->push_back(i < 3 ? std::array{1.0, 0.0, 3.0}[i] : 0.9);
        l.internal_cost = [costs](int, int b) { return (*costs)[static_cast<std::size_t>(b)]; };
        l.base_service = [table](int, int b) { return table[static_cast<std::size_t>(b)]; };
        l.internal_reward = [](int, const QosTriple& z) { return -z.loss; };
        l.top_transition = [](const TopQuery&) { return SparseDist{{0, 1.0}}; };
        std::vector<LayerSpec> specs{l};
        return LayeredStack(std::move(specs));
    };
    const std::vector<int> prefix{0};
    const LayeredStack three = make({{0.1, 1}, {0.2, 2}, {0.3, 0.5}});
    EXPECT_EQ(build_frontier(three, 1, prefix).size(), 3u);
    const LayeredStack four = make({{0.1, 1}, {0.2, 2}, {0.3, 0.5}, {0.05, 0.9}});
    // (0.05, 0.9, 0.9) beats (0.1, 1, 1) only: it costs more than the
    // second triple and is slower than the third.
    const Frontier f = build_frontier(four, 1, prefix);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[0].qos, (QosTriple{0.05, 0.9, 0.9}));
    EXPECT_EQ(f[0].provenance, (Provenance{3}));
    EXPECT_EQ(f[1].qos, (QosTriple{0.2, 2, 0}));
    EXPECT_EQ(f[2].qos, (QosTriple{0.3, 0.5, 3}));
    const LayeredStack best = make({{0.1, 1}, {0.2, 2}, {0.3, 0.5}, {0.05, 0.4}});
    const Frontier g = build_frontier(best, 1, prefix);
    ASSERT_EQ(g.size(), 2u);  // (0.05, 0.4, 0.9) beats everything but the zero-cost triple

}

TEST(BuildFrontier, ReferenceLevelTwoMatchesExhaustiveComposition) {
    const LayeredStack& stack = reference().stack;
    const Layer& phy = stack.layer(1);
    const Layer& mac = stack.layer(2);
    const FrontierCatalog catalog(stack);
    for (int s1 = 0; s1 < phy.num_states(); ++s1) {
        for (int s2 = 0; s2 < mac.num_states(); ++s2) {
            std::vector<FrontierPoint> all;
            for (int b1 = 0; b1 < phy.num_internal(); ++b1) {
                for (int b2 = 0; b2 < mac.num_internal(); ++b2) {
                    all.push_back({mac.compose(s2, b2, phy.base_qos(s1, b1)), {b1, b2}});
                }
            }
            const Frontier expected = brute_force_frontier(all);
            const std::vector<int> prefix{s1, s2};
            EXPECT_TRUE(same_points(build_frontier(stack, 2, prefix), expected)) << s1 << "," << s2;
            EXPECT_TRUE(same_points(catalog.at(2, stack.prefix_shape(2).encode(prefix)), expected));
        }
    }
}

TEST(FrontierEquivalence, ReferenceStackEveryState) {
    const LayeredStack& stack = reference().stack;
    const FrontierCatalog catalog(stack);
    for (int s = 0; s < stack.num_states(); ++s) {
        const auto v = frontier_equivalence_check(stack, catalog, s);
        ASSERT_TRUE(v.passed) << "state " << s;
    }
}

TEST(FrontierEquivalence, SingleInternalActionTriviallyEqual) {
    const LayeredStack stack = wireless::toy_model().stack;
    const FrontierCatalog catalog(stack);
    for (int s = 0; s < stack.num_states(); ++s) EXPECT_TRUE(frontier_equivalence_check(stack, catalog, s).passed);
}

TEST(FrontierEquivalence, NonMonotoneRewardIsCaught) {
    // Layer 1 offers (0.1, 1) and the dominated (0.2, 2); a reward that
    // prefers more loss picks the pruned triple.
    const LayeredStack stack = two_layer_stack([](int, const QosTriple& z) { return z.loss; });
    const FrontierCatalog catalog(stack);
    const auto v = frontier_equivalence_check(stack, catalog, 0);
    EXPECT_FALSE(v.passed);
    EXPECT_DOUBLE_EQ(v.frontier_max, 0.1);
    EXPECT_DOUBLE_EQ(v.exhaustive_max, 0.2);
    EXPECT_EQ(v.witness, (Provenance{1, 0}));
}

TEST(Preservation, ViolationAbortsCatalog) {
    LayerSpec l1;
    l1.name = "low";
    l1.num_internal = 2;
    l1.base_service = [](int, int b) { return b == 0 ? Service{0.1, 1.0} : Service{0.2, 2.0}; };
    l1.transition = [](std::span<const int>, int, int) { return SparseDist{{0, 1.0}}; };
    LayerSpec l2;
    l2.name = "top";
    l2.service = [](int, int, const QosTriple& z) { return Service{0.5 - z.loss, z.time}; };  // reverses loss
    l2.internal_reward = [](int, const QosTriple& z) { return -z.loss; };
    l2.top_transition = [](const TopQuery&) { return SparseDist{{0, 1.0}}; };
    std::vector<LayerSpec> specs;
    specs.push_back(std::move(l1));
    specs.push_back(std::move(l2));
    const LayeredStack stack(std::move(specs));
    EXPECT_THROW(FrontierCatalog{stack}, ModelContractError);
    EXPECT_THROW(layered_value_iteration(stack, 0.5), ModelContractError);
}

TEST(Preservation, RandomMonotoneMapsPass) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const LayeredStack stack = random_stack(seed, false);
        EXPECT_NO_THROW(FrontierCatalog{stack});
    }
}

class RandomStacks : public ::testing::TestWithParam<unsigned> {};

TEST_P(RandomStacks, LayeredMatchesCentralized) {
    const unsigned seed = GetParam();
    const double tol = 1e-10;
    for (bool next_lower : {false, true}) {
        const LayeredStack stack = random_stack(seed, next_lower);
        const StackMdp env(stack);
        for (double gamma : {0.0, 0.5, 0.9}) {
            const SolveResult c = value_iteration(env, gamma, tol, 100000);
            LayeredOptions options;
            options.tolerance = tol;
            options.max_sweeps = 100000;
            const LayeredResult l = layered_value_iteration(stack, gamma, options);
            ASSERT_TRUE(c.converged && l.converged);
            EXPECT_LE(sup_distance(c.values, l.values), 2 * tol) << "gamma " << gamma << " next_lower " << next_lower;
            // The layered policy attains the optimal value.
            const ValueTable v = evaluate_policy(env, l.policy.to_policy(env.codec()), gamma, 1e-12);
            EXPECT_LE(sup_distance(v, c.values), 1e-8);
            for (const auto& rec : l.history) EXPECT_LE(rec.action_evaluations, c.history.front().action_evaluations);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomStacks, ::testing::Range(1u, 9u));

TEST(LayeredVi, SingleLayerIsOrdinaryValueIteration) {
    const LayeredStack stack = single_layer_stack(5);
    const StackMdp env(stack);
    const SolveResult c = value_iteration(env, 0.8, 1e-11, 100000);
    LayeredOptions options;
    options.tolerance = 1e-11;
    const LayeredResult l = layered_value_iteration(stack, 0.8, options);
    EXPECT_LE(sup_distance(c.values, l.values), 2e-11);
}

TEST(LayeredVi, ZeroDiscountIsMyopic) {
    const LayeredStack stack = random_stack(4, false);
    const StackMdp env(stack);
    const FrontierCatalog catalog(stack);
    const LayeredResult l = layered_value_iteration(stack, 0.0);
    for (int s = 0; s < stack.num_states(); ++s) {
        const auto state = stack.joint().decode(s);
        double best = -INFINITY;
        for (const auto& p : catalog.at(3, s)) best = std::max(best, stack.top().internal_reward(state[2], p.qos));
        double top_ext = INFINITY;
        for (int a = 0; a < 2; ++a) top_ext = std::min(top_ext, stack.top().weighted_external_cost(state[2], a));
        double lower = 0.0;
        for (int i = 1; i <= 2; ++i) {
            double c = INFINITY;
            for (int a = 0; a < 2; ++a) c = std::min(c, stack.layer(i).weighted_external_cost(state[i - 1], a));
            lower += c;
            EXPECT_DOUBLE_EQ(stack.layer(i).weighted_external_cost(state[i - 1], l.policy.at(s).external[i - 1]), c);
        }
        EXPECT_NEAR(l.values[static_cast<std::size_t>(s)], best - top_ext - lower, 1e-12);
    }
}

TEST(LayeredVi, CollapsedFormNeverBelowExact) {
    const LayeredStack stack = random_stack(6, true);
    LayeredOptions exact;
    LayeredOptions merged;
    merged.form = SweepForm::collapsed;
    const LayeredResult a = layered_value_iteration(stack, 0.9, exact);
    const LayeredResult b = layered_value_iteration(stack, 0.9, merged);
    for (std::size_t s = 0; s < a.values.size(); ++s) EXPECT_GE(b.values[s], a.values[s] - 1e-7);
}

TEST(Messages, ThreeLayersUseTwoChannelsEachWay) {
    const LayeredStack& stack = reference().stack;
    const LayeredValueIteration engine(stack);
    const std::vector<double> values(static_cast<std::size_t>(stack.num_states()), 1.0);
    const MessageRound round = engine.exchange_messages(reference().initial_state, values, 0.9);
    ASSERT_EQ(round.upward.size(), 2u);
    ASSERT_EQ(round.downward.size(), 2u);
    EXPECT_EQ(round.upward[0].from_layer, 1);
    EXPECT_EQ(round.upward[1].from_layer, 2);
    EXPECT_EQ(round.downward[0].from_layer, 3);
    EXPECT_EQ(round.downward[1].from_layer, 2);
    EXPECT_EQ(round.downward[0].radices, (std::vector<int>{9, 3}));
    EXPECT_EQ(round.downward[1].radices, (std::vector<int>{9}));
}

TEST(Messages, SerializationRoundTripIsExact) {
    const LayeredStack& stack = reference().stack;
    const LayeredValueIteration engine(stack);
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-5.0, 20.0);
    std::vector<double> values(static_cast<std::size_t>(stack.num_states()));
    for (auto& v : values) v = u(rng);
    for (int s : {0, 100, reference().initial_state, 674}) {
        const MessageRound round = engine.exchange_messages(s, values, 0.9);
        for (const auto& m : round.upward) EXPECT_EQ(parse_upward(serialize(m)), m);
        for (const auto& m : round.downward) EXPECT_EQ(parse_downward(serialize(m)), m);
    }
}

TEST(Simplified1, ConcentratedPriorIsFixedServiceMdp) {
    const LayeredStack stack = random_stack(2, false);
    const QosTriple z{0.2, 1.5, 0.3};
    const Layer& top = stack.top();
    const auto solved = simplified1_value_iteration(top, {{z, 1.0}}, 0.7, 1e-12);
    ASSERT_TRUE(solved.converged);
    // Direct value iteration on the top layer with the service frozen at z.
    const QosTriple zz = top.compose(0, 0, z);
    std::vector<double> v(3, 0.0), next(3);
    for (int it = 0; it < 2000; ++it) {
        for (int s = 0; s < 3; ++s) {
            double best = -INFINITY;
            for (int a = 0; a < 2; ++a) {
                const std::vector<int> state{0, 0, s};
                const SparseDist row = top.spec().top_transition(TopQuery{state, {}, a, zz});
                double f = 0.0;
                for (const auto& o : row) f += o.prob * v[static_cast<std::size_t>(o.state)];
                best = std::max(best, top.internal_reward(s, zz) - top.weighted_external_cost(s, a) + 0.7 * f);
            }
            next[static_cast<std::size_t>(s)] = best;
        }
        v = next;
    }
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(solved.values[static_cast<std::size_t>(s)], v[static_cast<std::size_t>(s)], 1e-10);
}

TEST(Simplified1, TwoTriplePriorMatchesHandExpansion) {
    // One top state, so V = max_a (E[r] - c_a) / (1 - gamma).
    LayerSpec low;
    low.name = "low";
    low.base_service = [](int, int) { return Service{0.0, 1.0}; };
    low.transition = [](std::span<const int>, int, int) { return SparseDist{{0, 1.0}}; };
    LayerSpec top;
    top.name = "top";
    top.num_external = 2;
    top.external_multiplier = 1.0;
    top.external_cost = [](int, int a) { return 0.3 * a; };
    top.service = [](int, int, const QosTriple& z) { return Service{z.loss, z.time}; };
    top.internal_reward = [](int, const QosTriple& z) { return 2.0 * (1.0 - z.loss) - z.time; };
    top.top_transition = [](const TopQuery&) { return SparseDist{{0, 1.0}}; };
    std::vector<LayerSpec> specs;
    specs.push_back(std::move(low));
    specs.push_back(std::move(top));
    const LayeredStack stack(std::move(specs));
    const double p = 0.3, gamma = 0.6;
    const QosTriple z1{0.1, 0.5, 0.0}, z2{0.4, 0.2, 0.0};
    const auto solved = simplified1_value_iteration(stack.top(), {{z1, p}, {z2, 1.0 - p}}, gamma, 1e-13);
    const double r = p * (2.0 * 0.9 - 0.5) + (1.0 - p) * (2.0 * 0.6 - 0.2);
    EXPECT_NEAR(solved.values[0], r / (1.0 - gamma), 1e-11);
    EXPECT_EQ(solved.external[0], 0);
}

TEST(Simplified1, RejectsBadPriors) {
    const LayeredStack stack = random_stack(2, false);
    EXPECT_THROW(simplified1_value_iteration(stack.top(), {{{0, 1, 0}, 0.5}}, 0.5, 1e-9), ModelContractError);
}

TEST(Simplified2, SingleTopActionEqualsFullLayered) {
    const LayeredStack stack = wireless::toy_model().stack;
    const LayeredResult full = layered_value_iteration(stack, 0.9);
    const LayeredResult pinned = simplified2_value_iteration(stack, 0, 0.9);
    EXPECT_EQ(sup_distance(full.values, pinned.values), 0.0);
    EXPECT_THROW(simplified2_value_iteration(stack, 1, 0.9), ConfigError);
}

TEST(Simplifications, NeverBeatOptimalOnRandomStacks) {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const LayeredStack stack = random_stack(seed, false);
        const StackMdp env(stack);
        const FrontierCatalog catalog(stack);
        const SolveResult opt = value_iteration(env, 0.8, 1e-11, 100000);
        const auto s1 = simplified1_value_iteration(stack.top(), uniform_frontier_prior(stack, catalog), 0.8, 1e-11);
        const Policy p1 = simplified1_joint_policy(stack, catalog, s1, {0, 1});
        const ValueTable v1 = evaluate_policy(env, p1, 0.8, 1e-11);
        const LayeredResult s2 = simplified2_value_iteration(stack, 1, 0.8);
        const ValueTable v2 = evaluate_policy(env, s2.policy.to_policy(env.codec()), 0.8, 1e-11);
        for (std::size_t s = 0; s < opt.values.size(); ++s) {
            EXPECT_LE(v1[s], opt.values[s] + 1e-9);
            EXPECT_LE(v2[s], opt.values[s] + 1e-9);
        }
    }
}
