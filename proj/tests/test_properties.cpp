// Randomized stochasticity checks: every kernel row, PMF and softmax output
// must be a probability vector.
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "xlmdp/learning/actor_critic.hpp"
#include "xlmdp/layered/stack_mdp.hpp"
#include "xlmdp/wireless/app.hpp"
#include "xlmdp/wireless/phy.hpp"
#include "xlmdp/wireless/reference_stack.hpp"

using namespace xlmdp;

namespace {

constexpr int kCases = 10000;

bool is_distribution(const SparseDist& d, double tol) {
    double mass = 0.0;
    for (const auto& o : d) {
        if (!(o.prob >= 0.0)) return false;
        mass += o.prob;
    }
    return std::abs(mass - 1.0) <= tol;
}

bool is_distribution(const std::vector<double>& p, double tol) {
    for (double x : p) {
        if (!(x >= 0.0)) return false;
    }
    return std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= tol;
}

}  // namespace

TEST(Stochastic, JointKernelRows) {
    const auto model = wireless::reference_model(wireless::StackConfig{});
    const StackMdp env(model.stack);
    std::mt19937 rng(101);
    int bad = 0;
    for (int i = 0; i < kCases; ++i) {
        const int s = static_cast<int>(rng() % static_cast<unsigned>(env.num_states()));
        const int a = static_cast<int>(rng() % static_cast<unsigned>(env.num_actions(s)));
        bad += !is_distribution(env.transition(s, a), 1e-12);
    }
    EXPECT_EQ(bad, 0);
}

TEST(Stochastic, ToyKernelRowsUnderRandomStates) {
    const auto model = wireless::toy_model();
    const StackMdp env(model.stack);
    std::mt19937 rng(102);
    int bad = 0;
    for (int i = 0; i < kCases; ++i) {
        const int s = static_cast<int>(rng() % 2u);
        const int a = static_cast<int>(rng() % static_cast<unsigned>(env.num_actions(s)));
        bad += !is_distribution(env.transition(s, a), 1e-12);
    }
    EXPECT_EQ(bad, 0);
}

TEST(Stochastic, ChannelRowsAcrossDopplerAndStep) {
    std::mt19937 rng(103);
    std::uniform_real_distribution<double> doppler(0.0, 50.0), step(1e-4, 8e-4);
    int bad = 0, cases = 0;
    while (cases < kCases) {
        wireless::PhyConfig c;
        c.doppler_hz = doppler(rng);
        c.fsmc_step_s = step(rng);
        const auto m = wireless::phy_transition(c);
        for (const auto& row : m.rows) {
            bad += !is_distribution(row, 1e-12);
            ++cases;
        }
    }
    EXPECT_EQ(bad, 0);
}

TEST(Stochastic, TruncatedArrivalPmfs) {
    std::mt19937 rng(104);
    std::uniform_real_distribution<double> mean(0.01, 10.0);
    int bad = 0;
    for (int i = 0; i < kCases; ++i) {
        const int cap = static_cast<int>(rng() % 12u);
        bad += !is_distribution(wireless::truncated_poisson(mean(rng), cap), 1e-12);
    }
    EXPECT_EQ(bad, 0);
}

TEST(Stochastic, ApplicationTransitionRows) {
    const wireless::AppConfig c;
    const MixedRadix states = wireless::app_states(c);
    std::mt19937 rng(105);
    std::uniform_real_distribution<double> mean(0.1, 5.0);
    int bad = 0;
    for (int i = 0; i < kCases; ++i) {
        const auto s3 = states.decode(static_cast<int>(rng() % static_cast<unsigned>(states.size())));
        const int v = static_cast<int>(rng() % 10u);
        bad += !is_distribution(wireless::app_transition(c, s3, mean(rng), v), 1e-12);
    }
    EXPECT_EQ(bad, 0);
}

TEST(Stochastic, SoftmaxOutputs) {
    std::mt19937 rng(106);
    std::uniform_real_distribution<double> scale(0.0, 800.0);
    int bad = 0;
    for (int i = 0; i < kCases; ++i) {
        std::vector<double> rho(1 + rng() % 64u);
        const double w = scale(rng);
        std::uniform_real_distribution<double> u(-w, w);
        for (auto& x : rho) x = u(rng);
        bad += !is_distribution(learning::gibbs_softmax(rho), 1e-12);
    }
    EXPECT_EQ(bad, 0);
}
