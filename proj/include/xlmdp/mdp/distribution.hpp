#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xlmdp/errors.hpp"

namespace xlmdp {

struct Outcome {
    int state;
    double prob;

    friend bool operator==(const Outcome&, const Outcome&) = default;
    friend auto operator<=>(const Outcome&, const Outcome&) = default;
};

/// Sparse probability distribution over a finite index set, kept in
/// increasing index order with zero-mass entries dropped.
using SparseDist = std::vector<Outcome>;

inline constexpr double kRowTolerance = 1e-12;
inline constexpr double kProductTolerance = 1e-10;

inline double total_mass(const SparseDist& dist) {
    double sum = 0.0;
    for (const auto& o : dist) sum += o.prob;
    return sum;
}

/// Converts a dense row into a sparse distribution, dropping zeros.
inline SparseDist sparse_from_dense(std::span<const double> row) {
    SparseDist dist;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] != 0.0) dist.push_back({static_cast<int>(i), row[i]});
    }
    return dist;
}

inline void check_stochastic(const SparseDist& dist, double tolerance, const std::string& what) {
    for (const auto& o : dist) {
        if (!(o.prob >= 0.0 && o.prob <= 1.0)) {
            throw ModelContractError(what + ": probability " + std::to_string(o.prob) +
                                     " outside [0, 1]");
        }
    }
    const double mass = total_mass(dist);
    if (std::abs(mass - 1.0) > tolerance) {
        throw ModelContractError(what + ": row sums to " + std::to_string(mass));
    }
}

inline void check_stochastic(std::span<const double> row, double tolerance, const std::string& what) {
    check_stochastic(sparse_from_dense(row), tolerance, what);
}

/// Inverse-CDF draw with a uniform variate in [0, 1). Rounding slack at the
/// top of the CDF falls on the last outcome.
inline int sample(const SparseDist& dist, double uniform) {
    double cumulative = 0.0;
    for (const auto& o : dist) {
        cumulative += o.prob;
        if (uniform < cumulative) return o.state;
    }
    return dist.back().state;
}

/// Interns distributions by exact content so that equal rows share one id.
class DistributionPool {
public:
    int intern(SparseDist dist) {
        auto [it, inserted] = index_.try_emplace(dist, static_cast<int>(dists_.size()));
        if (inserted) dists_.push_back(std::move(dist));
        return it->second;
    }

    const SparseDist& operator[](int id) const { return dists_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const noexcept { return dists_.size(); }

private:
    std::vector<SparseDist> dists_;
    std::map<SparseDist, int> index_;
};

/// Uniform variates on [0, 1) with a fixed, platform-independent mapping
/// from the 64-bit engine output.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

    double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

}  // namespace xlmdp
