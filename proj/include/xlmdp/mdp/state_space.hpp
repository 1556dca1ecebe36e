#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xlmdp/errors.hpp"

namespace xlmdp {

/// Ordered per-layer coordinates of a joint state (layer 1 first).
using JointState = std::vector<int>;

/**
 * Mixed-radix enumeration of a product of finite sets.
 *
 * The first coordinate is the most significant digit, so the flat index of a
 * prefix (x_1, ..., x_l) equals the flat index of any full tuple extending it
 * divided by the product of the remaining radices. Layered solvers rely on
 * this to address prefix tables without re-encoding.
 */
class MixedRadix {
public:
    MixedRadix() = default;

    explicit MixedRadix(std::vector<int> radices) : radices_(std::move(radices)) {
        strides_.assign(radices_.size(), 1);
        size_ = 1;
        for (std::size_t i = radices_.size(); i-- > 0;) {
            if (radices_[i] < 1) {
                throw ModelContractError("mixed radix digit " + std::to_string(i) +
                                         " has empty range");
            }
            strides_[i] = size_;
            size_ *= radices_[i];
        }
    }

    int size() const noexcept { return size_; }
    std::size_t digits() const noexcept { return radices_.size(); }
    int radix(std::size_t i) const { return radices_.at(i); }
    const std::vector<int>& radices() const noexcept { return radices_; }

    int encode(std::span<const int> coords) const {
        if (coords.size() != radices_.size()) {
            throw ModelContractError("coordinate count " + std::to_string(coords.size()) +
                                     " does not match " + std::to_string(radices_.size()));
        }
        int index = 0;
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if (coords[i] < 0 || coords[i] >= radices_[i]) {
                throw ModelContractError("coordinate " + std::to_string(i) + " = " +
                                         std::to_string(coords[i]) + " out of range");
            }
            index += coords[i] * strides_[i];
        }
        return index;
    }

    std::vector<int> decode(int index) const {
        assert(index >= 0 && index < size_);
        std::vector<int> coords(radices_.size());
        for (std::size_t i = 0; i < radices_.size(); ++i) {
            coords[i] = index / strides_[i];
            index -= coords[i] * strides_[i];
        }
        return coords;
    }

    int digit(int index, std::size_t i) const { return (index / strides_[i]) % radices_[i]; }

    /// Radix system of the first `length` digits.
    MixedRadix prefix(std::size_t length) const {
        return MixedRadix(std::vector<int>(radices_.begin(), radices_.begin() + length));
    }

    /// Flat index of the first `length` digits of a full index.
    int prefix_index(int index, std::size_t length) const {
        if (length == 0) return 0;
        return index / strides_[length - 1];
    }

private:
    std::vector<int> radices_;
    std::vector<int> strides_;
    int size_ = 1;
};

}  // namespace xlmdp
