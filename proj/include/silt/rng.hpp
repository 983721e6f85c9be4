// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "silt/tensor.hpp"

namespace silt {

/// Deterministic random stream. Uniform doubles come straight from the
/// mt19937_64 words and normals from Box-Muller, so the sequence is pinned
/// by the engine alone, not by library-specific distribution code.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n) by rejection; n must be > 0.
    uint64_t uniform_index(uint64_t n);

    double normal();

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Scaled-normal initial weights, std = gain / sqrt(fan_in). fan_in is the
/// per-output-element input count: product of all dims but the first for
/// rank >= 2, the lone dim otherwise.
template <typename T>
Tensor<T> seeded_normal(const std::vector<int>& shape, SeededRng& rng, double std_dev);

template <typename T>
std::vector<Tensor<T>> seeded_parameters(const std::vector<std::vector<int>>& shapes,
                                         uint64_t seed, double gain = 1.0);

/// Stable seed derivation for sub-streams (splitmix64 over seed and tag).
uint64_t derive_seed(uint64_t seed, uint64_t tag);

}  // namespace silt
