// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace silt {

uint64_t SeededRng::uniform_index(uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be > 0");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = eng_();
    } while (x >= limit);
    return x % n;
}

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

template <typename T>
Tensor<T> seeded_normal(const std::vector<int>& shape, SeededRng& rng, double std_dev) {
    Tensor<T> t(shape);
    if (t.numel() == 0) throw std::invalid_argument("seeded_normal: zero-sized shape");
    for (auto& x : t.v) x = static_cast<T>(rng.normal() * std_dev);
    return t;
}

static double fan_in_of(const std::vector<int>& shape) {
    if (shape.empty()) return 1.0;
    if (shape.size() == 1) return static_cast<double>(shape[0]);
    double f = 1.0;
    for (size_t i = 1; i < shape.size(); ++i) f *= shape[i];
    return f;
}

template <typename T>
std::vector<Tensor<T>> seeded_parameters(const std::vector<std::vector<int>>& shapes,
                                         uint64_t seed, double gain) {
    if (shapes.empty()) throw std::invalid_argument("seeded_parameters: no shapes given");
    SeededRng rng(seed);
    std::vector<Tensor<T>> out;
    out.reserve(shapes.size());
    for (const auto& s : shapes) {
        const double std_dev = gain / std::sqrt(fan_in_of(s));
        out.push_back(seeded_normal<T>(s, rng, std_dev));
    }
    return out;
}

uint64_t derive_seed(uint64_t seed, uint64_t tag) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template Tensor<float> seeded_normal<float>(const std::vector<int>&, SeededRng&, double);
template Tensor<double> seeded_normal<double>(const std::vector<int>&, SeededRng&, double);
template std::vector<Tensor<float>> seeded_parameters<float>(const std::vector<std::vector<int>>&,
                                                             uint64_t, double);
template std::vector<Tensor<double>> seeded_parameters<double>(
    const std::vector<std::vector<int>>&, uint64_t, double);

}  // namespace silt
