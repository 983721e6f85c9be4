// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace silt::kernels::detail {

// Half-pixel-centre source coordinates, edge-clamped. Identity when oh == ih.
template <typename T>
struct BilinearTaps {
    struct Tap {
        int i0, i1;
        T w0, w1;
    };
    std::vector<Tap> rows, cols;

    BilinearTaps(int ih, int iw, int oh, int ow) {
        rows = build(ih, oh);
        cols = build(iw, ow);
    }

    static std::vector<Tap> build(int in, int out) {
        std::vector<Tap> taps(static_cast<size_t>(out));
        const double scale = static_cast<double>(in) / out;
        for (int o = 0; o < out; ++o) {
            double src = (o + 0.5) * scale - 0.5;
            if (src < 0) src = 0;
            if (src > in - 1) src = in - 1;
            const int i0 = static_cast<int>(src);
            const int i1 = i0 + 1 < in ? i0 + 1 : i0;
            const T f = static_cast<T>(src - i0);
            taps[static_cast<size_t>(o)] = {i0, i1, T(1) - f, f};
        }
        return taps;
    }
};

template <typename T>
void instance_norm_channel(const T* x, const T* gamma, const T* beta, T* y, T* mean, T* inv_std,
                           int ch, int hw, T eps) {
    const T* xp = x + static_cast<int64_t>(ch) * hw;
    T* yp = y + static_cast<int64_t>(ch) * hw;
    T m = 0;
    for (int i = 0; i < hw; ++i) m += xp[i];
    m /= static_cast<T>(hw);
    T var = 0;
    for (int i = 0; i < hw; ++i) {
        const T d = xp[i] - m;
        var += d * d;
    }
    var /= static_cast<T>(hw);
    const T istd = T(1) / std::sqrt(var + eps);
    mean[ch] = m;
    inv_std[ch] = istd;
    const T g = gamma[ch], b = beta[ch];
    for (int i = 0; i < hw; ++i) yp[i] = (xp[i] - m) * istd * g + b;
}

template <typename T>
void instance_norm_channel_backward(const T* gy, const T* x, const T* gamma, const T* mean,
                                    const T* inv_std, T* gx, T* ggamma, T* gbeta, int ch, int hw) {
    const T* xp = x + static_cast<int64_t>(ch) * hw;
    const T* gp = gy + static_cast<int64_t>(ch) * hw;
    T* gxp = gx + static_cast<int64_t>(ch) * hw;
    const T m = mean[ch], istd = inv_std[ch], g = gamma[ch];
    T sum_g = 0, sum_gx = 0;
    for (int i = 0; i < hw; ++i) {
        const T xhat = (xp[i] - m) * istd;
        sum_g += gp[i];
        sum_gx += gp[i] * xhat;
    }
    ggamma[ch] += sum_gx;
    gbeta[ch] += sum_g;
    const T n = static_cast<T>(hw);
    for (int i = 0; i < hw; ++i) {
        const T xhat = (xp[i] - m) * istd;
        gxp[i] += g * istd * (gp[i] - sum_g / n - xhat * sum_gx / n);
    }
}

// Fixed 16-lane partial sums: the one summation order every backend uses for
// dot-product reductions, so results do not depend on the implementation and
// the lane loop still vectorizes.
constexpr int kDotLanes = 16;

template <typename T>
T lane_dot(const T* a, const T* b, int n) {
    T acc[kDotLanes] = {};
    int i = 0;
    for (; i + kDotLanes <= n; i += kDotLanes)
        for (int l = 0; l < kDotLanes; ++l) acc[l] += a[i + l] * b[i + l];
    for (int l = 0; i + l < n; ++l) acc[l] += a[i + l] * b[i + l];
    T total = 0;
    for (int l = 0; l < kDotLanes; ++l) total += acc[l];
    return total;
}

template <typename T>
T lane_dot_strided(const T* a, int64_t stride_a, const T* b, int n) {
    T acc[kDotLanes] = {};
    int i = 0;
    for (; i + kDotLanes <= n; i += kDotLanes)
        for (int l = 0; l < kDotLanes; ++l) acc[l] += a[(i + l) * stride_a] * b[i + l];
    for (int l = 0; i + l < n; ++l) acc[l] += a[(i + l) * stride_a] * b[i + l];
    T total = 0;
    for (int l = 0; l < kDotLanes; ++l) total += acc[l];
    return total;
}

// Valid ox range so that ix = ox*stride + kx - pad stays inside [0, in_w).
struct OxRange {
    int lo, hi;  // inclusive; empty when lo > hi
};
inline OxRange ox_range(int kx, int pad, int stride, int in_w, int out_w) {
    const int lo_num = pad - kx;
    int lo = lo_num <= 0 ? 0 : (lo_num + stride - 1) / stride;
    const int hi_num = in_w - 1 + pad - kx;
    int hi = hi_num < 0 ? -1 : hi_num / stride;
    if (hi > out_w - 1) hi = out_w - 1;
    return {lo, hi};
}

constexpr int64_t kChunk = 4096;

inline int64_t chunk_count(int64_t n) { return (n + kChunk - 1) / kChunk; }

template <typename T>
T chunk_sum(const T* x, int64_t n, int64_t chunk) {
    const int64_t lo = chunk * kChunk;
    const int64_t hi = lo + kChunk < n ? lo + kChunk : n;
    T acc = 0;
    for (int64_t i = lo; i < hi; ++i) acc += x[i];
    return acc;
}

}  // namespace silt::kernels::detail
