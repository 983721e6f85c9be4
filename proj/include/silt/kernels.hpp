// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace silt::kernels {

// Two interchangeable implementations of every kernel: a plain serial
// reference and an OpenMP-parallel version. The parallel results never depend
// on the thread count (parallelism is over independent output elements with a
// fixed per-element accumulation order). Most kernels match the reference bit
// for bit; the conv2d kernels restructure the summation (blocked im2col with
// fixed-lane dots), so tests compare those against the reference within a
// tight relative tolerance instead.
enum class Backend { serial, parallel };

Backend active_backend();
void set_backend(Backend b);
// Reads SILT_KERNELS=serial|parallel once at startup; defaults to parallel.
Backend backend_from_env();

struct Conv2dDims {
    int in_c, in_h, in_w;
    int out_c, out_h, out_w;
    int kh, kw;
    int stride, pad;
};

constexpr int conv_out_size(int n, int k, int s, int p) { return (n + 2 * p - k) / s + 1; }

// All backward kernels accumulate (+=) into the destination buffer.

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d);
template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d);
template <typename T>
void conv2d_backward_weight(const T* gy, const T* x, T* gw, const Conv2dDims& d);
template <typename T>
void conv2d_backward_bias(const T* gy, T* gb, const Conv2dDims& d);

template <typename T>
void resize_bilinear_forward(const T* x, T* y, int c, int ih, int iw, int oh, int ow);
template <typename T>
void resize_bilinear_backward(const T* gy, T* gx, int c, int ih, int iw, int oh, int ow);

template <typename T>
void instance_norm_forward(const T* x, const T* gamma, const T* beta, T* y, T* mean, T* inv_std,
                           int c, int hw, T eps);
template <typename T>
void instance_norm_backward(const T* gy, const T* x, const T* gamma, const T* mean,
                            const T* inv_std, T* gx, T* ggamma, T* gbeta, int c, int hw);

// y[n,m] = sum_k a[n,k] * b[m,k]
template <typename T>
void matmul_nt_forward(const T* a, const T* b, T* y, int n, int m, int k);
template <typename T>
void matmul_nt_backward_a(const T* gy, const T* b, T* ga, int n, int m, int k);
template <typename T>
void matmul_nt_backward_b(const T* gy, const T* a, T* gb, int n, int m, int k);

template <typename T>
void leaky_relu_forward(const T* x, T* y, int64_t n, T slope);
template <typename T>
void leaky_relu_backward(const T* gy, const T* x, T* gx, int64_t n, T slope);

template <typename T>
void sigmoid_forward(const T* x, T* y, int64_t n);
template <typename T>
void sigmoid_backward(const T* gy, const T* y, T* gx, int64_t n);

// Fixed-chunk pairwise sum; identical result for both backends.
template <typename T>
T reduce_sum(const T* x, int64_t n);

}  // namespace silt::kernels
