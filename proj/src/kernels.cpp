// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "kernels_detail.hpp"
#include "kernels_serial.inl"
#include "kernels_omp.inl"

namespace silt::kernels {

namespace {
Backend g_backend = backend_from_env();
}

Backend active_backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

Backend backend_from_env() {
    const char* e = std::getenv("SILT_KERNELS");
    if (e && std::strcmp(e, "serial") == 0) return Backend::serial;
    return Backend::parallel;
}

#define SILT_DISPATCH(fn, ...)                       \
    do {                                             \
        if (g_backend == Backend::serial)            \
            serial::fn(__VA_ARGS__);                 \
        else                                         \
            parallel::fn(__VA_ARGS__);               \
    } while (0)

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d) {
    SILT_DISPATCH(conv2d_forward, x, w, bias, y, d);
}
template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d) {
    SILT_DISPATCH(conv2d_backward_input, gy, w, gx, d);
}
template <typename T>
void conv2d_backward_weight(const T* gy, const T* x, T* gw, const Conv2dDims& d) {
    SILT_DISPATCH(conv2d_backward_weight, gy, x, gw, d);
}
template <typename T>
void conv2d_backward_bias(const T* gy, T* gb, const Conv2dDims& d) {
    SILT_DISPATCH(conv2d_backward_bias, gy, gb, d);
}
template <typename T>
void resize_bilinear_forward(const T* x, T* y, int c, int ih, int iw, int oh, int ow) {
    SILT_DISPATCH(resize_bilinear_forward, x, y, c, ih, iw, oh, ow);
}
template <typename T>
void resize_bilinear_backward(const T* gy, T* gx, int c, int ih, int iw, int oh, int ow) {
    SILT_DISPATCH(resize_bilinear_backward, gy, gx, c, ih, iw, oh, ow);
}
template <typename T>
void instance_norm_forward(const T* x, const T* gamma, const T* beta, T* y, T* mean, T* inv_std,
                           int c, int hw, T eps) {
    SILT_DISPATCH(instance_norm_forward, x, gamma, beta, y, mean, inv_std, c, hw, eps);
}
template <typename T>
void instance_norm_backward(const T* gy, const T* x, const T* gamma, const T* mean,
                            const T* inv_std, T* gx, T* ggamma, T* gbeta, int c, int hw) {
    SILT_DISPATCH(instance_norm_backward, gy, x, gamma, mean, inv_std, gx, ggamma, gbeta, c, hw);
}
template <typename T>
void matmul_nt_forward(const T* a, const T* b, T* y, int n, int m, int k) {
    SILT_DISPATCH(matmul_nt_forward, a, b, y, n, m, k);
}
template <typename T>
void matmul_nt_backward_a(const T* gy, const T* b, T* ga, int n, int m, int k) {
    SILT_DISPATCH(matmul_nt_backward_a, gy, b, ga, n, m, k);
}
template <typename T>
void matmul_nt_backward_b(const T* gy, const T* a, T* gb, int n, int m, int k) {
    SILT_DISPATCH(matmul_nt_backward_b, gy, a, gb, n, m, k);
}
template <typename T>
void leaky_relu_forward(const T* x, T* y, int64_t n, T slope) {
    SILT_DISPATCH(leaky_relu_forward, x, y, n, slope);
}
template <typename T>
void leaky_relu_backward(const T* gy, const T* x, T* gx, int64_t n, T slope) {
    SILT_DISPATCH(leaky_relu_backward, gy, x, gx, n, slope);
}
template <typename T>
void sigmoid_forward(const T* x, T* y, int64_t n) {
    SILT_DISPATCH(sigmoid_forward, x, y, n);
}
template <typename T>
void sigmoid_backward(const T* gy, const T* y, T* gx, int64_t n) {
    SILT_DISPATCH(sigmoid_backward, gy, y, gx, n);
}
template <typename T>
T reduce_sum(const T* x, int64_t n) {
    return g_backend == Backend::serial ? serial::reduce_sum(x, n) : parallel::reduce_sum(x, n);
}

#undef SILT_DISPATCH

#define SILT_INSTANTIATE(T)                                                                        \
    template void conv2d_forward<T>(const T*, const T*, const T*, T*, const Conv2dDims&);          \
    template void conv2d_backward_input<T>(const T*, const T*, T*, const Conv2dDims&);             \
    template void conv2d_backward_weight<T>(const T*, const T*, T*, const Conv2dDims&);            \
    template void conv2d_backward_bias<T>(const T*, T*, const Conv2dDims&);                        \
    template void resize_bilinear_forward<T>(const T*, T*, int, int, int, int, int);               \
    template void resize_bilinear_backward<T>(const T*, T*, int, int, int, int, int);              \
    template void instance_norm_forward<T>(const T*, const T*, const T*, T*, T*, T*, int, int, T); \
    template void instance_norm_backward<T>(const T*, const T*, const T*, const T*, const T*, T*,  \
                                            T*, T*, int, int);                                     \
    template void matmul_nt_forward<T>(const T*, const T*, T*, int, int, int);                     \
    template void matmul_nt_backward_a<T>(const T*, const T*, T*, int, int, int);                  \
    template void matmul_nt_backward_b<T>(const T*, const T*, T*, int, int, int);                  \
    template void leaky_relu_forward<T>(const T*, T*, int64_t, T);                                 \
    template void leaky_relu_backward<T>(const T*, const T*, T*, int64_t, T);                      \
    template void sigmoid_forward<T>(const T*, T*, int64_t);                                       \
    template void sigmoid_backward<T>(const T*, const T*, T*, int64_t);                            \
    template T reduce_sum<T>(const T*, int64_t);

SILT_INSTANTIATE(float)
SILT_INSTANTIATE(double)

#undef SILT_INSTANTIATE

}  // namespace silt::kernels
