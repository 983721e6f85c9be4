// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
//
// The OpenMP kernels must agree bit for bit with the serial reference.

#include <cstring>

#include "doctest.h"
#include "silt/kernels.hpp"
#include "silt/rng.hpp"
#include "silt/tensor.hpp"

using namespace silt;

namespace {

Tensor<float> rand_tensor(std::vector<int> shape, SeededRng& rng, double lo = -1, double hi = 1) {
    Tensor<float> t(std::move(shape));
    for (auto& v : t.v) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

bool bits_equal(const Tensor<float>& a, const Tensor<float>& b) {
    return a.shape == b.shape &&
           std::memcmp(a.data(), b.data(), a.v.size() * sizeof(float)) == 0;
}

// Tolerance scaled by the tensor magnitude: summation-order changes move
// every element by rounding noise proportional to the largest partial sums.
bool close_enough(const Tensor<float>& a, const Tensor<float>& b, double rel) {
    if (a.shape != b.shape) return false;
    double scale = 1.0;
    for (size_t i = 0; i < a.v.size(); ++i)
        scale = std::max({scale, std::abs(double(a.v[i])), std::abs(double(b.v[i]))});
    for (size_t i = 0; i < a.v.size(); ++i)
        if (std::abs(double(a.v[i]) - double(b.v[i])) > rel * scale) return false;
    return true;
}

struct BackendGuard {
    kernels::Backend saved = kernels::active_backend();
    ~BackendGuard() { kernels::set_backend(saved); }
};

template <typename Fn>
void expect_backends_match(Fn&& compute) {
    BackendGuard guard;
    kernels::set_backend(kernels::Backend::serial);
    const Tensor<float> serial = compute();
    kernels::set_backend(kernels::Backend::parallel);
    const Tensor<float> parallel = compute();
    CHECK(bits_equal(serial, parallel));
}

// The im2col conv kernels sum in a different (fixed) order than the naive
// reference, so they agree to rounding rather than bit for bit.
template <typename Fn>
void expect_backends_close(Fn&& compute) {
    BackendGuard guard;
    kernels::set_backend(kernels::Backend::serial);
    const Tensor<float> serial = compute();
    kernels::set_backend(kernels::Backend::parallel);
    const Tensor<float> parallel = compute();
    CHECK(close_enough(serial, parallel, 1e-4));
}

}  // namespace

TEST_CASE("conv2d forward and backward match the serial reference") {
    SeededRng rng(42);
    for (int stride : {1, 2}) {
        kernels::Conv2dDims d{5, 13, 11, 7, 0, 0, 3, 3, stride, 1};
        d.out_h = kernels::conv_out_size(d.in_h, d.kh, stride, d.pad);
        d.out_w = kernels::conv_out_size(d.in_w, d.kw, stride, d.pad);
        const auto x = rand_tensor({d.in_c, d.in_h, d.in_w}, rng);
        const auto w = rand_tensor({d.out_c, d.in_c, d.kh, d.kw}, rng);
        const auto b = rand_tensor({d.out_c}, rng);
        const auto gy = rand_tensor({d.out_c, d.out_h, d.out_w}, rng);

        expect_backends_close([&] {
            Tensor<float> y({d.out_c, d.out_h, d.out_w});
            kernels::conv2d_forward(x.data(), w.data(), b.data(), y.data(), d);
            return y;
        });
        expect_backends_close([&] {
            Tensor<float> gx({d.in_c, d.in_h, d.in_w});
            kernels::conv2d_backward_input(gy.data(), w.data(), gx.data(), d);
            return gx;
        });
        expect_backends_close([&] {
            Tensor<float> gw({d.out_c, d.in_c, d.kh, d.kw});
            kernels::conv2d_backward_weight(gy.data(), x.data(), gw.data(), d);
            return gw;
        });
        expect_backends_match([&] {
            Tensor<float> gb({d.out_c});
            kernels::conv2d_backward_bias(gy.data(), gb.data(), d);
            return gb;
        });
    }
}

TEST_CASE("conv2d with kernel-4 pad-2 discriminator geometry matches") {
    SeededRng rng(7);
    kernels::Conv2dDims d{3, 16, 16, 8, 0, 0, 4, 4, 2, 2};
    d.out_h = kernels::conv_out_size(d.in_h, d.kh, d.stride, d.pad);
    d.out_w = kernels::conv_out_size(d.in_w, d.kw, d.stride, d.pad);
    const auto x = rand_tensor({d.in_c, d.in_h, d.in_w}, rng);
    const auto w = rand_tensor({d.out_c, d.in_c, d.kh, d.kw}, rng);
    const auto b = rand_tensor({d.out_c}, rng);
    expect_backends_close([&] {
        Tensor<float> y({d.out_c, d.out_h, d.out_w});
        kernels::conv2d_forward(x.data(), w.data(), b.data(), y.data(), d);
        return y;
    });
}

TEST_CASE("bilinear resize matches serial in both directions") {
    SeededRng rng(3);
    const auto x = rand_tensor({4, 9, 14}, rng);
    const auto gy = rand_tensor({4, 17, 6}, rng);
    expect_backends_match([&] {
        Tensor<float> y({4, 17, 6});
        kernels::resize_bilinear_forward(x.data(), y.data(), 4, 9, 14, 17, 6);
        return y;
    });
    expect_backends_match([&] {
        Tensor<float> gx({4, 9, 14});
        kernels::resize_bilinear_backward(gy.data(), gx.data(), 4, 9, 14, 17, 6);
        return gx;
    });
}

TEST_CASE("instance norm matches serial") {
    SeededRng rng(4);
    const int c = 6, hw = 35;
    const auto x = rand_tensor({c, 5, 7}, rng);
    const auto gamma = rand_tensor({c}, rng, 0.5, 1.5);
    const auto beta = rand_tensor({c}, rng);
    const auto gy = rand_tensor({c, 5, 7}, rng);
    Tensor<float> mean({c}), istd({c});
    expect_backends_match([&] {
        Tensor<float> y({c, 5, 7});
        kernels::instance_norm_forward(x.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                                       istd.data(), c, hw, 1e-5f);
        return y;
    });
    expect_backends_match([&] {
        Tensor<float> gx({c, 5, 7});
        Tensor<float> gg({c}), gb({c});
        kernels::instance_norm_backward(gy.data(), x.data(), gamma.data(), mean.data(),
                                        istd.data(), gx.data(), gg.data(), gb.data(), c, hw);
        return gx;
    });
}

TEST_CASE("matmul_nt and reductions match serial") {
    SeededRng rng(5);
    const auto a = rand_tensor({33, 17}, rng);
    const auto b = rand_tensor({29, 17}, rng);
    const auto gy = rand_tensor({33, 29}, rng);
    expect_backends_match([&] {
        Tensor<float> y({33, 29});
        kernels::matmul_nt_forward(a.data(), b.data(), y.data(), 33, 29, 17);
        return y;
    });
    expect_backends_match([&] {
        Tensor<float> ga({33, 17});
        kernels::matmul_nt_backward_a(gy.data(), b.data(), ga.data(), 33, 29, 17);
        return ga;
    });
    expect_backends_match([&] {
        Tensor<float> gb({29, 17});
        kernels::matmul_nt_backward_b(gy.data(), a.data(), gb.data(), 33, 29, 17);
        return gb;
    });

    const auto big = rand_tensor({100000}, rng);
    expect_backends_match([&] {
        return Tensor<float>::scalar(kernels::reduce_sum(big.data(), big.numel()));
    });
}

TEST_CASE("activations match serial") {
    SeededRng rng(6);
    const auto x = rand_tensor({4000}, rng, -2, 2);
    const auto gy = rand_tensor({4000}, rng);
    expect_backends_match([&] {
        Tensor<float> y({4000});
        kernels::leaky_relu_forward(x.data(), y.data(), x.numel(), 0.2f);
        return y;
    });
    expect_backends_match([&] {
        Tensor<float> y({4000});
        kernels::sigmoid_forward(x.data(), y.data(), x.numel());
        return y;
    });
    Tensor<float> sig({4000});
    kernels::sigmoid_forward(x.data(), sig.data(), x.numel());
    expect_backends_match([&] {
        Tensor<float> gx({4000});
        kernels::sigmoid_backward(gy.data(), sig.data(), gx.data(), x.numel());
        return gx;
    });
}
