// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace silt {

template <typename T>
Var<T> Graph<T>::add_node(Tensor<T> val, bool requires_grad) {
    Node n;
    n.val = std::move(val);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var<T>{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var<T> Graph<T>::leaf(Tensor<T> v, bool requires_grad) {
    return add_node(std::move(v), requires_grad);
}

template <typename T>
Var<T> Graph<T>::constant(Tensor<T> v) {
    return add_node(std::move(v), false);
}

template <typename T>
Tensor<T>& Graph<T>::grad(Var<T> x) {
    Node& n = nodes_[static_cast<size_t>(x.id)];
    if (!n.grad_alloc) {
        n.grad_buf = Tensor<T>(n.val.shape);
        n.grad_alloc = true;
    }
    return n.grad_buf;
}

template <typename T>
void Graph<T>::backward(Var<T> out) {
    const Node& o = nodes_[static_cast<size_t>(out.id)];
    if (o.val.numel() != 1)
        throw std::invalid_argument("backward: output is not scalar, shape " +
                                    shape_string(o.val.shape));
    grad(out).v[0] = T(1);
    for (int i = out.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.back && n.grad_alloc && n.requires_grad) n.back(*this);
    }
}

template <typename T>
void Graph<T>::zero_grads() {
    for (Node& n : nodes_) {
        n.grad_alloc = false;
        n.grad_buf = Tensor<T>();
    }
}

namespace {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_string(a.shape) + " vs " + shape_string(b.shape));
}

}  // namespace

template <typename T>
Var<T> add(Graph<T>& g, Var<T> a, Var<T> b) {
    check_same_shape(g.val(a), g.val(b), "add");
    Tensor<T> out = g.val(a);
    const auto& bv = g.val(b);
    for (int64_t i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] += bv.v[static_cast<size_t>(i)];
    const bool req = g.requires_grad(a) || g.requires_grad(b);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, b, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            if (g.requires_grad(a)) {
                auto& ga = g.grad(a);
                for (int64_t i = 0; i < go.numel(); ++i) ga.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)];
            }
            if (g.requires_grad(b)) {
                auto& gb = g.grad(b);
                for (int64_t i = 0; i < go.numel(); ++i) gb.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)];
            }
        });
    return o;
}

template <typename T>
Var<T> sub(Graph<T>& g, Var<T> a, Var<T> b) {
    check_same_shape(g.val(a), g.val(b), "sub");
    Tensor<T> out = g.val(a);
    const auto& bv = g.val(b);
    for (int64_t i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] -= bv.v[static_cast<size_t>(i)];
    const bool req = g.requires_grad(a) || g.requires_grad(b);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, b, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            if (g.requires_grad(a)) {
                auto& ga = g.grad(a);
                for (int64_t i = 0; i < go.numel(); ++i) ga.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)];
            }
            if (g.requires_grad(b)) {
                auto& gb = g.grad(b);
                for (int64_t i = 0; i < go.numel(); ++i) gb.v[static_cast<size_t>(i)] -= go.v[static_cast<size_t>(i)];
            }
        });
    return o;
}

template <typename T>
Var<T> mul(Graph<T>& g, Var<T> a, Var<T> b) {
    check_same_shape(g.val(a), g.val(b), "mul");
    Tensor<T> out = g.val(a);
    const auto& bv = g.val(b);
    for (int64_t i = 0; i < out.numel(); ++i) out.v[static_cast<size_t>(i)] *= bv.v[static_cast<size_t>(i)];
    const bool req = g.requires_grad(a) || g.requires_grad(b);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, b, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            if (g.requires_grad(a)) {
                auto& ga = g.grad(a);
                const auto& bv2 = g.val(b);
                for (int64_t i = 0; i < go.numel(); ++i)
                    ga.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)] * bv2.v[static_cast<size_t>(i)];
            }
            if (g.requires_grad(b)) {
                auto& gb = g.grad(b);
                const auto& av = g.val(a);
                for (int64_t i = 0; i < go.numel(); ++i)
                    gb.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)] * av.v[static_cast<size_t>(i)];
            }
        });
    return o;
}

template <typename T>
Var<T> add_scalar(Graph<T>& g, Var<T> a, T s) {
    Tensor<T> out = g.val(a);
    for (auto& x : out.v) x += s;
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            auto& ga = g.grad(a);
            for (int64_t i = 0; i < go.numel(); ++i) ga.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)];
        });
    return o;
}

template <typename T>
Var<T> mul_scalar(Graph<T>& g, Var<T> a, T s) {
    Tensor<T> out = g.val(a);
    for (auto& x : out.v) x *= s;
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o, s](Graph<T>& g) {
            const auto& go = g.grad(o);
            auto& ga = g.grad(a);
            for (int64_t i = 0; i < go.numel(); ++i) ga.v[static_cast<size_t>(i)] += s * go.v[static_cast<size_t>(i)];
        });
    return o;
}

template <typename T>
Var<T> abs_elem(Graph<T>& g, Var<T> a) {
    Tensor<T> out = g.val(a);
    for (auto& x : out.v) x = std::abs(x);
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            const auto& av = g.val(a);
            auto& ga = g.grad(a);
            for (int64_t i = 0; i < go.numel(); ++i) {
                const T x = av.v[static_cast<size_t>(i)];
                const T s = x > 0 ? T(1) : (x < 0 ? T(-1) : T(0));
                ga.v[static_cast<size_t>(i)] += s * go.v[static_cast<size_t>(i)];
            }
        });
    return o;
}

template <typename T>
Var<T> log_elem(Graph<T>& g, Var<T> a) {
    Tensor<T> out = g.val(a);
    for (auto& x : out.v) x = std::log(x);
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            const auto& av = g.val(a);
            auto& ga = g.grad(a);
            for (int64_t i = 0; i < go.numel(); ++i)
                ga.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)] / av.v[static_cast<size_t>(i)];
        });
    return o;
}

template <typename T>
Var<T> exp_elem(Graph<T>& g, Var<T> a) {
    Tensor<T> out = g.val(a);
    for (auto& x : out.v) x = std::exp(x);
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            const auto& ov = g.val(o);
            auto& ga = g.grad(a);
            for (int64_t i = 0; i < go.numel(); ++i)
                ga.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(i)] * ov.v[static_cast<size_t>(i)];
        });
    return o;
}

template <typename T>
Var<T> leaky_relu(Graph<T>& g, Var<T> a, T slope) {
    const auto& av = g.val(a);
    Tensor<T> out(av.shape);
    kernels::leaky_relu_forward(av.data(), out.data(), av.numel(), slope);
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o, slope](Graph<T>& g) {
            const auto& go = g.grad(o);
            const auto& av2 = g.val(a);
            kernels::leaky_relu_backward(go.data(), av2.data(), g.grad(a).data(), go.numel(),
                                         slope);
        });
    return o;
}

template <typename T>
Var<T> sigmoid(Graph<T>& g, Var<T> a) {
    const auto& av = g.val(a);
    Tensor<T> out(av.shape);
    kernels::sigmoid_forward(av.data(), out.data(), av.numel());
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            const auto& ov = g.val(o);
            kernels::sigmoid_backward(go.data(), ov.data(), g.grad(a).data(), go.numel());
        });
    return o;
}

template <typename T>
Var<T> detach(Graph<T>& g, Var<T> a) {
    return g.constant(g.val(a));
}

template <typename T>
Var<T> conv2d(Graph<T>& g, Var<T> x, Var<T> w, Var<T> b, int stride, int pad) {
    const auto& xv = g.val(x);
    const auto& wv = g.val(w);
    const auto& bv = g.val(b);
    if (xv.ndim() != 3 || wv.ndim() != 4)
        throw std::invalid_argument("conv2d: expected CHW input and OIHW weights");
    if (wv.dim(1) != xv.dim(0))
        throw std::invalid_argument("conv2d: input channels " + std::to_string(xv.dim(0)) +
                                    " do not match weight channels " + std::to_string(wv.dim(1)));
    if (bv.numel() != wv.dim(0)) throw std::invalid_argument("conv2d: bias size mismatch");
    kernels::Conv2dDims d;
    d.in_c = xv.dim(0);
    d.in_h = xv.dim(1);
    d.in_w = xv.dim(2);
    d.out_c = wv.dim(0);
    d.kh = wv.dim(2);
    d.kw = wv.dim(3);
    d.stride = stride;
    d.pad = pad;
    d.out_h = kernels::conv_out_size(d.in_h, d.kh, stride, pad);
    d.out_w = kernels::conv_out_size(d.in_w, d.kw, stride, pad);
    if (d.out_h < 1 || d.out_w < 1)
        throw std::invalid_argument("conv2d: output would be empty for input " +
                                    shape_string(xv.shape));
    Tensor<T> out({d.out_c, d.out_h, d.out_w});
    kernels::conv2d_forward(xv.data(), wv.data(), bv.data(), out.data(), d);
    const bool req = g.requires_grad(x) || g.requires_grad(w) || g.requires_grad(b);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [x, w, b, o, d](Graph<T>& g) {
            const auto& go = g.grad(o);
            if (g.requires_grad(x))
                kernels::conv2d_backward_input(go.data(), g.val(w).data(), g.grad(x).data(), d);
            if (g.requires_grad(w))
                kernels::conv2d_backward_weight(go.data(), g.val(x).data(), g.grad(w).data(), d);
            if (g.requires_grad(b)) kernels::conv2d_backward_bias(go.data(), g.grad(b).data(), d);
        });
    return o;
}

template <typename T>
Var<T> resize_bilinear(Graph<T>& g, Var<T> x, int out_h, int out_w) {
    const auto& xv = g.val(x);
    if (xv.ndim() != 3) throw std::invalid_argument("resize_bilinear: expected CHW input");
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize_bilinear: degenerate target " +
                                    std::to_string(out_h) + "x" + std::to_string(out_w));
    const int c = xv.dim(0), ih = xv.dim(1), iw = xv.dim(2);
    Tensor<T> out({c, out_h, out_w});
    kernels::resize_bilinear_forward(xv.data(), out.data(), c, ih, iw, out_h, out_w);
    const bool req = g.requires_grad(x);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [x, o, c, ih, iw, out_h, out_w](Graph<T>& g) {
            kernels::resize_bilinear_backward(g.grad(o).data(), g.grad(x).data(), c, ih, iw,
                                              out_h, out_w);
        });
    return o;
}

template <typename T>
Var<T> concat_channels(Graph<T>& g, const std::vector<Var<T>>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_channels: no inputs");
    const int h = g.val(xs[0]).dim(1), w = g.val(xs[0]).dim(2);
    int c_total = 0;
    bool req = false;
    for (const auto& x : xs) {
        const auto& v = g.val(x);
        if (v.ndim() != 3 || v.dim(1) != h || v.dim(2) != w)
            throw std::invalid_argument("concat_channels: spatial shape mismatch " +
                                        shape_string(v.shape));
        c_total += v.dim(0);
        req = req || g.requires_grad(x);
    }
    Tensor<T> out({c_total, h, w});
    int64_t off = 0;
    for (const auto& x : xs) {
        const auto& v = g.val(x);
        std::copy(v.v.begin(), v.v.end(), out.v.begin() + off);
        off += v.numel();
    }
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [xs, o](Graph<T>& g) {
            const auto& go = g.grad(o);
            int64_t off2 = 0;
            for (const auto& x : xs) {
                const int64_t n = g.val(x).numel();
                if (g.requires_grad(x)) {
                    auto& gx = g.grad(x);
                    for (int64_t i = 0; i < n; ++i)
                        gx.v[static_cast<size_t>(i)] += go.v[static_cast<size_t>(off2 + i)];
                }
                off2 += n;
            }
        });
    return o;
}

template <typename T>
Var<T> instance_norm(Graph<T>& g, Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
    const auto& xv = g.val(x);
    if (xv.ndim() != 3) throw std::invalid_argument("instance_norm: expected CHW input");
    const int c = xv.dim(0), hw = xv.dim(1) * xv.dim(2);
    if (g.val(gamma).numel() != c || g.val(beta).numel() != c)
        throw std::invalid_argument("instance_norm: affine parameter size mismatch");
    Tensor<T> out(xv.shape);
    auto mean = std::make_shared<Tensor<T>>(std::vector<int>{c});
    auto istd = std::make_shared<Tensor<T>>(std::vector<int>{c});
    kernels::instance_norm_forward(xv.data(), g.val(gamma).data(), g.val(beta).data(), out.data(),
                                   mean->data(), istd->data(), c, hw, eps);
    const bool req = g.requires_grad(x) || g.requires_grad(gamma) || g.requires_grad(beta);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [x, gamma, beta, o, c, hw, mean, istd](Graph<T>& g) {
            const auto& go = g.grad(o);
            // gamma/beta gradients are cheap; compute all three together.
            Tensor<T> gg({c}), gb({c});
            Tensor<T> gx_tmp;
            T* gx_ptr = nullptr;
            if (g.requires_grad(x)) {
                gx_ptr = g.grad(x).data();
            } else {
                gx_tmp = Tensor<T>(g.val(x).shape);
                gx_ptr = gx_tmp.data();
            }
            kernels::instance_norm_backward(go.data(), g.val(x).data(), g.val(gamma).data(),
                                            mean->data(), istd->data(), gx_ptr, gg.data(),
                                            gb.data(), c, hw);
            if (g.requires_grad(gamma)) {
                auto& dst = g.grad(gamma);
                for (int i = 0; i < c; ++i) dst.v[static_cast<size_t>(i)] += gg.v[static_cast<size_t>(i)];
            }
            if (g.requires_grad(beta)) {
                auto& dst = g.grad(beta);
                for (int i = 0; i < c; ++i) dst.v[static_cast<size_t>(i)] += gb.v[static_cast<size_t>(i)];
            }
        });
    return o;
}

template <typename T>
Var<T> channel_affine(Graph<T>& g, Var<T> x, Tensor<T> scale, Tensor<T> shift) {
    const auto& xv = g.val(x);
    if (xv.ndim() != 3) throw std::invalid_argument("channel_affine: expected CHW input");
    const int c = xv.dim(0);
    const int64_t hw = static_cast<int64_t>(xv.dim(1)) * xv.dim(2);
    if (scale.numel() != c || shift.numel() != c)
        throw std::invalid_argument("channel_affine: constant size mismatch");
    Tensor<T> out(xv.shape);
    for (int ch = 0; ch < c; ++ch) {
        const T s = scale.v[static_cast<size_t>(ch)], t = shift.v[static_cast<size_t>(ch)];
        const T* xp = xv.data() + ch * hw;
        T* yp = out.data() + ch * hw;
        for (int64_t i = 0; i < hw; ++i) yp[i] = xp[i] * s + t;
    }
    const bool req = g.requires_grad(x);
    Var<T> o = g.add_node(std::move(out), req);
    if (req) {
        auto sc = std::make_shared<Tensor<T>>(std::move(scale));
        g.set_back(o, [x, o, c, hw, sc](Graph<T>& g) {
            const auto& go = g.grad(o);
            auto& gx = g.grad(x);
            for (int ch = 0; ch < c; ++ch) {
                const T s = sc->v[static_cast<size_t>(ch)];
                const T* gp = go.data() + ch * hw;
                T* dst = gx.data() + ch * hw;
                for (int64_t i = 0; i < hw; ++i) dst[i] += gp[i] * s;
            }
        });
    }
    return o;
}

template <typename T>
Var<T> sum_all(Graph<T>& g, Var<T> a) {
    const auto& av = g.val(a);
    Tensor<T> out = Tensor<T>::scalar(kernels::reduce_sum(av.data(), av.numel()));
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o](Graph<T>& g) {
            const T go = g.grad(o).v[0];
            auto& ga = g.grad(a);
            for (auto& x : ga.v) x += go;
        });
    return o;
}

template <typename T>
Var<T> mean_all(Graph<T>& g, Var<T> a) {
    const auto& av = g.val(a);
    const int64_t n = av.numel();
    if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
    Tensor<T> out = Tensor<T>::scalar(kernels::reduce_sum(av.data(), n) / static_cast<T>(n));
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o, n](Graph<T>& g) {
            const T go = g.grad(o).v[0] / static_cast<T>(n);
            auto& ga = g.grad(a);
            for (auto& x : ga.v) x += go;
        });
    return o;
}

template <typename T>
Var<T> matmul_nt(Graph<T>& g, Var<T> a, Var<T> b) {
    const auto& av = g.val(a);
    const auto& bv = g.val(b);
    if (av.ndim() != 2 || bv.ndim() != 2 || av.dim(1) != bv.dim(1))
        throw std::invalid_argument("matmul_nt: incompatible shapes " + shape_string(av.shape) +
                                    " vs " + shape_string(bv.shape));
    const int n = av.dim(0), m = bv.dim(0), k = av.dim(1);
    Tensor<T> out({n, m});
    kernels::matmul_nt_forward(av.data(), bv.data(), out.data(), n, m, k);
    const bool req = g.requires_grad(a) || g.requires_grad(b);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, b, o, n, m, k](Graph<T>& g) {
            const auto& go = g.grad(o);
            if (g.requires_grad(a))
                kernels::matmul_nt_backward_a(go.data(), g.val(b).data(), g.grad(a).data(), n, m, k);
            if (g.requires_grad(b))
                kernels::matmul_nt_backward_b(go.data(), g.val(a).data(), g.grad(b).data(), n, m, k);
        });
    return o;
}

template <typename T>
Var<T> l2_normalize_rows(Graph<T>& g, Var<T> a, T eps) {
    const auto& av = g.val(a);
    if (av.ndim() != 2) throw std::invalid_argument("l2_normalize_rows: expected 2-d input");
    const int n = av.dim(0), k = av.dim(1);
    Tensor<T> out(av.shape);
    auto norms = std::make_shared<Tensor<T>>(std::vector<int>{n});
    for (int i = 0; i < n; ++i) {
        const T* row = av.data() + static_cast<int64_t>(i) * k;
        T s = 0;
        for (int j = 0; j < k; ++j) s += row[j] * row[j];
        const T nm = std::sqrt(s + eps);
        norms->v[static_cast<size_t>(i)] = nm;
        T* orow = out.data() + static_cast<int64_t>(i) * k;
        for (int j = 0; j < k; ++j) orow[j] = row[j] / nm;
    }
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [a, o, n, k, norms](Graph<T>& g) {
            const auto& go = g.grad(o);
            const auto& ov = g.val(o);
            auto& ga = g.grad(a);
            for (int i = 0; i < n; ++i) {
                const T* grow = go.data() + static_cast<int64_t>(i) * k;
                const T* yrow = ov.data() + static_cast<int64_t>(i) * k;
                T* drow = ga.data() + static_cast<int64_t>(i) * k;
                T dot = 0;
                for (int j = 0; j < k; ++j) dot += grow[j] * yrow[j];
                const T inv = T(1) / norms->v[static_cast<size_t>(i)];
                for (int j = 0; j < k; ++j) drow[j] += (grow[j] - yrow[j] * dot) * inv;
            }
        });
    return o;
}

template <typename T>
Var<T> chw_to_rows(Graph<T>& g, Var<T> x) {
    const auto& xv = g.val(x);
    if (xv.ndim() != 3) throw std::invalid_argument("chw_to_rows: expected CHW input");
    const int c = xv.dim(0);
    const int64_t hw = static_cast<int64_t>(xv.dim(1)) * xv.dim(2);
    Tensor<T> out({static_cast<int>(hw), c});
    for (int ch = 0; ch < c; ++ch)
        for (int64_t p = 0; p < hw; ++p)
            out.v[static_cast<size_t>(p * c + ch)] = xv.v[static_cast<size_t>(ch * hw + p)];
    const bool req = g.requires_grad(x);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [x, o, c, hw](Graph<T>& g) {
            const auto& go = g.grad(o);
            auto& gx = g.grad(x);
            for (int ch = 0; ch < c; ++ch)
                for (int64_t p = 0; p < hw; ++p)
                    gx.v[static_cast<size_t>(ch * hw + p)] += go.v[static_cast<size_t>(p * c + ch)];
        });
    return o;
}

template <typename T>
Var<T> gather_rows(Graph<T>& g, Var<T> a, std::vector<int> rows) {
    const auto& av = g.val(a);
    if (av.ndim() != 2) throw std::invalid_argument("gather_rows: expected 2-d input");
    const int k = av.dim(1);
    Tensor<T> out({static_cast<int>(rows.size()), k});
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= av.dim(0))
            throw std::out_of_range("gather_rows: row index out of range");
        std::copy_n(av.data() + static_cast<int64_t>(rows[r]) * k, k,
                    out.data() + static_cast<int64_t>(r) * k);
    }
    const bool req = g.requires_grad(a);
    Var<T> o = g.add_node(std::move(out), req);
    if (req) {
        auto idx = std::make_shared<std::vector<int>>(std::move(rows));
        g.set_back(o, [a, o, k, idx](Graph<T>& g) {
            const auto& go = g.grad(o);
            auto& ga = g.grad(a);
            for (size_t r = 0; r < idx->size(); ++r) {
                const T* src = go.data() + static_cast<int64_t>(r) * k;
                T* dst = ga.data() + static_cast<int64_t>((*idx)[r]) * k;
                for (int j = 0; j < k; ++j) dst[j] += src[j];
            }
        });
    }
    return o;
}

template <typename T>
Var<T> cx_score(Graph<T>& g, Var<T> sim, T bandwidth, T eps) {
    const auto& sv = g.val(sim);
    if (sv.ndim() != 2) throw std::invalid_argument("cx_score: expected 2-d similarity matrix");
    if (bandwidth <= T(0) || eps <= T(0))
        throw std::invalid_argument("cx_score: bandwidth and eps must be positive");
    const int na = sv.dim(0), nb = sv.dim(1);
    if (na == 0 || nb == 0) throw std::invalid_argument("cx_score: empty vector set");

    auto prob = std::make_shared<Tensor<T>>(std::vector<int>{na, nb});
    auto dmin = std::make_shared<Tensor<T>>(std::vector<int>{na});
    auto argmin = std::make_shared<std::vector<int>>(static_cast<size_t>(na));
    auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(nb));

    // Row-wise normalized distances -> per-column softmax.
    std::vector<T> logits(static_cast<size_t>(na) * nb);
    for (int i = 0; i < na; ++i) {
        const T* srow = sv.data() + static_cast<int64_t>(i) * nb;
        T best = std::numeric_limits<T>::infinity();
        int besti = 0;
        for (int j = 0; j < nb; ++j) {
            const T d = T(1) - srow[j];
            if (d < best) {
                best = d;
                besti = j;
            }
        }
        dmin->v[static_cast<size_t>(i)] = best;
        (*argmin)[static_cast<size_t>(i)] = besti;
        const T denom = best + eps;
        for (int j = 0; j < nb; ++j) {
            const T d = T(1) - srow[j];
            logits[static_cast<size_t>(i) * nb + j] = (T(1) - d / denom) / bandwidth;
        }
    }
    T score_sum = 0;
    for (int j = 0; j < nb; ++j) {
        T mx = -std::numeric_limits<T>::infinity();
        for (int i = 0; i < na; ++i) mx = std::max(mx, logits[static_cast<size_t>(i) * nb + j]);
        T z = 0;
        for (int i = 0; i < na; ++i) {
            const T e = std::exp(logits[static_cast<size_t>(i) * nb + j] - mx);
            prob->v[static_cast<size_t>(i) * nb + j] = e;
            z += e;
        }
        T best = -1;
        int besti = 0;
        for (int i = 0; i < na; ++i) {
            T& p = prob->v[static_cast<size_t>(i) * nb + j];
            p /= z;
            if (p > best) {
                best = p;
                besti = i;
            }
        }
        (*argmax)[static_cast<size_t>(j)] = besti;
        score_sum += best;
    }
    Tensor<T> out = Tensor<T>::scalar(score_sum / static_cast<T>(nb));
    const bool req = g.requires_grad(sim);
    Var<T> o = g.add_node(std::move(out), req);
    if (req)
        g.set_back(o, [sim, o, na, nb, bandwidth, eps, prob, dmin, argmin, argmax](Graph<T>& g) {
            const T gout = g.grad(o).v[0] / static_cast<T>(nb);
            const auto& sv2 = g.val(sim);
            auto& gs = g.grad(sim);
            std::vector<T> gd(static_cast<size_t>(na) * nb, T(0));
            std::vector<T> gdmin(static_cast<size_t>(na), T(0));
            for (int j = 0; j < nb; ++j) {
                const int istar = (*argmax)[static_cast<size_t>(j)];
                const T pstar = prob->v[static_cast<size_t>(istar) * nb + j];
                const T dotj = gout * pstar;  // sum_k gP[k,j] * P[k,j], gP nonzero at istar only
                for (int i = 0; i < na; ++i) {
                    const T p = prob->v[static_cast<size_t>(i) * nb + j];
                    const T gp = (i == istar) ? gout : T(0);
                    const T gl = p * (gp - dotj);
                    const T gdt = -gl / bandwidth;
                    const T denom = dmin->v[static_cast<size_t>(i)] + eps;
                    const T d = T(1) - sv2.v[static_cast<size_t>(i) * nb + j];
                    gd[static_cast<size_t>(i) * nb + j] += gdt / denom;
                    gdmin[static_cast<size_t>(i)] += gdt * (-d / (denom * denom));
                }
            }
            for (int i = 0; i < na; ++i)
                gd[static_cast<size_t>(i) * nb + (*argmin)[static_cast<size_t>(i)]] +=
                    gdmin[static_cast<size_t>(i)];
            for (int64_t i = 0; i < static_cast<int64_t>(gd.size()); ++i)
                gs.v[static_cast<size_t>(i)] -= gd[static_cast<size_t>(i)];  // d = 1 - sim
        });
    return o;
}

template <typename T>
Var<T> tv_l1(Graph<T>& g, Var<T> x) {
    const auto& xv = g.val(x);
    if (xv.ndim() != 3) throw std::invalid_argument("tv_l1: expected CHW input");
    const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    T total = 0;
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx + 1 < w; ++xx)
                total += std::abs(xv.at(ch, y, xx + 1) - xv.at(ch, y, xx));
        for (int y = 0; y + 1 < h; ++y)
            for (int xx = 0; xx < w; ++xx)
                total += std::abs(xv.at(ch, y + 1, xx) - xv.at(ch, y, xx));
    }
    const bool req = g.requires_grad(x);
    Var<T> o = g.add_node(Tensor<T>::scalar(total), req);
    if (req)
        g.set_back(o, [x, o, c, h, w](Graph<T>& g) {
            const T go = g.grad(o).v[0];
            const auto& xv2 = g.val(x);
            auto& gx = g.grad(x);
            auto sign = [](T v) { return v > 0 ? T(1) : (v < 0 ? T(-1) : T(0)); };
            for (int ch = 0; ch < c; ++ch) {
                for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx + 1 < w; ++xx) {
                        const T s = sign(xv2.at(ch, y, xx + 1) - xv2.at(ch, y, xx)) * go;
                        gx.at(ch, y, xx + 1) += s;
                        gx.at(ch, y, xx) -= s;
                    }
                for (int y = 0; y + 1 < h; ++y)
                    for (int xx = 0; xx < w; ++xx) {
                        const T s = sign(xv2.at(ch, y + 1, xx) - xv2.at(ch, y, xx)) * go;
                        gx.at(ch, y + 1, xx) += s;
                        gx.at(ch, y, xx) -= s;
                    }
            }
        });
    return o;
}

template <typename T>
Var<T> mse(Graph<T>& g, Var<T> a, Var<T> b) {
    Var<T> d = sub(g, a, b);
    return mean_all(g, mul(g, d, d));
}

const char* primitive_name(Primitive p) {
    switch (p) {
        case Primitive::conv2d: return "conv2d";
        case Primitive::bilinear_resize: return "bilinear_resize";
        case Primitive::channel_concat: return "channel_concat";
        case Primitive::elementwise_add: return "elementwise_add";
        case Primitive::leaky_relu: return "leaky_relu";
        case Primitive::sigmoid: return "sigmoid";
        case Primitive::normalization: return "normalization";
        case Primitive::mean_reduce: return "mean_reduce";
        case Primitive::sum_reduce: return "sum_reduce";
        case Primitive::absolute: return "absolute";
        case Primitive::logarithm: return "logarithm";
        case Primitive::exponential: return "exponential";
        case Primitive::dot_product: return "dot_product";
        case Primitive::l2_norm: return "l2_norm";
    }
    return "unknown";
}

const std::vector<Primitive>& provided_primitives() {
    static const std::vector<Primitive> all = {
        Primitive::conv2d,        Primitive::bilinear_resize, Primitive::channel_concat,
        Primitive::elementwise_add, Primitive::leaky_relu,    Primitive::sigmoid,
        Primitive::normalization, Primitive::mean_reduce,     Primitive::sum_reduce,
        Primitive::absolute,      Primitive::logarithm,       Primitive::exponential,
        Primitive::dot_product,   Primitive::l2_norm,
    };
    return all;
}

void require_primitives(std::initializer_list<Primitive> required) {
    const auto& have = provided_primitives();
    for (Primitive p : required) {
        if (std::find(have.begin(), have.end(), p) == have.end())
            throw std::runtime_error(std::string("missing differentiable primitive: ") +
                                     primitive_name(p));
    }
}

#define SILT_INSTANTIATE_GRAPH(T)                                                  \
    template class Graph<T>;                                                       \
    template Var<T> add<T>(Graph<T>&, Var<T>, Var<T>);                             \
    template Var<T> sub<T>(Graph<T>&, Var<T>, Var<T>);                             \
    template Var<T> mul<T>(Graph<T>&, Var<T>, Var<T>);                             \
    template Var<T> add_scalar<T>(Graph<T>&, Var<T>, T);                           \
    template Var<T> mul_scalar<T>(Graph<T>&, Var<T>, T);                           \
    template Var<T> abs_elem<T>(Graph<T>&, Var<T>);                                \
    template Var<T> log_elem<T>(Graph<T>&, Var<T>);                                \
    template Var<T> exp_elem<T>(Graph<T>&, Var<T>);                                \
    template Var<T> leaky_relu<T>(Graph<T>&, Var<T>, T);                           \
    template Var<T> sigmoid<T>(Graph<T>&, Var<T>);                                 \
    template Var<T> detach<T>(Graph<T>&, Var<T>);                                  \
    template Var<T> conv2d<T>(Graph<T>&, Var<T>, Var<T>, Var<T>, int, int);        \
    template Var<T> resize_bilinear<T>(Graph<T>&, Var<T>, int, int);               \
    template Var<T> concat_channels<T>(Graph<T>&, const std::vector<Var<T>>&);     \
    template Var<T> instance_norm<T>(Graph<T>&, Var<T>, Var<T>, Var<T>, T);        \
    template Var<T> channel_affine<T>(Graph<T>&, Var<T>, Tensor<T>, Tensor<T>);    \
    template Var<T> sum_all<T>(Graph<T>&, Var<T>);                                 \
    template Var<T> mean_all<T>(Graph<T>&, Var<T>);                                \
    template Var<T> matmul_nt<T>(Graph<T>&, Var<T>, Var<T>);                       \
    template Var<T> l2_normalize_rows<T>(Graph<T>&, Var<T>, T);                    \
    template Var<T> chw_to_rows<T>(Graph<T>&, Var<T>);                             \
    template Var<T> gather_rows<T>(Graph<T>&, Var<T>, std::vector<int>);           \
    template Var<T> cx_score<T>(Graph<T>&, Var<T>, T, T);                          \
    template Var<T> tv_l1<T>(Graph<T>&, Var<T>);                                   \
    template Var<T> mse<T>(Graph<T>&, Var<T>, Var<T>);

SILT_INSTANTIATE_GRAPH(float)
SILT_INSTANTIATE_GRAPH(double)

#undef SILT_INSTANTIATE_GRAPH

}  // namespace silt
