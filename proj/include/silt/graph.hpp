// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

#include "silt/kernels.hpp"
#include "silt/tensor.hpp"

namespace silt {

template <typename T>
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Define-by-run reverse-mode tape. Nodes are appended in topological order;
/// backward() walks them in reverse. One tape per forward/backward pass.
template <typename T>
class Graph {
public:
    Var<T> leaf(Tensor<T> v, bool requires_grad = true);
    Var<T> constant(Tensor<T> v);

    const Tensor<T>& val(Var<T> x) const { return nodes_[static_cast<size_t>(x.id)].val; }
    Tensor<T>& mutable_val(Var<T> x) { return nodes_[static_cast<size_t>(x.id)].val; }

    /// Gradient buffer, allocated (zeroed) on first access.
    Tensor<T>& grad(Var<T> x);
    bool grad_allocated(Var<T> x) const {
        return nodes_[static_cast<size_t>(x.id)].grad_alloc;
    }
    bool requires_grad(Var<T> x) const {
        return nodes_[static_cast<size_t>(x.id)].requires_grad;
    }

    void backward(Var<T> scalar_out);
    void zero_grads();
    size_t node_count() const { return nodes_.size(); }

    Var<T> add_node(Tensor<T> val, bool requires_grad);
    void set_back(Var<T> x, std::function<void(Graph&)> back) {
        nodes_[static_cast<size_t>(x.id)].back = std::move(back);
    }

private:
    struct Node {
        Tensor<T> val;
        Tensor<T> grad_buf;
        bool requires_grad = false;
        bool grad_alloc = false;
        std::function<void(Graph&)> back;
    };
    std::vector<Node> nodes_;
};

// ---- elementwise / scalar ----
template <typename T> Var<T> add(Graph<T>& g, Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Graph<T>& g, Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Graph<T>& g, Var<T> a, Var<T> b);
template <typename T> Var<T> add_scalar(Graph<T>& g, Var<T> a, T s);
template <typename T> Var<T> mul_scalar(Graph<T>& g, Var<T> a, T s);
template <typename T> Var<T> abs_elem(Graph<T>& g, Var<T> a);
template <typename T> Var<T> log_elem(Graph<T>& g, Var<T> a);
template <typename T> Var<T> exp_elem(Graph<T>& g, Var<T> a);
template <typename T> Var<T> leaky_relu(Graph<T>& g, Var<T> a, T slope);
template <typename T> Var<T> sigmoid(Graph<T>& g, Var<T> a);
template <typename T> Var<T> detach(Graph<T>& g, Var<T> a);

// ---- structured ----
template <typename T>
Var<T> conv2d(Graph<T>& g, Var<T> x, Var<T> w, Var<T> b, int stride, int pad);
template <typename T>
Var<T> resize_bilinear(Graph<T>& g, Var<T> x, int out_h, int out_w);
template <typename T>
Var<T> concat_channels(Graph<T>& g, const std::vector<Var<T>>& xs);
template <typename T>
Var<T> instance_norm(Graph<T>& g, Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5));
// Fixed per-channel affine (not learnable): y[c] = x[c] * scale[c] + shift[c].
template <typename T>
Var<T> channel_affine(Graph<T>& g, Var<T> x, Tensor<T> scale, Tensor<T> shift);

// ---- reductions ----
template <typename T> Var<T> sum_all(Graph<T>& g, Var<T> a);
template <typename T> Var<T> mean_all(Graph<T>& g, Var<T> a);

// ---- vector-set ops (contextual similarity) ----
// y[n,m] = sum_k a[n,k] b[m,k]
template <typename T> Var<T> matmul_nt(Graph<T>& g, Var<T> a, Var<T> b);
template <typename T> Var<T> l2_normalize_rows(Graph<T>& g, Var<T> a, T eps = T(1e-12));
// (C,H,W) activation map -> (H*W, C) row-per-site vector set.
template <typename T> Var<T> chw_to_rows(Graph<T>& g, Var<T> x);
template <typename T> Var<T> gather_rows(Graph<T>& g, Var<T> a, std::vector<int> rows);
// Contextual similarity score in [0,1] from a cosine-similarity matrix
// sim[i,j] between candidate vectors i and target vectors j:
//   d = 1 - sim;  dt[i,j] = d[i,j] / (min_k d[i,k] + eps);
//   score[.,j] = softmax_i((1 - dt[i,j]) / bandwidth);  cx = mean_j max_i score.
template <typename T> Var<T> cx_score(Graph<T>& g, Var<T> sim, T bandwidth, T eps);

// Anisotropic L1 total variation of a CHW tensor.
template <typename T> Var<T> tv_l1(Graph<T>& g, Var<T> x);

// Mean squared error (composition helper).
template <typename T> Var<T> mse(Graph<T>& g, Var<T> a, Var<T> b);

// ---- primitive contract ----
enum class Primitive {
    conv2d,
    bilinear_resize,
    channel_concat,
    elementwise_add,
    leaky_relu,
    sigmoid,
    normalization,
    mean_reduce,
    sum_reduce,
    absolute,
    logarithm,
    exponential,
    dot_product,
    l2_norm,
};
const char* primitive_name(Primitive p);
/// Every differentiable operation the networks and losses are built from.
const std::vector<Primitive>& provided_primitives();
/// Throws when a required primitive is not provided; called by the builders.
void require_primitives(std::initializer_list<Primitive> required);

}  // namespace silt
