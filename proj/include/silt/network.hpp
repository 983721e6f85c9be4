// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "silt/graph.hpp"
#include "silt/net_spec.hpp"
#include "silt/tensor.hpp"

namespace silt {

struct InvalidSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NormKind { none, instance };

struct ParamStore {
    std::vector<std::string> names;
    std::vector<Tensor<float>> tensors;
    std::unordered_map<std::string, size_t> index;

    size_t add(const std::string& name, Tensor<float> t);
    const Tensor<float>& at(const std::string& name) const;
    Tensor<float>& at(const std::string& name);
    size_t size() const { return tensors.size(); }
    int64_t total_params() const;
};

template <typename T>
struct BoundParams {
    std::vector<Var<T>> vars;
    const ParamStore* store = nullptr;
    Var<T> at(const std::string& name) const;
};

/// Copies every parameter onto the tape as a leaf (cast to T).
template <typename T>
BoundParams<T> bind_params(Graph<T>& g, const ParamStore& params, bool requires_grad);

struct GeneratorConfig {
    NetworkSpec spec;
    int base_channels = 64;
    std::vector<int> channel_schedule;  // per encoder stage; derived from base when empty
    uint64_t seed = 0;
    int in_channels = 3;
    int out_channels = 3;
    NormKind norm = NormKind::instance;
};

std::vector<int> default_channel_schedule(int stages, int base_channels);

enum class EdgeKind { sequential, skip_concat, residual_add, cascade_concat };

struct GraphEdge {
    std::string from, to;
    EdgeKind kind;
};

struct LayerInfo {
    std::string name;
    std::string kind;  // "input" | "encoder" | "decoder" | "residual"
    int out_channels = 0;
    int64_t param_count = 0;
};

/// Materialized encoder-decoder generator: immutable topology plus the
/// parameter store a fit run owns exclusively.
struct BuiltNetwork {
    GeneratorConfig config;
    int stages = 0;  // depth / 2
    std::vector<int> enc_channels, dec_channels;
    ParamStore params;
    std::vector<LayerInfo> layers;
    std::vector<GraphEdge> edges;

    int concat_edge_count() const;
    int residual_add_count() const;
};

/// Validates, checks even depth, materializes parameters from (spec, seed).
BuiltNetwork build_generator(const GeneratorConfig& config);

/// Runs the generator on the tape; output is exactly (out_h, out_w) with
/// values in [0,1] (sigmoid output node).
template <typename T>
Var<T> generator_apply(Graph<T>& g, const BuiltNetwork& net, const BoundParams<T>& bp, Var<T> x,
                       int out_h, int out_w);

/// Convenience value-level forward; scales applied to the input size with
/// round-half-up and a hard error on a degenerate target.
Tensor<float> generator_forward(const BuiltNetwork& net, const Tensor<float>& x_chw, double s_h,
                                double s_w);

/// Same, with the target size given exactly.
Tensor<float> generator_forward_size(const BuiltNetwork& net, const Tensor<float>& x_chw,
                                     int out_h, int out_w);

int scaled_size(int n, double s);  // round-half-up, error when < 1

struct MultiScaleDiscriminator {
    std::array<double, 4> scale_weights{};       // normalized, sum 1
    std::array<double, 4> scale_factors{};       // image pyramid: 1, 1/2, 1/4, 1/8
    int layers_per_sub = 4;
    std::vector<int> channels;                   // per conv layer
    NormKind norm = NormKind::instance;
    int min_input = 16;                          // per spatial dim
    uint64_t seed = 0;
    ParamStore params;
};

MultiScaleDiscriminator build_discriminator(const std::array<double, 4>& scale_weights,
                                            uint64_t seed, int base_channels = 64,
                                            NormKind norm = NormKind::instance);

/// Patch-score map of one sub-discriminator on an already-resized input.
template <typename T>
Var<T> sub_discriminator_apply(Graph<T>& g, const MultiScaleDiscriminator& d,
                               const BoundParams<T>& bp, int sub, Var<T> z);

/// All four maps; the pyramid is built internally with bilinear resizes
/// (differentiable path for generated images).
template <typename T>
std::vector<Var<T>> discriminator_apply(Graph<T>& g, const MultiScaleDiscriminator& d,
                                        const BoundParams<T>& bp, Var<T> z);

/// All four maps over a caller-provided pyramid (one image per scale).
template <typename T>
std::vector<Var<T>> discriminator_apply_pyramid(Graph<T>& g, const MultiScaleDiscriminator& d,
                                                const BoundParams<T>& bp,
                                                const std::vector<Var<T>>& pyramid);

struct DiscriminatorOutput {
    std::vector<Tensor<float>> maps;  // one per scale
    double aggregate = 0.0;           // sum_i w_i * mean(map_i)
};

/// Value-level forward with the minimum-size check.
DiscriminatorOutput discriminator_forward(const MultiScaleDiscriminator& d,
                                          const Tensor<float>& z_chw);

/// Conv-layer sizes of one sub-discriminator on an h x w input (for
/// inspection and tests).
std::vector<std::pair<int, int>> sub_discriminator_map_sizes(const MultiScaleDiscriminator& d,
                                                             int h, int w);

/// Network summary for the net-print command.
std::string describe_network(const BuiltNetwork& net);

}  // namespace silt
