// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "silt/graph.hpp"
#include "silt/image.hpp"
#include "silt/network.hpp"

namespace silt {

struct FeatureLayer {
    std::string name;
    int reduction = 1;  // spatial reduction factor r; an HxW image yields
                        // ceil(H/r)*ceil(W/r) vectors at this layer
    int channels = 0;
};

/// Convolutional pyramid that turns images into context-vector sets. Weights
/// come either from a saved archive or from a seeded random draw; both share
/// the same architecture and code path. Immutable after construction.
struct FeatureExtractor {
    std::vector<FeatureLayer> layers;
    ParamStore params;
    std::array<float, 3> norm_mean{};  // input normalization, applied before conv1
    std::array<float, 3> norm_std{};
    std::string source;  // "random:<seed>" or "pretrained:<path>"

    const FeatureLayer* find_layer(const std::string& name) const;
};

inline constexpr const char* kDefaultContextLayer = "conv2";  // reduction 4

/// 3-stage pyramid (reductions 2/4/8, channels 32/64/128) with fixed random
/// weights from the seed.
FeatureExtractor make_random_extractor(uint64_t seed);

/// Layer-keyed tensor archive: text manifest (layers, normalization, tensor
/// name/shape/dtype/offset) followed by little-endian float32 data.
FeatureExtractor load_pretrained_extractor(const std::string& path);
void save_extractor(const FeatureExtractor& fx, const std::string& path);

/// Unordered set of per-site feature vectors from one layer.
struct ContextVectors {
    int count = 0;
    int dim = 0;
    std::vector<float> v;  // row-major, count x dim
    std::string layer;
};

ContextVectors extract_context_vectors(const FeatureExtractor& fx, const Image& image,
                                       const std::string& layer);

/// Tape version: returns an (N, C) row-per-site matrix. Sets larger than
/// `subsample_limit` are reduced to a seeded uniform subsample so the
/// pairwise similarity stays tractable.
template <typename T>
Var<T> extract_vectors_node(Graph<T>& g, const FeatureExtractor& fx, Var<T> image,
                            const std::string& layer, int subsample_limit = 4096,
                            uint64_t subsample_seed = 0);

/// Parses "random:<seed>" / "pretrained:<path>" selector strings.
FeatureExtractor make_extractor_from_selector(const std::string& selector);

}  // namespace silt
