// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "silt/features.hpp"
#include "silt/graph.hpp"
#include "silt/image.hpp"
#include "silt/network.hpp"

namespace silt {

struct ContextualParams {
    double bandwidth = 0.5;  // affinity bandwidth
    double eps = 1e-5;       // distance-normalization guard
};

inline constexpr double kContextualLogEps = 1e-8;

struct LossWeights {
    double lambda_c = 1.0;
    double lambda_g = 1.0;
    double lambda_r = 10.0;
    double lambda_tv = 0.0;
    void validate() const;  // all >= 0, at least one > 0
};

struct LossBreakdown {
    double contextual = 0.0;
    double gen_adv = 0.0;
    double disc_adv = 0.0;  // reported, never part of the generator total
    double reconstruction = 0.0;
    double tv = 0.0;
    double total = 0.0;
};

/// Set-to-set contextual similarity in [0,1] between flattened vector sets.
double contextual_similarity(const ContextVectors& a, const ContextVectors& b,
                             const ContextualParams& params = {});

/// -log(CX + eps) shifted by log(1 + eps) so the perfect-match value is
/// exactly 0 and the loss is nonnegative on [0,1].
double contextual_loss(const Image& x, const Image& y, const FeatureExtractor& fx,
                       const std::string& layer, const ContextualParams& params = {});

/// Least-squares objectives over the multi-scale patch maps:
///   L_D = sum_i w_i [ mean((D_i(real)-1)^2) + mean(D_i(fake)^2) ]
///   L_G = sum_i w_i   mean((D_i(fake)-1)^2)
/// Fake is constant inside L_D; real is constant inside L_G. The real-side
/// pyramid is bicubic (degradation pipeline), the fake side bilinear
/// (differentiable path).
std::pair<double, double> adversarial_losses(const MultiScaleDiscriminator& d, const Image& real,
                                             const Image& fake);

/// Plain MSE between equal-shaped tensors.
double reconstruction_restoration(const Image& out, const Image& target);

/// Runs the generator out with (s_h, s_w), maps the output back to the exact
/// source size, and returns the MSE against the source.
double reconstruction_cycle(const BuiltNetwork& net, const Image& x, double s_h, double s_w);

/// Anisotropic L1 total variation; needs H, W >= 2.
double tv_norm(const Image& im);

/// Combines already-computed scalars; throws on non-finite components.
LossBreakdown total_loss(double contextual, double gen_adv, double disc_adv,
                         double reconstruction, double tv, const LossWeights& w);

// ---- tape builders (shared by the value-level entry points and the tasks) --

template <typename T>
Var<T> cx_similarity_node(Graph<T>& g, Var<T> vecs_a, Var<T> vecs_b,
                          const ContextualParams& params);

template <typename T>
Var<T> contextual_loss_node(Graph<T>& g, Var<T> cx);

/// Pyramid of detached real patch maps for the discriminator step.
std::vector<Image> real_pyramid(const MultiScaleDiscriminator& d, const Image& real);

template <typename T>
Var<T> lsgan_generator_node(Graph<T>& g, const MultiScaleDiscriminator& d,
                            const std::vector<Var<T>>& fake_maps);

template <typename T>
Var<T> lsgan_discriminator_node(Graph<T>& g, const MultiScaleDiscriminator& d,
                                const std::vector<Var<T>>& real_maps,
                                const std::vector<Var<T>>& fake_maps);

template <typename T>
Var<T> tv_norm_node(Graph<T>& g, Var<T> image);

}  // namespace silt
