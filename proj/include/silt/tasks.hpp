// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "silt/features.hpp"
#include "silt/image.hpp"
#include "silt/losses.hpp"
#include "silt/network.hpp"

#include "json.hpp"

namespace silt {

struct TaskConfig {
    int iterations = 3000;
    double lr_g = 1e-4;
    double lr_d = 1e-4;
    LossWeights weights;  // task runners fill task defaults when unset
    uint64_t seed = 0;
    std::string features = "random:0";
    int log_every = 10;
    int snapshot_every = 0;  // 0 disables snapshots
    int base_channels = 64;
    int d_base_channels = 64;
    NormKind norm = NormKind::instance;
    // DSR/SR input mode: feed U_t of the corrupted image at unit scale
    // instead of the corrupted image at scale (t, t).
    bool feed_upsampled = false;
    std::string net;  // optional spec-string override of the task preset
    ContextualParams cx;
    std::function<void(int, const Image&)> snapshot_sink;

    void validate() const;
    nlohmann::json echo() const;
};

struct RunResult {
    Image output;
    std::vector<std::pair<int, LossBreakdown>> trace;  // (iteration, breakdown)
    std::optional<double> psnr_db;
    std::optional<double> ssim_value;
    double wall_seconds = 0.0;
    nlohmann::json config_echo;
};

/// Generator/discriminator objective closures for the shared loop. The
/// discriminator step always runs first on the current output.
struct GenLossParts {
    Var<float> total;
    double contextual = 0.0, gen_adv = 0.0, reconstruction = 0.0, tv = 0.0;
};

struct ObjectiveSpec {
    // Forward pass through the generator being fitted.
    std::function<Var<float>(Graph<float>&, const BoundParams<float>&)> build_output;
    // Discriminator loss against the detached current output.
    std::function<Var<float>(Graph<float>&, const BoundParams<float>&, Var<float>)>
        build_disc_loss;
    // Full generator objective; discriminator parameters are bound frozen.
    std::function<GenLossParts(Graph<float>&, const BoundParams<float>&, const BoundParams<float>&,
                               Var<float>)>
        build_gen_loss;
    bool train_discriminator = true;
};

/// Alternating Adam loop (one discriminator step, then one generator step per
/// iteration). Returns the loss trace, one entry per log_every iterations.
std::vector<std::pair<int, LossBreakdown>> fit(BuiltNetwork& gen, MultiScaleDiscriminator* disc,
                                               const ObjectiveSpec& objective,
                                               const TaskConfig& cfg);

/// Denoising-super-resolution: fit to a noisy low-resolution image, output
/// exactly (t*h, t*w).
RunResult run_dsr(const Image& noisy_lr, int t, const TaskConfig& cfg,
                  const Image* reference = nullptr);

/// Super-resolution: DSR objective without the TV term.
RunResult run_sr(const Image& lr, int t, const TaskConfig& cfg, const Image* reference = nullptr);

/// Content-aware retargeting to (round(s_h*h), round(s_w*w)).
RunResult run_retarget(const Image& x, double s_h, double s_w, const TaskConfig& cfg);

/// Spec presets used by the tasks (restoration: plain skip network;
/// retargeting: the same with six residual blocks).
NetworkSpec restoration_generator_spec();
NetworkSpec retarget_generator_spec();

/// Adam state over one parameter store.
class AdamOptimizer {
public:
    AdamOptimizer(ParamStore& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(const std::vector<Tensor<float>>& grads);

private:
    ParamStore& params_;
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<Tensor<float>> m_, v_;
};

}  // namespace silt
