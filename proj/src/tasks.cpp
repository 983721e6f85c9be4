// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/tasks.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "silt/rng.hpp"

namespace silt {

void TaskConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (lr_g <= 0 || lr_d <= 0) throw std::invalid_argument("learning rates must be positive");
    if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
    if (snapshot_every < 0) throw std::invalid_argument("snapshot_every must be >= 0");
    if (base_channels < 1 || d_base_channels < 1)
        throw std::invalid_argument("channel counts must be >= 1");
    weights.validate();
}

nlohmann::json TaskConfig::echo() const {
    return {{"iterations", iterations},
            {"lr_g", lr_g},
            {"lr_d", lr_d},
            {"lambda_c", weights.lambda_c},
            {"lambda_g", weights.lambda_g},
            {"lambda_r", weights.lambda_r},
            {"lambda_tv", weights.lambda_tv},
            {"seed", seed},
            {"features", features},
            {"log_every", log_every},
            {"snapshot_every", snapshot_every},
            {"base_channels", base_channels},
            {"d_base_channels", d_base_channels},
            {"norm", norm == NormKind::instance ? "instance" : "none"},
            {"feed_upsampled", feed_upsampled},
            {"net", net},
            {"cx_bandwidth", cx.bandwidth},
            {"cx_eps", cx.eps}};
}

NetworkSpec restoration_generator_spec() {
    return parse_network_spec("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[]");
}

NetworkSpec retarget_generator_spec() {
    return parse_network_spec("N=10; S={(2,8),(3,7),(4,6)}; C={}; R=[6]");
}

AdamOptimizer::AdamOptimizer(ParamStore& params, double lr, double beta1, double beta2, double eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& t : params.tensors) {
        m_.emplace_back(t.shape);
        v_.emplace_back(t.shape);
    }
}

void AdamOptimizer::step(const std::vector<Tensor<float>>& grads) {
    if (grads.size() != params_.size())
        throw std::invalid_argument("optimizer/gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t p = 0; p < params_.size(); ++p) {
        auto& w = params_.tensors[p];
        const auto& gt = grads[p];
        auto& m = m_[p];
        auto& v = v_[p];
        for (size_t i = 0; i < w.v.size(); ++i) {
            const double grad = gt.v[i];
            const double mi = beta1_ * m.v[i] + (1.0 - beta1_) * grad;
            const double vi = beta2_ * v.v[i] + (1.0 - beta2_) * grad * grad;
            m.v[i] = static_cast<float>(mi);
            v.v[i] = static_cast<float>(vi);
            w.v[i] -= static_cast<float>(lr_ * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
        }
    }
}

namespace {

std::vector<Tensor<float>> harvest_grads(Graph<float>& g, const BoundParams<float>& bp,
                                         int iteration, const char* net_name) {
    std::vector<Tensor<float>> grads;
    grads.reserve(bp.vars.size());
    for (size_t i = 0; i < bp.vars.size(); ++i) {
        Tensor<float> gt = g.grad_allocated(bp.vars[i]) ? g.grad(bp.vars[i])
                                                        : Tensor<float>(g.val(bp.vars[i]).shape);
        for (float v : gt.v)
            if (!std::isfinite(v))
                throw std::runtime_error(std::string("non-finite ") + net_name +
                                         " gradient in parameter '" + bp.store->names[i] +
                                         "' at iteration " + std::to_string(iteration));
        grads.push_back(std::move(gt));
    }
    return grads;
}

void check_finite_loss(double v, const char* what, int iteration) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string("non-finite ") + what + " at iteration " +
                                 std::to_string(iteration));
}

}  // namespace

std::vector<std::pair<int, LossBreakdown>> fit(BuiltNetwork& gen, MultiScaleDiscriminator* disc,
                                               const ObjectiveSpec& objective,
                                               const TaskConfig& cfg) {
    cfg.validate();
    AdamOptimizer adam_g(gen.params, cfg.lr_g);
    std::optional<AdamOptimizer> adam_d;
    if (disc && objective.train_discriminator) adam_d.emplace(disc->params, cfg.lr_d);

    std::vector<std::pair<int, LossBreakdown>> trace;
    for (int it = 1; it <= cfg.iterations; ++it) {
        Graph<float> g;
        auto gp = bind_params(g, gen.params, /*requires_grad=*/true);
        Var<float> y = objective.build_output(g, gp);

        double disc_loss_value = 0.0;
        if (disc && objective.train_discriminator) {
            auto dp = bind_params(g, disc->params, /*requires_grad=*/true);
            Var<float> y_const = detach(g, y);
            Var<float> ld = objective.build_disc_loss(g, dp, y_const);
            disc_loss_value = g.val(ld).v[0];
            check_finite_loss(disc_loss_value, "discriminator loss", it);
            g.backward(ld);
            adam_d->step(harvest_grads(g, dp, it, "discriminator"));
            g.zero_grads();
        }

        // Generator step sees the just-updated discriminator, frozen.
        BoundParams<float> dp_frozen;
        if (disc) dp_frozen = bind_params(g, disc->params, /*requires_grad=*/false);
        GenLossParts parts = objective.build_gen_loss(g, gp, dp_frozen, y);
        const double total = g.val(parts.total).v[0];
        check_finite_loss(total, "generator loss", it);
        g.backward(parts.total);
        adam_g.step(harvest_grads(g, gp, it, "generator"));

        if ((it - 1) % cfg.log_every == 0)
            trace.emplace_back(it, total_loss(parts.contextual, parts.gen_adv, disc_loss_value,
                                              parts.reconstruction, parts.tv, cfg.weights));
        if (cfg.snapshot_every > 0 && cfg.snapshot_sink && it % cfg.snapshot_every == 0)
            cfg.snapshot_sink(it, clamp01(g.val(y)));
    }
    return trace;
}

namespace {

struct RestorationSetup {
    Image input;        // generator input
    Image recon_target; // U_t of the corrupted image
    std::vector<Image> reals;  // discriminator real pyramid
    int out_h, out_w;
};

RestorationSetup restoration_setup(const Image& corrupted, int t, const TaskConfig& cfg,
                                   const MultiScaleDiscriminator& d) {
    RestorationSetup s;
    s.out_h = image_height(corrupted) * t;
    s.out_w = image_width(corrupted) * t;
    s.recon_target = upsample_ut(corrupted, t);
    s.input = cfg.feed_upsampled ? s.recon_target : corrupted;
    s.reals = real_pyramid(d, corrupted);
    return s;
}

RunResult run_restoration(const Image& corrupted, int t, TaskConfig cfg, const Image* reference,
                          bool with_tv, const char* task_name) {
    if (t < 2) throw std::invalid_argument(std::string(task_name) + " needs scale t >= 2");
    if (image_height(corrupted) < 16 || image_width(corrupted) < 16)
        throw std::invalid_argument(std::string(task_name) + " input must be at least 16x16");
    cfg.validate();
    if (!with_tv) cfg.weights.lambda_tv = 0.0;

    const auto start = std::chrono::steady_clock::now();

    GeneratorConfig gcfg;
    gcfg.spec = cfg.net.empty() ? restoration_generator_spec() : parse_network_spec(cfg.net);
    gcfg.base_channels = cfg.base_channels;
    gcfg.seed = cfg.seed;
    gcfg.norm = cfg.norm;
    BuiltNetwork gen = build_generator(gcfg);
    MultiScaleDiscriminator disc = build_discriminator({1, 1, 1, 1}, derive_seed(cfg.seed, 1),
                                                       cfg.d_base_channels, cfg.norm);

    const Image source = ensure_rgb(corrupted);
    RestorationSetup setup = restoration_setup(source, t, cfg, disc);
    const FeatureExtractor fx = make_extractor_from_selector(cfg.features);
    // Contextual target: vectors of the corrupted source image, fixed per run.
    const ContextVectors source_vecs =
        extract_context_vectors(fx, source, kDefaultContextLayer);
    Tensor<float> source_vec_tensor({source_vecs.count, source_vecs.dim});
    source_vec_tensor.v = source_vecs.v;
    const uint64_t cx_subseed = derive_seed(cfg.seed, 2);
    const bool use_adv = cfg.weights.lambda_g > 0;

    ObjectiveSpec obj;
    obj.train_discriminator = use_adv;
    obj.build_output = [&](Graph<float>& g, const BoundParams<float>& gp) {
        return generator_apply(g, gen, gp, g.constant(setup.input), setup.out_h, setup.out_w);
    };
    obj.build_disc_loss = [&](Graph<float>& g, const BoundParams<float>& dp, Var<float> y_const) {
        std::vector<Var<float>> real_vars;
        for (const auto& lvl : setup.reals) real_vars.push_back(g.constant(lvl));
        auto real_maps = discriminator_apply_pyramid(g, disc, dp, real_vars);
        auto fake_maps = discriminator_apply(g, disc, dp, y_const);
        return lsgan_discriminator_node(g, disc, real_maps, fake_maps);
    };
    obj.build_gen_loss = [&](Graph<float>& g, const BoundParams<float>&,
                             const BoundParams<float>& dp, Var<float> y) {
        GenLossParts parts;
        Var<float> total = g.constant(Tensor<float>::scalar(0.0f));
        if (cfg.weights.lambda_c > 0) {
            Var<float> yv = extract_vectors_node(g, fx, y, kDefaultContextLayer, 4096, cx_subseed);
            Var<float> sv = g.constant(source_vec_tensor);
            Var<float> cl = contextual_loss_node(g, cx_similarity_node(g, yv, sv, cfg.cx));
            parts.contextual = g.val(cl).v[0];
            total = add(g, total, mul_scalar(g, cl, static_cast<float>(cfg.weights.lambda_c)));
        }
        if (use_adv) {
            auto fake_maps = discriminator_apply(g, disc, dp, y);
            Var<float> lg = lsgan_generator_node(g, disc, fake_maps);
            parts.gen_adv = g.val(lg).v[0];
            total = add(g, total, mul_scalar(g, lg, static_cast<float>(cfg.weights.lambda_g)));
        }
        if (cfg.weights.lambda_r > 0) {
            Var<float> rec = mse(g, y, g.constant(setup.recon_target));
            parts.reconstruction = g.val(rec).v[0];
            total = add(g, total, mul_scalar(g, rec, static_cast<float>(cfg.weights.lambda_r)));
        }
        if (cfg.weights.lambda_tv > 0) {
            Var<float> tv = tv_norm_node(g, y);
            parts.tv = g.val(tv).v[0];
            total = add(g, total, mul_scalar(g, tv, static_cast<float>(cfg.weights.lambda_tv)));
        }
        parts.total = total;
        return parts;
    };

    RunResult result;
    result.trace = fit(gen, use_adv ? &disc : nullptr, obj, cfg);
    result.output = clamp01(generator_forward_size(gen, setup.input, setup.out_h, setup.out_w));
    if (reference) {
        result.psnr_db = psnr(result.output, ensure_rgb(*reference));
        result.ssim_value = ssim(result.output, ensure_rgb(*reference));
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.config_echo = cfg.echo();
    result.config_echo["task"] = task_name;
    result.config_echo["t"] = t;
    return result;
}

}  // namespace

RunResult run_dsr(const Image& noisy_lr, int t, const TaskConfig& cfg, const Image* reference) {
    return run_restoration(noisy_lr, t, cfg, reference, /*with_tv=*/true, "dsr");
}

RunResult run_sr(const Image& lr, int t, const TaskConfig& cfg, const Image* reference) {
    return run_restoration(lr, t, cfg, reference, /*with_tv=*/false, "sr");
}

RunResult run_retarget(const Image& x, double s_h, double s_w, const TaskConfig& cfg) {
    if (s_h < 0.25 || s_h > 4.0 || s_w < 0.25 || s_w > 4.0)
        throw std::invalid_argument("retarget scales must lie in [0.25, 4]");
    if (image_height(x) < 64 || image_width(x) < 64)
        throw std::invalid_argument("retarget input must be at least 64x64");
    cfg.validate();

    const auto start = std::chrono::steady_clock::now();
    const Image source = ensure_rgb(x);
    const int out_h = scaled_size(image_height(source), s_h);
    const int out_w = scaled_size(image_width(source), s_w);

    GeneratorConfig gcfg;
    gcfg.spec = cfg.net.empty() ? retarget_generator_spec() : parse_network_spec(cfg.net);
    gcfg.base_channels = cfg.base_channels;
    gcfg.seed = cfg.seed;
    gcfg.norm = cfg.norm;
    BuiltNetwork gen = build_generator(gcfg);
    MultiScaleDiscriminator disc = build_discriminator({1, 1, 1, 1}, derive_seed(cfg.seed, 1),
                                                       cfg.d_base_channels, cfg.norm);

    const std::vector<Image> reals = real_pyramid(disc, source);
    const FeatureExtractor fx = make_extractor_from_selector(cfg.features);
    const ContextVectors source_vecs =
        extract_context_vectors(fx, source, kDefaultContextLayer);
    Tensor<float> source_vec_tensor({source_vecs.count, source_vecs.dim});
    source_vec_tensor.v = source_vecs.v;
    const uint64_t cx_subseed = derive_seed(cfg.seed, 2);
    const bool use_adv = cfg.weights.lambda_g > 0;

    ObjectiveSpec obj;
    obj.train_discriminator = use_adv;
    obj.build_output = [&](Graph<float>& g, const BoundParams<float>& gp) {
        return generator_apply(g, gen, gp, g.constant(source), out_h, out_w);
    };
    obj.build_disc_loss = [&](Graph<float>& g, const BoundParams<float>& dp, Var<float> y_const) {
        std::vector<Var<float>> real_vars;
        for (const auto& lvl : reals) real_vars.push_back(g.constant(lvl));
        auto real_maps = discriminator_apply_pyramid(g, disc, dp, real_vars);
        auto fake_maps = discriminator_apply(g, disc, dp, y_const);
        return lsgan_discriminator_node(g, disc, real_maps, fake_maps);
    };
    obj.build_gen_loss = [&](Graph<float>& g, const BoundParams<float>& gp,
                             const BoundParams<float>& dp, Var<float> y) {
        GenLossParts parts;
        Var<float> total = g.constant(Tensor<float>::scalar(0.0f));
        if (cfg.weights.lambda_c > 0) {
            Var<float> yv = extract_vectors_node(g, fx, y, kDefaultContextLayer, 4096, cx_subseed);
            Var<float> sv = g.constant(source_vec_tensor);
            Var<float> cl = contextual_loss_node(g, cx_similarity_node(g, yv, sv, cfg.cx));
            parts.contextual = g.val(cl).v[0];
            total = add(g, total, mul_scalar(g, cl, static_cast<float>(cfg.weights.lambda_c)));
        }
        if (use_adv) {
            auto fake_maps = discriminator_apply(g, disc, dp, y);
            Var<float> lg = lsgan_generator_node(g, disc, fake_maps);
            parts.gen_adv = g.val(lg).v[0];
            total = add(g, total, mul_scalar(g, lg, static_cast<float>(cfg.weights.lambda_g)));
        }
        if (cfg.weights.lambda_r > 0) {
            // Cycle: map the output back to the exact source size.
            Var<float> back =
                generator_apply(g, gen, gp, y, image_height(source), image_width(source));
            Var<float> rec = mse(g, back, g.constant(source));
            parts.reconstruction = g.val(rec).v[0];
            total = add(g, total, mul_scalar(g, rec, static_cast<float>(cfg.weights.lambda_r)));
        }
        parts.total = total;
        return parts;
    };

    RunResult result;
    result.trace = fit(gen, use_adv ? &disc : nullptr, obj, cfg);
    result.output = clamp01(generator_forward_size(gen, source, out_h, out_w));
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.config_echo = cfg.echo();
    result.config_echo["task"] = "retarget";
    result.config_echo["s_h"] = s_h;
    result.config_echo["s_w"] = s_w;
    return result;
}

}  // namespace silt
