// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "silt/tasks.hpp"
#include "test_support.hpp"

using namespace silt;
using namespace silt::testing;

namespace {

// Small everything: these tests exercise contracts, not quality.
TaskConfig tiny_config(int iters, uint64_t seed = 0) {
    TaskConfig cfg;
    cfg.iterations = iters;
    cfg.base_channels = 8;
    cfg.d_base_channels = 8;
    cfg.net = "N=6; S={(2,4)}; C={}; R=[]";
    cfg.seed = seed;
    cfg.log_every = 1;
    cfg.lr_g = 1e-3;
    cfg.lr_d = 1e-3;
    return cfg;
}

ObjectiveSpec pure_reconstruction(const BuiltNetwork& net, const Image& target) {
    ObjectiveSpec obj;
    obj.train_discriminator = false;
    obj.build_output = [&net, &target](Graph<float>& g, const BoundParams<float>& gp) {
        return generator_apply(g, net, gp, g.constant(target), image_height(target),
                               image_width(target));
    };
    obj.build_gen_loss = [&target](Graph<float>& g, const BoundParams<float>&,
                                   const BoundParams<float>&, Var<float> y) {
        GenLossParts parts;
        Var<float> rec = mse(g, y, g.constant(target));
        parts.reconstruction = g.val(rec).v[0];
        parts.total = rec;
        return parts;
    };
    return obj;
}

}  // namespace

TEST_CASE("fit: trace length is ceil(iterations / log_every)") {
    GeneratorConfig gc;
    gc.spec = parse_network_spec("N=4; S={}; C={}; R=[]");
    gc.base_channels = 4;
    BuiltNetwork net = build_generator(gc);
    const Image target = smooth_image(16, 16, 1);

    TaskConfig cfg = tiny_config(10);
    cfg.weights = LossWeights{0, 0, 1, 0};
    cfg.log_every = 3;
    const auto trace = fit(net, nullptr, pure_reconstruction(net, target), cfg);
    REQUIRE(trace.size() == 4);  // ceil(10 / 3)
    CHECK(trace[0].first == 1);
    CHECK(trace[1].first == 4);
    CHECK(trace[3].first == 10);
}

TEST_CASE("fit: inactive discriminator keeps its parameters bitwise") {
    GeneratorConfig gc;
    gc.spec = parse_network_spec("N=4; S={}; C={}; R=[]");
    gc.base_channels = 4;
    BuiltNetwork net = build_generator(gc);
    MultiScaleDiscriminator disc = build_discriminator({1, 1, 1, 1}, 5, 8);
    const auto before = disc.params.tensors;

    const Image target = smooth_image(16, 16, 2);
    TaskConfig cfg = tiny_config(5);
    cfg.weights = LossWeights{0, 0, 1, 0};
    ObjectiveSpec obj = pure_reconstruction(net, target);
    obj.train_discriminator = false;
    fit(net, &disc, obj, cfg);
    for (size_t i = 0; i < before.size(); ++i)
        CHECK(std::memcmp(before[i].data(), disc.params.tensors[i].data(),
                          before[i].v.size() * sizeof(float)) == 0);
}

TEST_CASE("fit: snapshots arrive on the configured stride") {
    GeneratorConfig gc;
    gc.spec = parse_network_spec("N=4; S={}; C={}; R=[]");
    gc.base_channels = 4;
    BuiltNetwork net = build_generator(gc);
    const Image target = smooth_image(16, 16, 3);
    TaskConfig cfg = tiny_config(5);
    cfg.weights = LossWeights{0, 0, 1, 0};
    std::vector<int> seen;
    cfg.snapshot_every = 2;
    cfg.snapshot_sink = [&](int it, const Image& im) {
        seen.push_back(it);
        CHECK(im.dim(1) == 16);
    };
    fit(net, nullptr, pure_reconstruction(net, target), cfg);
    CHECK(seen == std::vector<int>{2, 4});
}

TEST_CASE("run_sr: output shape contract for t in {2, 4}") {
    for (int t : {2, 4}) {
        TaskConfig cfg = tiny_config(2);
        cfg.weights = LossWeights{0, 0, 1, 0};
        const Image lr = smooth_image(16, 16, 4);
        const RunResult r = run_sr(lr, t, cfg);
        CHECK(r.output.dim(1) == 16 * t);
        CHECK(r.output.dim(2) == 16 * t);
        CHECK(r.trace.size() == 2);
    }
}

TEST_CASE("run_dsr with lambda_tv = 0 degenerates to run_sr") {
    const Image lr = striped_image(16, 16, 5);
    TaskConfig cfg = tiny_config(4, 9);
    cfg.weights = LossWeights{1, 0.1, 10, 0};  // tv weight zero
    const RunResult dsr = run_dsr(lr, 2, cfg);
    const RunResult sr = run_sr(lr, 2, cfg);
    REQUIRE(dsr.trace.size() == sr.trace.size());
    for (size_t i = 0; i < dsr.trace.size(); ++i) {
        CHECK(dsr.trace[i].second.total == sr.trace[i].second.total);
        CHECK(dsr.trace[i].second.contextual == sr.trace[i].second.contextual);
        CHECK(dsr.trace[i].second.gen_adv == sr.trace[i].second.gen_adv);
        CHECK(dsr.trace[i].second.reconstruction == sr.trace[i].second.reconstruction);
        CHECK(dsr.trace[i].second.tv == sr.trace[i].second.tv);
    }
    CHECK(std::memcmp(dsr.output.data(), sr.output.data(),
                      dsr.output.v.size() * sizeof(float)) == 0);
}

TEST_CASE("run_dsr: determinism under a fixed seed") {
    const Image lr = striped_image(16, 16, 6);
    TaskConfig cfg = tiny_config(4, 21);
    cfg.weights = LossWeights{1, 0.1, 10, 1e-4};
    const RunResult a = run_dsr(lr, 2, cfg);
    const RunResult b = run_dsr(lr, 2, cfg);
    CHECK(std::memcmp(a.output.data(), b.output.data(), a.output.v.size() * sizeof(float)) == 0);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i)
        CHECK(a.trace[i].second.total == b.trace[i].second.total);
}

TEST_CASE("run_dsr: metrics fill in when a reference is supplied") {
    const Image clean = striped_image(32, 32, 7);
    const Image lr = downsample(clean, 2);
    TaskConfig cfg = tiny_config(2);
    cfg.weights = LossWeights{0, 0, 1, 0};
    const RunResult r = run_dsr(lr, 2, cfg, &clean);
    REQUIRE(r.psnr_db.has_value());
    REQUIRE(r.ssim_value.has_value());
    CHECK(std::isfinite(*r.psnr_db));
    CHECK(r.config_echo.contains("lambda_r"));
    CHECK(r.wall_seconds > 0.0);
}

TEST_CASE("task preconditions") {
    TaskConfig cfg = tiny_config(1);
    const Image small = smooth_image(8, 8, 1);
    CHECK_THROWS_AS(run_dsr(small, 2, cfg), std::invalid_argument);
    const Image ok = smooth_image(16, 16, 1);
    CHECK_THROWS_AS(run_dsr(ok, 1, cfg), std::invalid_argument);
    CHECK_THROWS_AS(run_retarget(smooth_image(32, 32, 1), 1.0, 1.0, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_retarget(smooth_image(64, 64, 1), 5.0, 1.0, cfg),
                    std::invalid_argument);
    TaskConfig bad = cfg;
    bad.iterations = 0;
    CHECK_THROWS_AS(run_sr(ok, 2, bad), std::invalid_argument);
}

TEST_CASE("run_retarget: exact output sizes and logged cycle loss") {
    TaskConfig cfg = tiny_config(3, 2);
    cfg.weights = LossWeights{0.0, 0.0, 1.0, 0.0};  // cycle-reconstruction only
    const Image x = smooth_image(64, 64, 8);
    const RunResult r = run_retarget(x, 1.0, 1.25, cfg);
    CHECK(r.output.dim(1) == 64);
    CHECK(r.output.dim(2) == 80);
    REQUIRE(r.trace.size() == 3);
    for (const auto& [it, b] : r.trace) CHECK(b.reconstruction >= 0.0);
}

TEST_CASE("pure reconstruction trace is non-increasing over 50-iteration windows") {
    const Image lr = shapes_image(16, 16, 9);
    TaskConfig cfg = tiny_config(200, 4);
    cfg.weights = LossWeights{0, 0, 1, 0};
    const RunResult r = run_sr(lr, 2, cfg);
    REQUIRE(r.trace.size() == 200);
    double prev = 1e30;
    for (int w = 0; w < 4; ++w) {
        double mean = 0;
        for (int i = 0; i < 50; ++i) mean += r.trace[static_cast<size_t>(w * 50 + i)].second.total;
        mean /= 50.0;
        CHECK(mean <= prev);
        prev = mean;
    }
}

TEST_CASE("dsr: the tv term reduces the output tv norm") {
    const Image clean = striped_image(32, 32, 10);
    DegradationConfig noise;
    noise.sigma_255 = 60;
    noise.seed = 3;
    const Image lr = add_gaussian_noise(downsample(clean, 2), noise);

    TaskConfig smooth_cfg = tiny_config(120, 5);
    smooth_cfg.weights = LossWeights{0, 0, 10, 0.02};
    TaskConfig rough_cfg = smooth_cfg;
    rough_cfg.weights.lambda_tv = 0;

    const RunResult with_tv = run_dsr(lr, 2, smooth_cfg);
    const RunResult without_tv = run_dsr(lr, 2, rough_cfg);
    CHECK(tv_norm(with_tv.output) <= tv_norm(without_tv.output));
}
