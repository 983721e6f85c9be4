// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/gradcheck_battery.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>

#include "silt/features.hpp"
#include "silt/gradcheck.hpp"
#include "silt/losses.hpp"
#include "silt/network.hpp"
#include "silt/rng.hpp"
#include "silt/tasks.hpp"

namespace silt {

namespace {

template <typename T>
Tensor<T> uniform_tensor(std::vector<int> shape, SeededRng& rng, double lo, double hi) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.v) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

// Uniform magnitude in [margin, 1] with random sign: keeps |.| and leaky
// kinks out of reach of the finite-difference step.
template <typename T>
Tensor<T> signed_tensor(std::vector<int> shape, SeededRng& rng, double margin) {
    Tensor<T> t(std::move(shape));
    for (auto& v : t.v) {
        const double m = rng.uniform(margin, 1.0);
        v = static_cast<T>(rng.uniform() < 0.5 ? -m : m);
    }
    return t;
}

// Jittered checkerboard: every pixel's TV sign pattern is fixed and every
// neighbor difference is bounded away from zero.
template <typename T>
Tensor<T> checker_image(int c, int h, int w, SeededRng& rng) {
    Tensor<T> t({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double base = ((x + y) % 2 == 0) ? 0.25 : 0.75;
                t.at(ch, y, x) = static_cast<T>(base + rng.uniform(-0.05, 0.05));
            }
    return t;
}

struct Runner {
    std::ostream& out;
    double step;
    bool all_ok = true;

    template <typename T>
    void check(const std::string& name, double tol,
               const std::function<Var<T>(Graph<T>&, const std::vector<Var<T>>&)>& f,
               const std::vector<Tensor<T>>& point, const std::vector<std::string>& blocks) {
        GradCheckOptions opts;
        GradCheckReport rep = grad_check<T>(f, point, blocks, static_cast<T>(step), opts);
        const double err = rep.max_rel_err();
        const bool ok = err < tol;
        all_ok = all_ok && ok;
        char line[160];
        std::snprintf(line, sizeof(line), "%-32s max_rel_err=%.3e tol=%.0e coords=%lld  %s\n",
                      name.c_str(), err, tol,
                      static_cast<long long>([&] {
                          long long n = 0;
                          for (const auto& b : rep.blocks) n += b.coords_checked;
                          return n;
                      }()),
                      ok ? "ok" : "FAIL");
        out << line;
    }
};

template <typename T>
void run_battery(Runner& r, double prim_tol, double loss_tol) {
    using V = std::vector<Var<T>>;
    SeededRng rng(2024);

    // --- primitives ---
    {
        auto f = [](Graph<T>& g, const V& in) {
            Var<T> y = conv2d(g, in[0], in[1], in[2], 2, 1);
            return mean_all(g, mul(g, y, y));
        };
        std::vector<Tensor<T>> pt = {uniform_tensor<T>({3, 9, 8}, rng, -1, 1),
                                     uniform_tensor<T>({4, 3, 3, 3}, rng, -1, 1),
                                     uniform_tensor<T>({4}, rng, -0.5, 0.5)};
        r.template check<T>("primitive conv2d", prim_tol, f, pt, {"x", "w", "b"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            Var<T> y = resize_bilinear(g, in[0], 11, 5);
            return mean_all(g, mul(g, y, y));
        };
        r.template check<T>("primitive bilinear_resize", prim_tol, f,
                            {uniform_tensor<T>({2, 7, 9}, rng, -1, 1)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            Var<T> y = concat_channels(g, {in[0], in[1]});
            return mean_all(g, mul(g, y, y));
        };
        r.template check<T>("primitive channel_concat", prim_tol, f,
                            {uniform_tensor<T>({2, 5, 4}, rng, -1, 1),
                             uniform_tensor<T>({3, 5, 4}, rng, -1, 1)},
                            {"a", "b"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            return mean_all(g, mul(g, add(g, in[0], in[1]), sub(g, in[0], in[1])));
        };
        r.template check<T>("primitive add/sub/mul", prim_tol, f,
                            {uniform_tensor<T>({4, 4}, rng, -1, 1),
                             uniform_tensor<T>({4, 4}, rng, -1, 1)},
                            {"a", "b"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            Var<T> y = leaky_relu(g, in[0], T(0.2));
            return mean_all(g, mul(g, y, y));
        };
        r.template check<T>("primitive leaky_relu", prim_tol, f,
                            {signed_tensor<T>({3, 6, 6}, rng, 0.05)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) { return mean_all(g, sigmoid(g, in[0])); };
        r.template check<T>("primitive sigmoid", prim_tol, f,
                            {uniform_tensor<T>({3, 5, 5}, rng, -2, 2)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            Var<T> y = instance_norm(g, in[0], in[1], in[2]);
            return mean_all(g, mul(g, y, y));
        };
        r.template check<T>("primitive normalization", prim_tol, f,
                            {uniform_tensor<T>({3, 6, 5}, rng, -1, 1),
                             uniform_tensor<T>({3}, rng, 0.5, 1.5),
                             uniform_tensor<T>({3}, rng, -0.5, 0.5)},
                            {"x", "gamma", "beta"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            return add(g, mean_all(g, mul(g, in[0], in[0])), mul_scalar(g, sum_all(g, in[0]), T(0.25)));
        };
        r.template check<T>("primitive mean/sum reduce", prim_tol, f,
                            {uniform_tensor<T>({37}, rng, -1, 1)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) { return sum_all(g, abs_elem(g, in[0])); };
        r.template check<T>("primitive absolute", prim_tol, f,
                            {signed_tensor<T>({5, 5}, rng, 0.05)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            return mean_all(g, log_elem(g, in[0]));
        };
        r.template check<T>("primitive logarithm", prim_tol, f,
                            {uniform_tensor<T>({4, 4}, rng, 0.5, 1.5)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) { return mean_all(g, exp_elem(g, in[0])); };
        r.template check<T>("primitive exponential", prim_tol, f,
                            {uniform_tensor<T>({4, 4}, rng, -1, 1)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            Var<T> y = matmul_nt(g, in[0], in[1]);
            return mean_all(g, mul(g, y, y));
        };
        r.template check<T>("primitive dot_product (matmul)", prim_tol, f,
                            {uniform_tensor<T>({5, 7}, rng, -1, 1),
                             uniform_tensor<T>({4, 7}, rng, -1, 1)},
                            {"a", "b"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) {
            Var<T> y = l2_normalize_rows(g, in[0]);
            return mean_all(g, mul(g, y, y));
        };
        r.template check<T>("primitive l2_norm (rows)", prim_tol, f,
                            {uniform_tensor<T>({5, 6}, rng, 0.2, 1.0)}, {"x"});
    }

    // --- composite losses ---
    const FeatureExtractor fx = make_random_extractor(7);
    {
        ContextualParams cx;
        auto f = [&fx, cx](Graph<T>& g, const V& in) {
            Var<T> va = extract_vectors_node(g, fx, in[0], kDefaultContextLayer);
            Var<T> vb = extract_vectors_node(g, fx, in[1], kDefaultContextLayer);
            return contextual_loss_node(g, cx_similarity_node(g, va, vb, cx));
        };
        std::vector<Tensor<T>> pt = {uniform_tensor<T>({3, 16, 16}, rng, 0.05, 0.95),
                                     uniform_tensor<T>({3, 16, 16}, rng, 0.05, 0.95)};
        r.template check<T>("loss contextual (both images)", loss_tol, f, pt, {"x", "y"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) { return tv_norm_node(g, in[0]); };
        r.template check<T>("loss tv_norm", loss_tol, f, {checker_image<T>(1, 8, 8, rng)}, {"x"});
    }
    {
        auto f = [](Graph<T>& g, const V& in) { return mse(g, in[0], in[1]); };
        r.template check<T>("loss reconstruction mse", loss_tol, f,
                            {uniform_tensor<T>({3, 8, 8}, rng, 0, 1),
                             uniform_tensor<T>({3, 8, 8}, rng, 0, 1)},
                            {"out", "target"});
    }
    {
        // Cycle reconstruction through a small generator, unit scales.
        GeneratorConfig gc;
        gc.spec = parse_network_spec("N=4; S={(1,3)}; C={}; R=[]");
        gc.base_channels = 4;
        gc.seed = 5;
        const BuiltNetwork net = build_generator(gc);
        auto f = [&net](Graph<T>& g, const V& in) {
            auto bp = bind_params(g, net.params, /*requires_grad=*/false);
            const int h = g.val(in[0]).dim(1), w = g.val(in[0]).dim(2);
            Var<T> y = generator_apply(g, net, bp, in[0], h, w);
            Var<T> back = generator_apply(g, net, bp, y, h, w);
            return mse(g, back, in[0]);
        };
        r.template check<T>("loss reconstruction cycle", loss_tol, f,
                            {uniform_tensor<T>({3, 12, 12}, rng, 0.1, 0.9)}, {"x"});
    }
    {
        const MultiScaleDiscriminator d =
            build_discriminator({1, 1, 1, 1}, 11, /*base_channels=*/8);
        auto f = [&d](Graph<T>& g, const V& in) {
            auto bp = bind_params(g, d.params, /*requires_grad=*/false);
            auto maps = discriminator_apply(g, d, bp, in[0]);
            return lsgan_generator_node(g, d, maps);
        };
        r.template check<T>("loss generator-adversarial", loss_tol, f,
                            {uniform_tensor<T>({3, 32, 32}, rng, 0.05, 0.95)}, {"fake"});
    }
}

}  // namespace

bool run_gradcheck_battery(const BatteryOptions& opts, std::ostream& out) {
    const bool dbl = opts.precision != "single";
    const double step = opts.step > 0 ? opts.step : (dbl ? 1e-5 : 3e-3);
    const double prim_tol = opts.primitive_tol > 0 ? opts.primitive_tol : (dbl ? 1e-6 : 1e-3);
    const double loss_tol = opts.loss_tol > 0 ? opts.loss_tol : (dbl ? 1e-3 : 1e-2);
    out << "gradient checks, precision=" << (dbl ? "double" : "single") << ", step=" << step
        << "\n";
    Runner r{out, step};
    if (dbl)
        run_battery<double>(r, prim_tol, loss_tol);
    else
        run_battery<float>(r, prim_tol, loss_tol);
    out << (r.all_ok ? "all gradient checks passed\n" : "gradient checks FAILED\n");
    return r.all_ok;
}

}  // namespace silt
