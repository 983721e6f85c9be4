// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace silt {

void LossWeights::validate() const {
    if (lambda_c < 0 || lambda_g < 0 || lambda_r < 0 || lambda_tv < 0)
        throw std::invalid_argument("loss weights must be nonnegative");
    if (lambda_c == 0 && lambda_g == 0 && lambda_r == 0 && lambda_tv == 0)
        throw std::invalid_argument("at least one loss weight must be positive");
}

template <typename T>
Var<T> cx_similarity_node(Graph<T>& g, Var<T> vecs_a, Var<T> vecs_b,
                          const ContextualParams& params) {
    require_primitives({Primitive::dot_product, Primitive::l2_norm, Primitive::exponential,
                        Primitive::mean_reduce});
    const auto& av = g.val(vecs_a);
    const auto& bv = g.val(vecs_b);
    if (av.dim(0) < 1 || bv.dim(0) < 1)
        throw std::invalid_argument("contextual similarity needs nonempty vector sets");
    if (av.dim(1) != bv.dim(1))
        throw std::invalid_argument("contextual similarity dimension mismatch: " +
                                    std::to_string(av.dim(1)) + " vs " +
                                    std::to_string(bv.dim(1)));
    Var<T> an = l2_normalize_rows(g, vecs_a);
    Var<T> bn = l2_normalize_rows(g, vecs_b);
    Var<T> sim = matmul_nt(g, an, bn);  // cosine similarity, candidates x targets
    return cx_score(g, sim, static_cast<T>(params.bandwidth), static_cast<T>(params.eps));
}

template <typename T>
Var<T> contextual_loss_node(Graph<T>& g, Var<T> cx) {
    require_primitives({Primitive::logarithm});
    // -log(cx + eps) + log(1 + eps): zero at cx == 1, nonnegative on [0,1].
    Var<T> shifted = add_scalar(g, cx, static_cast<T>(kContextualLogEps));
    Var<T> loss = mul_scalar(g, log_elem(g, shifted), T(-1));
    return add_scalar(g, loss, static_cast<T>(std::log1p(kContextualLogEps)));
}

double contextual_similarity(const ContextVectors& a, const ContextVectors& b,
                             const ContextualParams& params) {
    if (a.count < 1 || b.count < 1)
        throw std::invalid_argument("contextual similarity needs nonempty vector sets");
    if (a.dim != b.dim)
        throw std::invalid_argument("contextual similarity dimension mismatch: " +
                                    std::to_string(a.dim) + " vs " + std::to_string(b.dim));
    Graph<float> g;
    Tensor<float> ta({a.count, a.dim});
    ta.v = a.v;
    Tensor<float> tb({b.count, b.dim});
    tb.v = b.v;
    Var<float> cx = cx_similarity_node(g, g.constant(std::move(ta)), g.constant(std::move(tb)),
                                       params);
    return static_cast<double>(g.val(cx).v[0]);
}

double contextual_loss(const Image& x, const Image& y, const FeatureExtractor& fx,
                       const std::string& layer, const ContextualParams& params) {
    Graph<float> g;
    Var<float> va = extract_vectors_node(g, fx, g.constant(x), layer);
    Var<float> vb = extract_vectors_node(g, fx, g.constant(y), layer);
    Var<float> cx = cx_similarity_node(g, va, vb, params);
    Var<float> loss = contextual_loss_node(g, cx);
    return static_cast<double>(g.val(loss).v[0]);
}

std::vector<Image> real_pyramid(const MultiScaleDiscriminator& d, const Image& real) {
    std::vector<Image> out;
    for (double f : d.scale_factors) {
        const int sh = std::max(1, static_cast<int>(std::floor(image_height(real) * f + 0.5)));
        const int sw = std::max(1, static_cast<int>(std::floor(image_width(real) * f + 0.5)));
        out.push_back(resize_bicubic(real, sh, sw));
    }
    return out;
}

namespace {

template <typename T>
Var<T> mean_sq_shift(Graph<T>& g, Var<T> map, T shift) {
    Var<T> s = add_scalar(g, map, shift);
    return mean_all(g, mul(g, s, s));
}

void check_min_size(const MultiScaleDiscriminator& d, const Image& im, const char* role) {
    if (image_height(im) < d.min_input || image_width(im) < d.min_input)
        throw std::invalid_argument(std::string(role) + " image " +
                                    std::to_string(image_height(im)) + "x" +
                                    std::to_string(image_width(im)) +
                                    " is below the discriminator minimum size " +
                                    std::to_string(d.min_input) + "x" +
                                    std::to_string(d.min_input));
}

}  // namespace

template <typename T>
Var<T> lsgan_generator_node(Graph<T>& g, const MultiScaleDiscriminator& d,
                            const std::vector<Var<T>>& fake_maps) {
    Var<T> total = g.constant(Tensor<T>::scalar(T(0)));
    for (size_t i = 0; i < fake_maps.size(); ++i) {
        Var<T> term = mean_sq_shift(g, fake_maps[i], T(-1));
        total = add(g, total, mul_scalar(g, term, static_cast<T>(d.scale_weights[i])));
    }
    return total;
}

template <typename T>
Var<T> lsgan_discriminator_node(Graph<T>& g, const MultiScaleDiscriminator& d,
                                const std::vector<Var<T>>& real_maps,
                                const std::vector<Var<T>>& fake_maps) {
    Var<T> total = g.constant(Tensor<T>::scalar(T(0)));
    for (size_t i = 0; i < real_maps.size(); ++i) {
        Var<T> real_term = mean_sq_shift(g, real_maps[i], T(-1));
        Var<T> fake_term = mean_all(g, mul(g, fake_maps[i], fake_maps[i]));
        Var<T> term = add(g, real_term, fake_term);
        total = add(g, total, mul_scalar(g, term, static_cast<T>(d.scale_weights[i])));
    }
    return total;
}

std::pair<double, double> adversarial_losses(const MultiScaleDiscriminator& d, const Image& real,
                                             const Image& fake) {
    check_min_size(d, real, "real");
    check_min_size(d, fake, "fake");
    Graph<float> g;
    auto bp = bind_params(g, d.params, /*requires_grad=*/false);
    std::vector<Var<float>> real_vars;
    for (const auto& level : real_pyramid(d, real)) real_vars.push_back(g.constant(level));
    auto real_maps = discriminator_apply_pyramid(g, d, bp, real_vars);
    auto fake_maps = discriminator_apply(g, d, bp, g.constant(fake));
    const double lg = g.val(lsgan_generator_node(g, d, fake_maps)).v[0];
    const double ld = g.val(lsgan_discriminator_node(g, d, real_maps, fake_maps)).v[0];
    return {lg, ld};
}

double reconstruction_restoration(const Image& out, const Image& target) {
    return mse_value(out, target);
}

double reconstruction_cycle(const BuiltNetwork& net, const Image& x, double s_h, double s_w) {
    if (s_h <= 0 || s_w <= 0) throw std::invalid_argument("cycle scales must be positive");
    const Image y = generator_forward(net, x, s_h, s_w);
    Graph<float> g;
    auto bp = bind_params(g, net.params, /*requires_grad=*/false);
    // Exact inverse-size request: back to the source extent, not round(1/s).
    Var<float> back =
        generator_apply(g, net, bp, g.constant(y), image_height(x), image_width(x));
    return mse_value(g.val(back), x);
}

double tv_norm(const Image& im) {
    if (im.ndim() != 3 || im.dim(1) < 2 || im.dim(2) < 2)
        throw std::invalid_argument("tv_norm needs an image of at least 2x2, got " +
                                    shape_string(im.shape));
    const int c = im.dim(0), h = im.dim(1), w = im.dim(2);
    double total = 0.0;
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x + 1 < w; ++x)
                total += std::abs(static_cast<double>(im.at(ch, y, x + 1)) - im.at(ch, y, x));
        for (int y = 0; y + 1 < h; ++y)
            for (int x = 0; x < w; ++x)
                total += std::abs(static_cast<double>(im.at(ch, y + 1, x)) - im.at(ch, y, x));
    }
    return total;
}

template <typename T>
Var<T> tv_norm_node(Graph<T>& g, Var<T> image) {
    require_primitives({Primitive::absolute, Primitive::sum_reduce});
    const auto& shape = g.val(image).shape;
    if (shape.size() != 3 || shape[1] < 2 || shape[2] < 2)
        throw std::invalid_argument("tv_norm needs an image of at least 2x2");
    return tv_l1(g, image);
}

LossBreakdown total_loss(double contextual, double gen_adv, double disc_adv,
                         double reconstruction, double tv, const LossWeights& w) {
    w.validate();
    const struct {
        const char* name;
        double v;
    } parts[] = {{"contextual", contextual},
                 {"generator-adversarial", gen_adv},
                 {"discriminator-adversarial", disc_adv},
                 {"reconstruction", reconstruction},
                 {"tv", tv}};
    for (const auto& p : parts)
        if (!std::isfinite(p.v))
            throw std::runtime_error(std::string("non-finite loss component: ") + p.name);
    LossBreakdown b;
    b.contextual = contextual;
    b.gen_adv = gen_adv;
    b.disc_adv = disc_adv;
    b.reconstruction = reconstruction;
    b.tv = tv;
    b.total = w.lambda_c * contextual + w.lambda_g * gen_adv + w.lambda_r * reconstruction +
              w.lambda_tv * tv;
    return b;
}

#define SILT_INSTANTIATE_LOSSES(T)                                                              \
    template Var<T> cx_similarity_node<T>(Graph<T>&, Var<T>, Var<T>, const ContextualParams&);  \
    template Var<T> contextual_loss_node<T>(Graph<T>&, Var<T>);                                 \
    template Var<T> lsgan_generator_node<T>(Graph<T>&, const MultiScaleDiscriminator&,          \
                                            const std::vector<Var<T>>&);                        \
    template Var<T> lsgan_discriminator_node<T>(Graph<T>&, const MultiScaleDiscriminator&,      \
                                                const std::vector<Var<T>>&,                     \
                                                const std::vector<Var<T>>&);                    \
    template Var<T> tv_norm_node<T>(Graph<T>&, Var<T>);

SILT_INSTANTIATE_LOSSES(float)
SILT_INSTANTIATE_LOSSES(double)

#undef SILT_INSTANTIATE_LOSSES

}  // namespace silt
