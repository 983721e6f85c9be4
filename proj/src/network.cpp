// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "silt/rng.hpp"

namespace silt {

size_t ParamStore::add(const std::string& name, Tensor<float> t) {
    if (index.count(name)) throw std::logic_error("duplicate parameter name: " + name);
    index[name] = tensors.size();
    names.push_back(name);
    tensors.push_back(std::move(t));
    return tensors.size() - 1;
}

const Tensor<float>& ParamStore::at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw std::out_of_range("unknown parameter: " + name);
    return tensors[it->second];
}

Tensor<float>& ParamStore::at(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw std::out_of_range("unknown parameter: " + name);
    return tensors[it->second];
}

int64_t ParamStore::total_params() const {
    int64_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
}

template <typename T>
Var<T> BoundParams<T>::at(const std::string& name) const {
    auto it = store->index.find(name);
    if (it == store->index.end()) throw std::out_of_range("unknown parameter: " + name);
    return vars[it->second];
}

template <typename T>
BoundParams<T> bind_params(Graph<T>& g, const ParamStore& params, bool requires_grad) {
    BoundParams<T> bp;
    bp.store = &params;
    bp.vars.reserve(params.size());
    for (const auto& t : params.tensors) bp.vars.push_back(g.leaf(t.template cast<T>(), requires_grad));
    return bp;
}

std::vector<int> default_channel_schedule(int stages, int base_channels) {
    std::vector<int> s(static_cast<size_t>(stages));
    for (int i = 0; i < stages; ++i) s[static_cast<size_t>(i)] = base_channels << std::min(i, 2);
    return s;
}

int scaled_size(int n, double s) {
    if (s <= 0) throw std::invalid_argument("non-positive scale factor " + std::to_string(s));
    const int v = static_cast<int>(std::floor(n * s + 0.5));
    if (v < 1)
        throw std::invalid_argument("degenerate output size from scale " + std::to_string(s) +
                                    " on extent " + std::to_string(n));
    return v;
}

namespace {

constexpr float kLeakySlope = 0.2f;
constexpr float kNormEps = 1e-5f;

struct GenLayout {
    // channels of every layer slot's output, index 0 = network input
    std::vector<int> phi_channels;
    // per layer slot: extra input channels from skip/cascade branches
    std::vector<int> branch_channels;
    std::vector<std::pair<int, int>> skips_by_dest;  // sorted copy of spec skips
};

std::string layer_name(int l, int stages) {
    if (l == 0) return "input";
    if (l <= stages) return "enc" + std::to_string(l);
    return "dec" + std::to_string(l - stages);
}

GenLayout plan_layout(const GeneratorConfig& cfg, int stages, const std::vector<int>& enc_ch,
                      const std::vector<int>& dec_ch) {
    const int n = cfg.spec.depth;
    GenLayout lo;
    lo.phi_channels.assign(static_cast<size_t>(n) + 1, 0);
    lo.branch_channels.assign(static_cast<size_t>(n) + 1, 0);
    lo.phi_channels[0] = cfg.in_channels;
    for (int l = 1; l <= n; ++l)
        lo.phi_channels[static_cast<size_t>(l)] =
            l <= stages ? enc_ch[static_cast<size_t>(l - 1)] : dec_ch[static_cast<size_t>(l - stages - 1)];
    for (const auto& [i, j] : cfg.spec.skips)
        lo.branch_channels[static_cast<size_t>(j)] += lo.phi_channels[static_cast<size_t>(i)];
    for (int c : cfg.spec.cascades) lo.branch_channels[static_cast<size_t>(c)] += cfg.in_channels;
    lo.skips_by_dest = cfg.spec.skips;
    std::sort(lo.skips_by_dest.begin(), lo.skips_by_dest.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    return lo;
}

void add_conv_params(ParamStore& ps, SeededRng& rng, const std::string& prefix, int out_c,
                     int in_c, int k, double gain = 1.0) {
    const double std_dev = gain / std::sqrt(static_cast<double>(in_c) * k * k);
    ps.add(prefix + ".w", seeded_normal<float>({out_c, in_c, k, k}, rng, std_dev));
    ps.add(prefix + ".b", Tensor<float>({out_c}));
}

void add_norm_params(ParamStore& ps, const std::string& prefix, int c) {
    ps.add(prefix + ".gamma", Tensor<float>({c}, 1.0f));
    ps.add(prefix + ".beta", Tensor<float>({c}));
}

int64_t params_with_prefix(const ParamStore& ps, const std::string& prefix) {
    int64_t n = 0;
    for (size_t i = 0; i < ps.names.size(); ++i)
        if (ps.names[i].rfind(prefix, 0) == 0) n += ps.tensors[i].numel();
    return n;
}

}  // namespace

BuiltNetwork build_generator(const GeneratorConfig& config) {
    require_primitives({Primitive::conv2d, Primitive::bilinear_resize, Primitive::channel_concat,
                        Primitive::elementwise_add, Primitive::leaky_relu, Primitive::sigmoid,
                        Primitive::normalization});
    const auto violations = validate_spec(config.spec);
    if (!violations.empty()) {
        std::string msg = "invalid network spec:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw InvalidSpec(msg);
    }
    const int n = config.spec.depth;
    if (n % 2 != 0)
        throw InvalidSpec("generator depth must be even (encoder/decoder halves), got " +
                          std::to_string(n));

    BuiltNetwork net;
    net.config = config;
    net.stages = n / 2;
    net.enc_channels = config.channel_schedule.empty()
                           ? default_channel_schedule(net.stages, config.base_channels)
                           : config.channel_schedule;
    if (static_cast<int>(net.enc_channels.size()) != net.stages)
        throw InvalidSpec("channel schedule length " + std::to_string(net.enc_channels.size()) +
                          " does not match encoder stage count " + std::to_string(net.stages));
    for (int c : net.enc_channels)
        if (c < 1) throw InvalidSpec("channel schedule entries must be >= 1");
    net.dec_channels.resize(static_cast<size_t>(net.stages));
    for (int m = 1; m <= net.stages; ++m)
        net.dec_channels[static_cast<size_t>(m - 1)] =
            m < net.stages ? net.enc_channels[static_cast<size_t>(net.stages - 1 - m)]
                           : config.out_channels;

    const GenLayout lo = plan_layout(config, net.stages, net.enc_channels, net.dec_channels);
    SeededRng rng(config.seed);

    // Encoder stages: conv(stride 2) -> norm -> leaky relu.
    for (int l = 1; l <= net.stages; ++l) {
        const int in_c = lo.phi_channels[static_cast<size_t>(l - 1)] +
                         lo.branch_channels[static_cast<size_t>(l)];
        const std::string name = "enc" + std::to_string(l);
        add_conv_params(net.params, rng, name + ".conv", net.enc_channels[static_cast<size_t>(l - 1)],
                        in_c, 3);
        if (config.norm == NormKind::instance)
            add_norm_params(net.params, name + ".norm", net.enc_channels[static_cast<size_t>(l - 1)]);
    }
    // Skip adapters in spec order: the inner conv of conv(conv(phi_i) || phi_{j-1}).
    for (const auto& [i, j] : config.spec.skips) {
        const int c = lo.phi_channels[static_cast<size_t>(i)];
        add_conv_params(net.params, rng,
                        "skip" + std::to_string(i) + "_" + std::to_string(j) + ".conv", c, c, 3);
    }
    // Residual blocks.
    if (config.spec.residual_shorthand) {
        const int bc = net.enc_channels[static_cast<size_t>(net.stages - 1)];
        for (int r = 1; r <= config.spec.residual_count; ++r) {
            const std::string name = "res" + std::to_string(r);
            add_conv_params(net.params, rng, name + ".conv1", bc, bc, 3);
            if (config.norm == NormKind::instance) add_norm_params(net.params, name + ".norm1", bc);
            add_conv_params(net.params, rng, name + ".conv2", bc, bc, 3);
        }
    } else {
        for (const auto& rb : config.spec.residual_blocks) {
            const std::string name =
                "res" + std::to_string(rb.start) + "_" + std::to_string(rb.length);
            const int c_src = lo.phi_channels[static_cast<size_t>(rb.start)];
            const int c_dst = lo.phi_channels[static_cast<size_t>(rb.start + rb.length)];
            add_conv_params(net.params, rng, name + ".conv", c_dst, c_dst, 3);
            if (c_src != c_dst) add_conv_params(net.params, rng, name + ".proj", c_dst, c_src, 1);
        }
    }
    // Decoder stages: bilinear upsample -> conv -> norm -> leaky relu;
    // final stage conv -> sigmoid.
    for (int m = 1; m <= net.stages; ++m) {
        const int l = net.stages + m;
        const int in_c = lo.phi_channels[static_cast<size_t>(l - 1)] +
                         lo.branch_channels[static_cast<size_t>(l)];
        const std::string name = "dec" + std::to_string(m);
        add_conv_params(net.params, rng, name + ".conv", net.dec_channels[static_cast<size_t>(m - 1)],
                        in_c, 3);
        if (m < net.stages && config.norm == NormKind::instance)
            add_norm_params(net.params, name + ".norm", net.dec_channels[static_cast<size_t>(m - 1)]);
    }

    // Topology summary.
    net.layers.push_back({"input", "input", config.in_channels, 0});
    for (int l = 1; l <= n; ++l) {
        const std::string nm = layer_name(l, net.stages);
        net.layers.push_back({nm, l <= net.stages ? "encoder" : "decoder",
                              lo.phi_channels[static_cast<size_t>(l)],
                              params_with_prefix(net.params, nm + ".")});
        std::string prev = layer_name(l - 1, net.stages);
        if (l == net.stages + 1 && config.spec.residual_shorthand &&
            config.spec.residual_count > 0)
            prev = "res" + std::to_string(config.spec.residual_count);
        net.edges.push_back({prev, nm, EdgeKind::sequential});
        if (l == net.stages && config.spec.residual_shorthand) {
            for (int r = 1; r <= config.spec.residual_count; ++r) {
                const std::string rn = "res" + std::to_string(r);
                const std::string prev = r == 1 ? nm : "res" + std::to_string(r - 1);
                net.layers.push_back({rn, "residual",
                                      lo.phi_channels[static_cast<size_t>(net.stages)],
                                      params_with_prefix(net.params, rn + ".")});
                net.edges.push_back({prev, rn, EdgeKind::sequential});
                net.edges.push_back({prev, rn, EdgeKind::residual_add});
            }
        }
    }
    if (!config.spec.residual_shorthand) {
        for (const auto& rb : config.spec.residual_blocks) {
            const std::string rn =
                "res" + std::to_string(rb.start) + "_" + std::to_string(rb.length);
            net.layers.push_back({rn, "residual",
                                  lo.phi_channels[static_cast<size_t>(rb.start + rb.length)],
                                  params_with_prefix(net.params, rn + ".")});
            net.edges.push_back(
                {layer_name(rb.start + rb.length, net.stages), rn, EdgeKind::sequential});
            net.edges.push_back({layer_name(rb.start, net.stages), rn, EdgeKind::residual_add});
        }
    }
    for (const auto& [i, j] : config.spec.skips)
        net.edges.push_back(
            {layer_name(i, net.stages), layer_name(j, net.stages), EdgeKind::skip_concat});
    for (int c : config.spec.cascades)
        net.edges.push_back({"input", layer_name(c, net.stages), EdgeKind::cascade_concat});
    return net;
}

int BuiltNetwork::concat_edge_count() const {
    int n = 0;
    for (const auto& e : edges)
        if (e.kind == EdgeKind::skip_concat || e.kind == EdgeKind::cascade_concat) ++n;
    return n;
}

int BuiltNetwork::residual_add_count() const {
    int n = 0;
    for (const auto& l : layers)
        if (l.kind == "residual") ++n;
    return n;
}

namespace {

template <typename T>
Var<T> apply_norm_act(Graph<T>& g, const BoundParams<T>& bp, const std::string& norm_prefix,
                      Var<T> h, bool use_norm, bool final_sigmoid) {
    if (final_sigmoid) return sigmoid(g, h);
    const auto& shape = g.val(h).shape;
    // Normalizing a 1x1 map would collapse it to the bias; skip it there.
    if (use_norm && shape[1] * shape[2] > 1)
        h = instance_norm(g, h, bp.at(norm_prefix + ".gamma"), bp.at(norm_prefix + ".beta"),
                          T(kNormEps));
    return leaky_relu(g, h, T(kLeakySlope));
}

}  // namespace

template <typename T>
Var<T> generator_apply(Graph<T>& g, const BuiltNetwork& net, const BoundParams<T>& bp, Var<T> x,
                       int out_h, int out_w) {
    const auto& cfg = net.config;
    const int n = cfg.spec.depth;
    const int stages = net.stages;
    if (g.val(x).dim(0) != cfg.in_channels)
        throw std::invalid_argument("generator input has " + std::to_string(g.val(x).dim(0)) +
                                    " channels, network expects " +
                                    std::to_string(cfg.in_channels));
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("degenerate generator output size");

    // Decoder spatial schedule: half the target per remaining stage.
    std::vector<std::pair<int, int>> dsz(static_cast<size_t>(stages) + 1);
    dsz[static_cast<size_t>(stages)] = {out_h, out_w};
    for (int m = stages; m >= 1; --m)
        dsz[static_cast<size_t>(m - 1)] = {std::max(1, (dsz[static_cast<size_t>(m)].first + 1) / 2),
                                           std::max(1, (dsz[static_cast<size_t>(m)].second + 1) / 2)};

    const bool use_norm = cfg.norm == NormKind::instance;
    std::vector<Var<T>> phi(static_cast<size_t>(n) + 1);
    phi[0] = x;

    auto branches_for = [&](int l, int th, int tw) {
        std::vector<Var<T>> extra;
        for (const auto& [i, j] : cfg.spec.skips) {
            if (j != l) continue;
            const std::string pre = "skip" + std::to_string(i) + "_" + std::to_string(j) + ".conv";
            Var<T> s = conv2d(g, phi[static_cast<size_t>(i)], bp.at(pre + ".w"), bp.at(pre + ".b"),
                              1, 1);
            const auto& ss = g.val(s).shape;
            if (ss[1] != th || ss[2] != tw) s = resize_bilinear(g, s, th, tw);
            extra.push_back(s);
        }
        for (int c : cfg.spec.cascades) {
            if (c != l) continue;
            const auto& xs = g.val(x).shape;
            Var<T> ci = (xs[1] == th && xs[2] == tw) ? x : resize_bilinear(g, x, th, tw);
            extra.push_back(ci);
        }
        return extra;
    };

    auto apply_explicit_residuals = [&](int l) {
        if (cfg.spec.residual_shorthand) return;
        for (const auto& rb : cfg.spec.residual_blocks) {
            if (rb.start + rb.length != l) continue;
            const std::string pre =
                "res" + std::to_string(rb.start) + "_" + std::to_string(rb.length);
            Var<T> tail = conv2d(g, phi[static_cast<size_t>(l)], bp.at(pre + ".conv.w"),
                                 bp.at(pre + ".conv.b"), 1, 1);
            Var<T> head = phi[static_cast<size_t>(rb.start)];
            const auto& ts = g.val(tail).shape;
            const auto& hs = g.val(head).shape;
            if (hs[1] != ts[1] || hs[2] != ts[2]) head = resize_bilinear(g, head, ts[1], ts[2]);
            if (g.val(head).dim(0) != ts[0])
                head = conv2d(g, head, bp.at(pre + ".proj.w"), bp.at(pre + ".proj.b"), 1, 0);
            phi[static_cast<size_t>(l)] = add(g, tail, head);
        }
    };

    for (int l = 1; l <= n; ++l) {
        const bool is_enc = l <= stages;
        const int m = l - stages;  // decoder stage when > 0
        Var<T> base;
        int th, tw;
        if (is_enc) {
            base = phi[static_cast<size_t>(l - 1)];
            th = g.val(base).dim(1);
            tw = g.val(base).dim(2);
        } else {
            th = dsz[static_cast<size_t>(m)].first;
            tw = dsz[static_cast<size_t>(m)].second;
            base = resize_bilinear(g, phi[static_cast<size_t>(l - 1)], th, tw);
        }
        std::vector<Var<T>> inputs{base};
        auto extra = branches_for(l, th, tw);
        inputs.insert(inputs.end(), extra.begin(), extra.end());
        Var<T> in = inputs.size() == 1 ? inputs[0] : concat_channels(g, inputs);

        const std::string nm = layer_name(l, stages);
        Var<T> h = conv2d(g, in, bp.at(nm + ".conv.w"), bp.at(nm + ".conv.b"), is_enc ? 2 : 1, 1);
        h = apply_norm_act(g, bp, nm + ".norm", h, use_norm, /*final_sigmoid=*/l == n);
        phi[static_cast<size_t>(l)] = h;

        apply_explicit_residuals(l);

        if (l == stages) {
            if (cfg.spec.residual_shorthand) {
                for (int r = 1; r <= cfg.spec.residual_count; ++r) {
                    const std::string pre = "res" + std::to_string(r);
                    Var<T> cur = phi[static_cast<size_t>(l)];
                    Var<T> t = conv2d(g, cur, bp.at(pre + ".conv1.w"), bp.at(pre + ".conv1.b"), 1, 1);
                    const auto& ts = g.val(t).shape;
                    if (use_norm && ts[1] * ts[2] > 1)
                        t = instance_norm(g, t, bp.at(pre + ".norm1.gamma"),
                                          bp.at(pre + ".norm1.beta"), T(kNormEps));
                    t = leaky_relu(g, t, T(kLeakySlope));
                    t = conv2d(g, t, bp.at(pre + ".conv2.w"), bp.at(pre + ".conv2.b"), 1, 1);
                    phi[static_cast<size_t>(l)] = add(g, cur, t);
                }
            }
            // Route the bottleneck onto the requested output-size ladder.
            phi[static_cast<size_t>(l)] = resize_bilinear(g, phi[static_cast<size_t>(l)],
                                                          dsz[0].first, dsz[0].second);
        }
    }
    return phi[static_cast<size_t>(n)];
}

Tensor<float> generator_forward(const BuiltNetwork& net, const Tensor<float>& x_chw, double s_h,
                                double s_w) {
    if (x_chw.ndim() != 3) throw std::invalid_argument("generator_forward: expected CHW input");
    return generator_forward_size(net, x_chw, scaled_size(x_chw.dim(1), s_h),
                                  scaled_size(x_chw.dim(2), s_w));
}

Tensor<float> generator_forward_size(const BuiltNetwork& net, const Tensor<float>& x_chw,
                                     int out_h, int out_w) {
    if (x_chw.ndim() != 3) throw std::invalid_argument("generator_forward: expected CHW input");
    Graph<float> g;
    auto bp = bind_params(g, net.params, /*requires_grad=*/false);
    Var<float> x = g.constant(x_chw);
    Var<float> y = generator_apply(g, net, bp, x, out_h, out_w);
    return g.val(y);
}

MultiScaleDiscriminator build_discriminator(const std::array<double, 4>& scale_weights,
                                            uint64_t seed, int base_channels, NormKind norm) {
    require_primitives({Primitive::conv2d, Primitive::bilinear_resize, Primitive::leaky_relu,
                        Primitive::normalization, Primitive::mean_reduce});
    double sum = 0;
    for (double w : scale_weights) {
        if (w < 0) throw std::invalid_argument("discriminator scale weights must be nonnegative");
        sum += w;
    }
    if (sum <= 0) throw std::invalid_argument("all-zero discriminator scale weights");

    MultiScaleDiscriminator d;
    for (size_t i = 0; i < 4; ++i) d.scale_weights[i] = scale_weights[i] / sum;
    d.scale_factors = {1.0, 0.5, 0.25, 0.125};
    d.channels = {base_channels, 2 * base_channels, 4 * base_channels, 1};
    d.norm = norm;
    d.seed = seed;
    SeededRng rng(seed);
    for (int s = 1; s <= 4; ++s) {
        int in_c = 3;
        for (int l = 1; l <= d.layers_per_sub; ++l) {
            const int out_c = d.channels[static_cast<size_t>(l - 1)];
            const std::string pre = "d" + std::to_string(s) + ".conv" + std::to_string(l);
            add_conv_params(d.params, rng, pre, out_c, in_c, 4);
            if (norm == NormKind::instance && l > 1 && l < d.layers_per_sub)
                add_norm_params(d.params, "d" + std::to_string(s) + ".norm" + std::to_string(l),
                                out_c);
            in_c = out_c;
        }
    }
    return d;
}

namespace {
inline int disc_stride(int l, int layers) { return l < layers ? 2 : 1; }
constexpr int kDiscKernel = 4;
constexpr int kDiscPad = 2;
}  // namespace

template <typename T>
Var<T> sub_discriminator_apply(Graph<T>& g, const MultiScaleDiscriminator& d,
                               const BoundParams<T>& bp, int sub, Var<T> z) {
    Var<T> h = z;
    for (int l = 1; l <= d.layers_per_sub; ++l) {
        const std::string pre = "d" + std::to_string(sub) + ".conv" + std::to_string(l);
        h = conv2d(g, h, bp.at(pre + ".w"), bp.at(pre + ".b"), disc_stride(l, d.layers_per_sub),
                   kDiscPad);
        if (l < d.layers_per_sub) {
            if (d.norm == NormKind::instance && l > 1) {
                const std::string np = "d" + std::to_string(sub) + ".norm" + std::to_string(l);
                const auto& hs = g.val(h).shape;
                if (hs[1] * hs[2] > 1)
                    h = instance_norm(g, h, bp.at(np + ".gamma"), bp.at(np + ".beta"), T(kNormEps));
            }
            h = leaky_relu(g, h, T(kLeakySlope));
        }
    }
    return h;  // linear patch-score map
}

template <typename T>
std::vector<Var<T>> discriminator_apply(Graph<T>& g, const MultiScaleDiscriminator& d,
                                        const BoundParams<T>& bp, Var<T> z) {
    const int h = g.val(z).dim(1), w = g.val(z).dim(2);
    std::vector<Var<T>> maps;
    for (int s = 1; s <= 4; ++s) {
        const double f = d.scale_factors[static_cast<size_t>(s - 1)];
        const int sh = std::max(1, static_cast<int>(std::floor(h * f + 0.5)));
        const int sw = std::max(1, static_cast<int>(std::floor(w * f + 0.5)));
        Var<T> zi = (sh == h && sw == w) ? z : resize_bilinear(g, z, sh, sw);
        maps.push_back(sub_discriminator_apply(g, d, bp, s, zi));
    }
    return maps;
}

template <typename T>
std::vector<Var<T>> discriminator_apply_pyramid(Graph<T>& g, const MultiScaleDiscriminator& d,
                                                const BoundParams<T>& bp,
                                                const std::vector<Var<T>>& pyramid) {
    if (pyramid.size() != 4)
        throw std::invalid_argument("discriminator pyramid must have 4 levels");
    std::vector<Var<T>> maps;
    for (int s = 1; s <= 4; ++s)
        maps.push_back(sub_discriminator_apply(g, d, bp, s, pyramid[static_cast<size_t>(s - 1)]));
    return maps;
}

DiscriminatorOutput discriminator_forward(const MultiScaleDiscriminator& d,
                                          const Tensor<float>& z_chw) {
    if (z_chw.ndim() != 3) throw std::invalid_argument("discriminator input must be CHW");
    if (z_chw.dim(1) < d.min_input || z_chw.dim(2) < d.min_input)
        throw std::invalid_argument(
            "discriminator input " + std::to_string(z_chw.dim(1)) + "x" +
            std::to_string(z_chw.dim(2)) + " is below the minimum size " +
            std::to_string(d.min_input) + "x" + std::to_string(d.min_input));
    Graph<float> g;
    auto bp = bind_params(g, d.params, /*requires_grad=*/false);
    Var<float> z = g.constant(z_chw);
    auto maps = discriminator_apply(g, d, bp, z);
    DiscriminatorOutput out;
    double agg = 0;
    for (int s = 0; s < 4; ++s) {
        const auto& m = g.val(maps[static_cast<size_t>(s)]);
        out.maps.push_back(m);
        const double mean =
            static_cast<double>(kernels::reduce_sum(m.data(), m.numel())) / m.numel();
        agg += d.scale_weights[static_cast<size_t>(s)] * mean;
    }
    out.aggregate = agg;
    return out;
}

std::vector<std::pair<int, int>> sub_discriminator_map_sizes(const MultiScaleDiscriminator& d,
                                                             int h, int w) {
    std::vector<std::pair<int, int>> sizes;
    int ch = h, cw = w;
    for (int l = 1; l <= d.layers_per_sub; ++l) {
        const int s = disc_stride(l, d.layers_per_sub);
        ch = kernels::conv_out_size(ch, kDiscKernel, s, kDiscPad);
        cw = kernels::conv_out_size(cw, kDiscKernel, s, kDiscPad);
        sizes.emplace_back(ch, cw);
    }
    return sizes;
}

std::string describe_network(const BuiltNetwork& net) {
    char line[160];
    std::string out;
    std::snprintf(line, sizeof(line), "%-10s %-9s %9s %12s\n", "layer", "kind", "channels",
                  "params");
    out += line;
    for (const auto& l : net.layers) {
        std::snprintf(line, sizeof(line), "%-10s %-9s %9d %12lld\n", l.name.c_str(),
                      l.kind.c_str(), l.out_channels, static_cast<long long>(l.param_count));
        out += line;
    }
    int skips = 0, cascades = 0;
    out += "edges:\n";
    for (const auto& e : net.edges) {
        const char* kind = nullptr;
        switch (e.kind) {
            case EdgeKind::sequential: continue;
            case EdgeKind::skip_concat: kind = "skip-concat"; ++skips; break;
            case EdgeKind::residual_add: kind = "residual-add"; break;
            case EdgeKind::cascade_concat: kind = "cascade-concat"; ++cascades; break;
        }
        std::snprintf(line, sizeof(line), "  %-10s -> %-10s %s\n", e.from.c_str(), e.to.c_str(),
                      kind);
        out += line;
    }
    std::snprintf(line, sizeof(line),
                  "skip edges: %d, cascade edges: %d, residual blocks: %d\ntotal parameters: %lld\n",
                  skips, cascades, net.residual_add_count(),
                  static_cast<long long>(net.params.total_params()));
    out += line;
    return out;
}

#define SILT_INSTANTIATE_NET(T)                                                                    \
    template struct BoundParams<T>;                                                               \
    template BoundParams<T> bind_params<T>(Graph<T>&, const ParamStore&, bool);                   \
    template Var<T> generator_apply<T>(Graph<T>&, const BuiltNetwork&, const BoundParams<T>&,     \
                                       Var<T>, int, int);                                         \
    template Var<T> sub_discriminator_apply<T>(Graph<T>&, const MultiScaleDiscriminator&,         \
                                               const BoundParams<T>&, int, Var<T>);               \
    template std::vector<Var<T>> discriminator_apply<T>(Graph<T>&, const MultiScaleDiscriminator&, \
                                                        const BoundParams<T>&, Var<T>);           \
    template std::vector<Var<T>> discriminator_apply_pyramid<T>(                                  \
        Graph<T>&, const MultiScaleDiscriminator&, const BoundParams<T>&,                         \
        const std::vector<Var<T>>&);

SILT_INSTANTIATE_NET(float)
SILT_INSTANTIATE_NET(double)

#undef SILT_INSTANTIATE_NET

}  // namespace silt
