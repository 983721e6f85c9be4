// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/features.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "silt/rng.hpp"

namespace silt {

namespace {

constexpr float kLeakySlope = 0.2f;
// Standard per-channel statistics for [0,1] RGB inputs.
constexpr std::array<float, 3> kDefaultMean = {0.485f, 0.456f, 0.406f};
constexpr std::array<float, 3> kDefaultStd = {0.229f, 0.224f, 0.225f};

struct StageShape {
    std::string name;
    int in_c, out_c;
};

std::vector<StageShape> default_stages() {
    return {{"conv1", 3, 32}, {"conv2", 32, 64}, {"conv3", 64, 128}};
}

}  // namespace

const FeatureLayer* FeatureExtractor::find_layer(const std::string& name) const {
    for (const auto& l : layers)
        if (l.name == name) return &l;
    return nullptr;
}

FeatureExtractor make_random_extractor(uint64_t seed) {
    require_primitives({Primitive::conv2d, Primitive::leaky_relu});
    FeatureExtractor fx;
    fx.norm_mean = kDefaultMean;
    fx.norm_std = kDefaultStd;
    fx.source = "random:" + std::to_string(seed);
    SeededRng rng(seed);
    int reduction = 1;
    for (const auto& st : default_stages()) {
        reduction *= 2;
        const double std_dev = 1.0 / std::sqrt(static_cast<double>(st.in_c) * 9.0);
        fx.params.add(st.name + ".w",
                      seeded_normal<float>({st.out_c, st.in_c, 3, 3}, rng, std_dev));
        fx.params.add(st.name + ".b", Tensor<float>({st.out_c}));
        fx.layers.push_back({st.name, reduction, st.out_c});
    }
    return fx;
}

// Archive layout (all text fields space-separated, one record per line):
//   featarc 1
//   norm_mean r g b
//   norm_std r g b
//   layer <name> <reduction> <channels>
//   tensor <key> f32 <ndim> <d0> ... <offset>
//   end
// followed by raw little-endian float32 tensor data at the given offsets.
void save_extractor(const FeatureExtractor& fx, const std::string& path) {
    std::ostringstream manifest;
    manifest << "featarc 1\n";
    manifest << "norm_mean " << fx.norm_mean[0] << " " << fx.norm_mean[1] << " "
             << fx.norm_mean[2] << "\n";
    manifest << "norm_std " << fx.norm_std[0] << " " << fx.norm_std[1] << " " << fx.norm_std[2]
             << "\n";
    for (const auto& l : fx.layers)
        manifest << "layer " << l.name << " " << l.reduction << " " << l.channels << "\n";
    int64_t offset = 0;
    for (size_t i = 0; i < fx.params.size(); ++i) {
        const auto& t = fx.params.tensors[i];
        manifest << "tensor " << fx.params.names[i] << " f32 " << t.ndim();
        for (int d = 0; d < t.ndim(); ++d) manifest << " " << t.dim(d);
        manifest << " " << offset << "\n";
        offset += t.numel() * static_cast<int64_t>(sizeof(float));
    }
    manifest << "end\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weight archive: " + path);
    const std::string header = manifest.str();
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& t : fx.params.tensors)
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!out) throw std::runtime_error("failed writing weight archive: " + path);
}

FeatureExtractor load_pretrained_extractor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing weight archive: " + path);

    FeatureExtractor fx;
    fx.source = "pretrained:" + path;
    struct PendingTensor {
        std::string key;
        std::vector<int> shape;
        int64_t offset;
    };
    std::vector<PendingTensor> pending;

    std::string line;
    if (!std::getline(in, line) || line.rfind("featarc ", 0) != 0)
        throw std::runtime_error("not a weight archive: " + path);
    bool saw_end = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "end") {
            saw_end = true;
            break;
        } else if (tag == "norm_mean") {
            ls >> fx.norm_mean[0] >> fx.norm_mean[1] >> fx.norm_mean[2];
        } else if (tag == "norm_std") {
            ls >> fx.norm_std[0] >> fx.norm_std[1] >> fx.norm_std[2];
        } else if (tag == "layer") {
            FeatureLayer l;
            ls >> l.name >> l.reduction >> l.channels;
            if (!ls || l.reduction < 1 || l.channels < 1)
                throw std::runtime_error("malformed layer record in " + path + ": " + line);
            fx.layers.push_back(l);
        } else if (tag == "tensor") {
            PendingTensor t;
            std::string dtype;
            int ndim = 0;
            ls >> t.key >> dtype >> ndim;
            if (!ls || dtype != "f32" || ndim < 1 || ndim > 8)
                throw std::runtime_error("malformed tensor record in " + path + ": " + line);
            t.shape.resize(static_cast<size_t>(ndim));
            for (int d = 0; d < ndim; ++d) ls >> t.shape[static_cast<size_t>(d)];
            ls >> t.offset;
            if (!ls) throw std::runtime_error("malformed tensor record in " + path + ": " + line);
            pending.push_back(std::move(t));
        } else {
            throw std::runtime_error("unknown manifest record in " + path + ": " + line);
        }
    }
    if (!saw_end) throw std::runtime_error("truncated manifest in " + path);
    if (fx.layers.empty()) throw std::runtime_error("archive has no layers: " + path);

    const std::streampos data_start = in.tellg();
    for (const auto& t : pending) {
        Tensor<float> tensor(t.shape);
        in.seekg(data_start + static_cast<std::streamoff>(t.offset));
        in.read(reinterpret_cast<char*>(tensor.data()),
                static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
        if (!in)
            throw std::runtime_error("archive data truncated for tensor '" + t.key + "' in " +
                                     path);
        fx.params.add(t.key, std::move(tensor));
    }
    // Every registered layer must have its conv weights present with
    // matching channel counts.
    int expect_in = 3;
    for (const auto& l : fx.layers) {
        if (!fx.params.index.count(l.name + ".w") || !fx.params.index.count(l.name + ".b"))
            throw std::runtime_error("archive is missing tensors for layer '" + l.name + "' in " +
                                     path);
        const auto& w = fx.params.at(l.name + ".w");
        if (w.ndim() != 4 || w.dim(0) != l.channels || w.dim(1) != expect_in)
            throw std::runtime_error("tensor shape mismatch for layer '" + l.name + "': got " +
                                     shape_string(w.shape));
        expect_in = l.channels;
    }
    return fx;
}

FeatureExtractor make_extractor_from_selector(const std::string& selector) {
    if (selector.rfind("random:", 0) == 0)
        return make_random_extractor(std::stoull(selector.substr(7)));
    if (selector.rfind("pretrained:", 0) == 0)
        return load_pretrained_extractor(selector.substr(11));
    throw std::invalid_argument("feature selector must be random:<seed> or pretrained:<path>, got '" +
                                selector + "'");
}

template <typename T>
static Var<T> extractor_stack(Graph<T>& g, const FeatureExtractor& fx, Var<T> image,
                              const std::string& layer) {
    const FeatureLayer* target = fx.find_layer(layer);
    if (!target) throw std::invalid_argument("unknown feature layer: " + layer);
    // Replicate gray to RGB, then apply the archive's input normalization.
    Var<T> x = image;
    if (g.val(x).dim(0) == 1) x = concat_channels(g, {x, x, x});
    if (g.val(x).dim(0) != 3)
        throw std::invalid_argument("feature extraction expects 1- or 3-channel images");
    Tensor<T> scale({3}), shift({3});
    for (int c = 0; c < 3; ++c) {
        scale.v[static_cast<size_t>(c)] = T(1) / static_cast<T>(fx.norm_std[static_cast<size_t>(c)]);
        shift.v[static_cast<size_t>(c)] =
            -static_cast<T>(fx.norm_mean[static_cast<size_t>(c)]) /
            static_cast<T>(fx.norm_std[static_cast<size_t>(c)]);
    }
    x = channel_affine(g, x, std::move(scale), std::move(shift));
    for (const auto& l : fx.layers) {
        Var<T> w = g.constant(fx.params.at(l.name + ".w").template cast<T>());
        Var<T> b = g.constant(fx.params.at(l.name + ".b").template cast<T>());
        x = conv2d(g, x, w, b, /*stride=*/2, /*pad=*/1);
        x = leaky_relu(g, x, T(kLeakySlope));
        if (l.name == layer) return x;
    }
    throw std::logic_error("feature layer registry inconsistent for: " + layer);
}

template <typename T>
Var<T> extract_vectors_node(Graph<T>& g, const FeatureExtractor& fx, Var<T> image,
                            const std::string& layer, int subsample_limit,
                            uint64_t subsample_seed) {
    Var<T> act = extractor_stack(g, fx, image, layer);
    Var<T> rows = chw_to_rows(g, act);
    const int count = g.val(rows).dim(0);
    if (subsample_limit > 0 && count > subsample_limit) {
        std::vector<int> all(static_cast<size_t>(count));
        std::iota(all.begin(), all.end(), 0);
        SeededRng rng(derive_seed(subsample_seed, static_cast<uint64_t>(count)));
        for (int i = 0; i < subsample_limit; ++i) {
            const int j =
                i + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(count - i)));
            std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
        }
        std::vector<int> picked(all.begin(), all.begin() + subsample_limit);
        std::sort(picked.begin(), picked.end());
        rows = gather_rows(g, rows, std::move(picked));
    }
    return rows;
}

ContextVectors extract_context_vectors(const FeatureExtractor& fx, const Image& image,
                                       const std::string& layer) {
    Graph<float> g;
    Var<float> x = g.constant(image);
    Var<float> rows = extract_vectors_node(g, fx, x, layer, /*subsample_limit=*/0);
    const auto& rv = g.val(rows);
    ContextVectors out;
    out.count = rv.dim(0);
    out.dim = rv.dim(1);
    out.v = rv.v;
    out.layer = layer;
    return out;
}

template Var<float> extract_vectors_node<float>(Graph<float>&, const FeatureExtractor&,
                                                Var<float>, const std::string&, int, uint64_t);
template Var<double> extract_vectors_node<double>(Graph<double>&, const FeatureExtractor&,
                                                  Var<double>, const std::string&, int, uint64_t);

}  // namespace silt
