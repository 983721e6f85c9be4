// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "test_support.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>

namespace silt::testing {

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;
}

Image smooth_image(int h, int w, uint64_t seed) {
    SeededRng rng(derive_seed(seed, 10));
    const double fy = 1.0 + rng.uniform() * 2.0, fx = 1.0 + rng.uniform() * 2.0;
    const double py = rng.uniform() * kTau, px = rng.uniform() * kTau;
    Image im({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = 0.5 + 0.2 * std::sin(kTau * fy * y / h + py + c) +
                                 0.2 * std::cos(kTau * fx * x / w + px - c);
                im.at(c, y, x) = static_cast<float>(std::clamp(v, 0.02, 0.98));
            }
    return im;
}

Image striped_image(int h, int w, uint64_t seed) {
    SeededRng rng(derive_seed(seed, 11));
    const int period = 4 + static_cast<int>(rng.uniform_index(5));
    Image im({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool on = ((c == 0 ? x : y) / period) % 2 == 0;
                const double grad = 0.3 * x / w + 0.2 * y / h;
                im.at(c, y, x) = static_cast<float>(std::clamp(on ? 0.75 + 0.2 * grad
                                                                  : 0.15 + 0.2 * grad,
                                                               0.0, 1.0));
            }
    return im;
}

Image shapes_image(int h, int w, uint64_t seed) {
    SeededRng rng(derive_seed(seed, 12));
    Image im({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                im.at(c, y, x) = static_cast<float>(0.2 + 0.4 * x / w + 0.1 * c);
    for (int k = 0; k < 4; ++k) {
        const int cy = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(h)));
        const int cx = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(w)));
        const int rad = 3 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(h / 4)));
        const float val = static_cast<float>(rng.uniform(0.05, 0.95));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= rad * rad)
                    for (int c = 0; c < 3; ++c) im.at(c, y, x) = val;
    }
    return im;
}

Image tiled_texture(int h, int w, int tile, uint64_t seed) {
    SeededRng rng(derive_seed(seed, 13));
    Image patch({3, tile, tile});
    for (auto& v : patch.v) v = static_cast<float>(rng.uniform(0.1, 0.9));
    // Mild smoothing keeps the tile natural-ish while the tiling stays exact.
    Image sm = patch;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < tile; ++y)
            for (int x = 0; x < tile; ++x) {
                float acc = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        acc += patch.at(c, (y + dy + tile) % tile, (x + dx + tile) % tile);
                sm.at(c, y, x) = acc / 9.0f;
            }
    Image im({3, h, w});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) im.at(c, y, x) = sm.at(c, y % tile, x % tile);
    return im;
}

Image noise_image(int h, int w, uint64_t seed) {
    SeededRng rng(derive_seed(seed, 14));
    Image im({3, h, w});
    for (auto& v : im.v) v = static_cast<float>(rng.uniform());
    return im;
}

Image desk_image(int k, int h, int w) {
    switch (k % 5) {
        case 0: return striped_image(h, w, 1);
        case 1: return shapes_image(h, w, 2);
        case 2: return smooth_image(h, w, 3);
        case 3: return tiled_texture(h, w, 8, 4);
        default: return shapes_image(h, w, 5);
    }
}

std::string make_temp_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const auto dir = std::filesystem::temp_directory_path() /
                     ("silt_" + tag + "_" + std::to_string(stamp) + "_" +
                      std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace silt::testing
