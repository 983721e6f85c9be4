// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "silt/image.hpp"
#include "test_support.hpp"

using namespace silt;
using namespace silt::testing;

namespace {

// Scalar-loop oracles, kept deliberately independent of the library paths.
double psnr_oracle(const Image& a, const Image& b) {
    double mse = 0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = static_cast<double>(a.v[i]) - b.v[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.v.size());
    if (mse <= 1e-20) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim_oracle(const Image& a, const Image& b) {
    const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
    double win[11][11];
    double wsum = 0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            const double dy = i - 5.0, dx = j - 5.0;
            win[i][j] = std::exp(-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5));
            wsum += win[i][j];
        }
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) win[i][j] /= wsum;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0;
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0;
        int count = 0;
        for (int y = 0; y + 11 <= h; ++y)
            for (int x = 0; x + 11 <= w; ++x) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int i = 0; i < 11; ++i)
                    for (int j = 0; j < 11; ++j) {
                        const double av = a.at(ch, y + i, x + j);
                        const double bv = b.at(ch, y + i, x + j);
                        ma += win[i][j] * av;
                        mb += win[i][j] * bv;
                        saa += win[i][j] * av * av;
                        sbb += win[i][j] * bv * bv;
                        sab += win[i][j] * av * bv;
                    }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        total += acc / count;
    }
    return total / c;
}

}  // namespace

TEST_CASE("png byte mapping and round trip") {
    const std::string dir = make_temp_dir("png");
    Image im({3, 5, 7});
    // exercise the endpoints and a mid value through the byte quantizer
    int k = 0;
    for (auto& v : im.v) v = static_cast<float>((k++ % 256) / 255.0);
    im.v[0] = 1.0f;   // byte 255
    im.v[1] = 0.0f;   // byte 0
    im.v[2] = 128.0f / 255.0f;

    const std::string p1 = dir + "/a.png";
    const std::string p2 = dir + "/b.png";
    save_png(im, p1);
    const Image back = load_png(p1);
    CHECK(back.shape == im.shape);
    CHECK(back.v[0] == doctest::Approx(1.0));
    CHECK(back.v[1] == doctest::Approx(0.0));
    CHECK(back.v[2] == doctest::Approx(128.0 / 255.0));

    // load -> save -> load is exact, and the two files are byte-identical
    save_png(back, p2);
    const Image back2 = load_png(p2);
    CHECK(back.v == back2.v);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(f1)), {});
    const std::string bytes2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(bytes1 == bytes2);
}

TEST_CASE("png gray images keep one channel") {
    const std::string dir = make_temp_dir("gray");
    Image gray({1, 9, 4});
    for (size_t i = 0; i < gray.v.size(); ++i) gray.v[i] = static_cast<float>(i % 200) / 255.0f;
    save_png(gray, dir + "/g.png");
    const Image back = load_png(dir + "/g.png");
    CHECK(back.dim(0) == 1);
    CHECK(back.v == gray.v);
}

TEST_CASE("png loader reports missing files") {
    CHECK_THROWS_WITH_AS(load_png("/nonexistent/file.png"),
                         doctest::Contains("cannot open image file"), std::runtime_error);
}

TEST_CASE("resampling identities") {
    const Image im = smooth_image(24, 20, 1);
    SUBCASE("t=1 is the identity") {
        const Image d = downsample(im, 1);
        const Image u = upsample_ut(im, 1);
        CHECK(std::memcmp(d.data(), im.data(), im.v.size() * 4) == 0);
        CHECK(std::memcmp(u.data(), im.data(), im.v.size() * 4) == 0);
    }
    SUBCASE("shapes follow the factor") {
        CHECK(downsample(im, 2).shape == std::vector<int>{3, 12, 10});
        CHECK(upsample_ut(im, 2).shape == std::vector<int>{3, 48, 40});
    }
    SUBCASE("non-divisible sizes are cropped first") {
        const Image odd = smooth_image(25, 21, 1);
        CHECK(downsample(odd, 2).shape == std::vector<int>{3, 12, 10});
    }
    SUBCASE("constants pass through") {
        Image flat({3, 16, 16}, 0.37f);
        for (float v : downsample(flat, 2).v) CHECK(v == doctest::Approx(0.37).epsilon(1e-5));
        for (float v : upsample_ut(flat, 2).v) CHECK(v == doctest::Approx(0.37).epsilon(1e-5));
    }
}

TEST_CASE("down-up consistency on smooth images") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        const Image im = smooth_image(64, 64, seed);
        const Image round = downsample(upsample_ut(im, 2), 2);
        double mae = 0;
        for (size_t i = 0; i < im.v.size(); ++i) mae += std::abs(im.v[i] - round.v[i]);
        mae /= static_cast<double>(im.v.size());
        CHECK(mae < 0.02);
    }
}

TEST_CASE("gaussian noise is seeded and has the configured scale") {
    const Image base({3, 256, 256}, 0.5f);
    DegradationConfig cfg;
    cfg.sigma_255 = 50;
    cfg.seed = 9;
    cfg.clip = false;
    const Image n1 = add_gaussian_noise(base, cfg);
    const Image n2 = add_gaussian_noise(base, cfg);
    CHECK(n1.v == n2.v);

    double mean = 0;
    for (size_t i = 0; i < n1.v.size(); ++i) mean += n1.v[i] - base.v[i];
    mean /= static_cast<double>(n1.v.size());
    double var = 0;
    for (size_t i = 0; i < n1.v.size(); ++i) {
        const double d = n1.v[i] - base.v[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n1.v.size());
    CHECK(std::sqrt(var) == doctest::Approx(50.0 / 255.0).epsilon(0.05));

    cfg.sigma_255 = 0;
    CHECK(add_gaussian_noise(base, cfg).v == base.v);

    cfg.sigma_255 = 50;
    cfg.clip = true;
    for (float v : add_gaussian_noise(base, cfg).v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("psnr endpoints and oracle agreement") {
    const Image a = noise_image(32, 32, 5);
    CHECK(psnr(a, a) == doctest::Approx(100.0));

    Image flat1({3, 32, 32}, 0.5f);
    Image flat2({3, 32, 32}, 0.6f);
    CHECK(psnr(flat1, flat2) == doctest::Approx(20.0).epsilon(1e-6));

    for (int k = 0; k < 20; ++k) {
        const Image x = noise_image(24 + k % 5, 30 - k % 7, 100 + k);
        const Image y = noise_image(24 + k % 5, 30 - k % 7, 200 + k);
        CHECK(psnr(x, y) == doctest::Approx(psnr_oracle(x, y)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(psnr(noise_image(8, 8, 0), noise_image(9, 8, 0)), std::invalid_argument);
}

TEST_CASE("ssim endpoints, symmetry and oracle agreement") {
    const Image a = shapes_image(32, 32, 1);
    CHECK(ssim(a, a) == doctest::Approx(1.0));

    // negative of a pattern that avoids mid-gray: structurally inverted
    Image pat({3, 32, 32});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) pat.at(c, y, x) = ((x / 4 + y / 4) % 2) ? 0.9f : 0.1f;
    Image neg = pat;
    for (auto& v : neg.v) v = 1.0f - v;
    const double s = ssim(pat, neg);
    CHECK(s < 0.5);
    CHECK(s == doctest::Approx(ssim_oracle(pat, neg)).epsilon(1e-9));

    for (int k = 0; k < 5; ++k) {
        const Image x = noise_image(20, 26, 300 + k);
        const Image y = smooth_image(20, 26, 400 + k);
        CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
        CHECK(ssim(x, y) == doctest::Approx(ssim_oracle(x, y)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(ssim(noise_image(10, 10, 0), noise_image(10, 10, 0)),
                    std::invalid_argument);
}

TEST_CASE("psnr and ssim strictly decrease with noise strength") {
    const Image clean = shapes_image(64, 64, 7);
    double prev_psnr = 1e9, prev_ssim = 2.0;
    for (double sigma : {10.0, 25.0, 50.0, 100.0}) {
        DegradationConfig cfg;
        cfg.sigma_255 = sigma;
        cfg.seed = 42;
        const Image noisy = add_gaussian_noise(clean, cfg);
        const double p = psnr(noisy, clean), s = ssim(noisy, clean);
        CHECK(p < prev_psnr);
        CHECK(s < prev_ssim);
        prev_psnr = p;
        prev_ssim = s;
    }
}

TEST_CASE("ensure_rgb replicates gray") {
    Image gray({1, 12, 12}, 0.25f);
    const Image rgb = ensure_rgb(gray);
    CHECK(rgb.dim(0) == 3);
    for (float v : rgb.v) CHECK(v == 0.25f);
}
