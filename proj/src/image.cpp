// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0

#include "silt/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

#include "silt/rng.hpp"

namespace silt {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void check_image(const Image& im, const char* op) {
    if (im.ndim() != 3 || (im.dim(0) != 1 && im.dim(0) != 3))
        throw std::invalid_argument(std::string(op) + ": expected CHW image with 1 or 3 channels, got " +
                                    shape_string(im.shape));
    if (im.dim(1) < 1 || im.dim(2) < 1)
        throw std::invalid_argument(std::string(op) + ": empty image");
}

}  // namespace

Image clamp01(Image im) {
    for (auto& v : im.v) v = std::min(1.0f, std::max(0.0f, v));
    return im;
}

Image ensure_rgb(const Image& im) {
    check_image(im, "ensure_rgb");
    if (im.dim(0) == 3) return im;
    Image out({3, im.dim(1), im.dim(2)});
    const int64_t hw = static_cast<int64_t>(im.dim(1)) * im.dim(2);
    for (int c = 0; c < 3; ++c)
        std::copy_n(im.v.begin(), hw, out.v.begin() + c * hw);
    return out;
}

Image load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open image file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported bit depth 16 in " + path);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported channel count " + std::to_string(channels) + " in " +
                                 path);
    }
    const size_t rowbytes = png_get_rowbytes(png, info);
    pixels.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image out({channels, static_cast<int>(h), static_cast<int>(w)});
    const int64_t hw = static_cast<int64_t>(h) * w;
    for (png_uint_32 y = 0; y < h; ++y)
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                out.v[static_cast<size_t>(c * hw + y * w + x)] =
                    static_cast<float>(pixels[y * rowbytes + x * channels + c]) / 255.0f;
    return out;
}

void save_png(const Image& im, const std::string& path) {
    check_image(im, "save_png");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write image file: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }
    const int c = im.dim(0), h = im.dim(1), w = im.dim(2);
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<size_t>(w) * c);
    const int64_t hw = static_cast<int64_t>(h) * w;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                const float v = im.v[static_cast<size_t>(ch * hw + static_cast<int64_t>(y) * w + x)];
                const float clamped = std::min(1.0f, std::max(0.0f, v));
                row[static_cast<size_t>(x) * c + ch] =
                    static_cast<png_byte>(std::lround(clamped * 255.0f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

namespace {

// Keys cubic, a = -0.5.
double keys(double t) {
    t = std::abs(t);
    if (t <= 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
    if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
    return 0.0;
}

struct ResampleTap {
    std::vector<int> start;       // first source index per output coordinate
    std::vector<int> count;       // taps per output coordinate
    std::vector<double> weights;  // flattened, normalized
    int max_taps = 0;
};

ResampleTap build_taps(int in, int out) {
    ResampleTap taps;
    taps.start.resize(static_cast<size_t>(out));
    taps.count.resize(static_cast<size_t>(out));
    const double scale = static_cast<double>(in) / out;
    const double support = std::max(1.0, scale);  // antialias when downscaling
    const double radius = 2.0 * support;
    for (int o = 0; o < out; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        int lo = static_cast<int>(std::ceil(src - radius));
        int hi = static_cast<int>(std::floor(src + radius));
        std::vector<double> w(static_cast<size_t>(hi - lo + 1));
        double sum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double k = keys((i - src) / support);
            w[static_cast<size_t>(i - lo)] = k;
            sum += k;
        }
        // Fold clamped edge taps together and normalize.
        taps.start[static_cast<size_t>(o)] = std::clamp(lo, 0, in - 1);
        const int first = taps.start[static_cast<size_t>(o)];
        std::vector<double> folded(static_cast<size_t>(std::clamp(hi, 0, in - 1) - first + 1), 0.0);
        for (int i = lo; i <= hi; ++i) {
            const int ci = std::clamp(i, 0, in - 1);
            folded[static_cast<size_t>(ci - first)] += w[static_cast<size_t>(i - lo)] / sum;
        }
        taps.count[static_cast<size_t>(o)] = static_cast<int>(folded.size());
        taps.max_taps = std::max(taps.max_taps, static_cast<int>(folded.size()));
        taps.weights.insert(taps.weights.end(), folded.begin(), folded.end());
    }
    return taps;
}

}  // namespace

Image resize_bicubic(const Image& im, int out_h, int out_w) {
    check_image(im, "resize_bicubic");
    if (out_h < 1 || out_w < 1)
        throw std::invalid_argument("resize_bicubic: degenerate target size");
    const int c = im.dim(0), ih = im.dim(1), iw = im.dim(2);
    if (out_h == ih && out_w == iw) return im;

    const ResampleTap tx = build_taps(iw, out_w);
    const ResampleTap ty = build_taps(ih, out_h);

    // Horizontal pass into (c, ih, out_w), then vertical.
    std::vector<double> tmp(static_cast<size_t>(c) * ih * out_w);
    for (int ch = 0; ch < c; ++ch) {
        const float* src = im.data() + static_cast<int64_t>(ch) * ih * iw;
        double* dst = tmp.data() + static_cast<int64_t>(ch) * ih * out_w;
        for (int y = 0; y < ih; ++y) {
            size_t woff = 0;
            for (int o = 0; o < out_w; ++o) {
                const int n = tx.count[static_cast<size_t>(o)];
                const int s = tx.start[static_cast<size_t>(o)];
                double acc = 0.0;
                for (int i = 0; i < n; ++i)
                    acc += tx.weights[woff + static_cast<size_t>(i)] *
                           src[static_cast<int64_t>(y) * iw + s + i];
                dst[static_cast<int64_t>(y) * out_w + o] = acc;
                woff += static_cast<size_t>(n);
            }
        }
    }
    Image out({c, out_h, out_w});
    for (int ch = 0; ch < c; ++ch) {
        const double* src = tmp.data() + static_cast<int64_t>(ch) * ih * out_w;
        float* dst = out.data() + static_cast<int64_t>(ch) * out_h * out_w;
        size_t woff = 0;
        for (int o = 0; o < out_h; ++o) {
            const int n = ty.count[static_cast<size_t>(o)];
            const int s = ty.start[static_cast<size_t>(o)];
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i)
                    acc += ty.weights[woff + static_cast<size_t>(i)] *
                           src[static_cast<int64_t>(s + i) * out_w + x];
                dst[static_cast<int64_t>(o) * out_w + x] =
                    static_cast<float>(std::min(1.0, std::max(0.0, acc)));
            }
            woff += static_cast<size_t>(n);
        }
    }
    return out;
}

Image crop_to_multiple(const Image& im, int t) {
    check_image(im, "crop_to_multiple");
    if (t < 1) throw std::invalid_argument("crop_to_multiple: factor must be >= 1");
    const int h = im.dim(1) / t * t, w = im.dim(2) / t * t;
    if (h < t || w < t) throw std::invalid_argument("image smaller than one downscale block");
    if (h == im.dim(1) && w == im.dim(2)) return im;
    Image out({im.dim(0), h, w});
    for (int c = 0; c < im.dim(0); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = im.at(c, y, x);
    return out;
}

Image downsample(const Image& im, int t) {
    check_image(im, "downsample");
    if (t < 1) throw std::invalid_argument("downsample: factor must be >= 1");
    if (t == 1) return im;
    const Image cropped = crop_to_multiple(im, t);
    return resize_bicubic(cropped, cropped.dim(1) / t, cropped.dim(2) / t);
}

Image upsample_ut(const Image& im, int t) {
    check_image(im, "upsample_ut");
    if (t < 1) throw std::invalid_argument("upsample_ut: factor must be >= 1");
    if (t == 1) return im;
    return resize_bicubic(im, im.dim(1) * t, im.dim(2) * t);
}

Image add_gaussian_noise(const Image& im, const DegradationConfig& cfg) {
    check_image(im, "add_gaussian_noise");
    if (cfg.sigma_255 < 0) throw std::invalid_argument("noise sigma must be nonnegative");
    if (cfg.sigma_255 == 0) return im;
    Image out = im;
    SeededRng rng(cfg.seed);
    const double sd = cfg.sigma_255 / 255.0;
    for (auto& v : out.v) v = static_cast<float>(v + rng.normal() * sd);
    if (cfg.clip) out = clamp01(std::move(out));
    return out;
}

double mse_value(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("metric shapes differ: " + shape_string(a.shape) + " vs " +
                                    shape_string(b.shape));
    double acc = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        const double d = static_cast<double>(a.v[i]) - b.v[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.v.size());
}

double psnr(const Image& a, const Image& b) {
    const double m = mse_value(a, b);
    if (m <= 1e-20) return 100.0;  // zero-MSE cap, keeps reports serializable
    return std::min(100.0, 10.0 * std::log10(1.0 / m));
}

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("ssim shapes differ: " + shape_string(a.shape) + " vs " +
                                    shape_string(b.shape));
    const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
    constexpr int kWin = 11;
    if (h < kWin || w < kWin)
        throw std::invalid_argument("ssim needs at least 11x11 images, got " +
                                    shape_string(a.shape));
    // Gaussian window, std 1.5, normalized.
    double g[kWin];
    double gsum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - (kWin - 1) / 2.0;
        g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        gsum += g[i];
    }
    for (double& v : g) v /= gsum;

    constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
    constexpr double kC2 = 0.03 * 0.03;

    const int oh = h - kWin + 1, ow = w - kWin + 1;
    auto filter = [&](const std::vector<double>& plane, std::vector<double>& out) {
        // separable valid filtering, horizontal then vertical
        std::vector<double> tmp(static_cast<size_t>(h) * ow);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int k = 0; k < kWin; ++k) acc += g[k] * plane[static_cast<size_t>(y) * w + x + k];
                tmp[static_cast<size_t>(y) * ow + x] = acc;
            }
        out.resize(static_cast<size_t>(oh) * ow);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int k = 0; k < kWin; ++k) acc += g[k] * tmp[static_cast<size_t>(y + k) * ow + x];
                out[static_cast<size_t>(y) * ow + x] = acc;
            }
    };

    double total = 0.0;
    const int64_t hw = static_cast<int64_t>(h) * w;
    std::vector<double> pa(static_cast<size_t>(hw)), pb(static_cast<size_t>(hw)),
        paa(static_cast<size_t>(hw)), pbb(static_cast<size_t>(hw)), pab(static_cast<size_t>(hw));
    std::vector<double> ma, mb, maa, mbb, mab;
    for (int ch = 0; ch < c; ++ch) {
        for (int64_t i = 0; i < hw; ++i) {
            const double av = a.v[static_cast<size_t>(ch * hw + i)];
            const double bv = b.v[static_cast<size_t>(ch * hw + i)];
            pa[static_cast<size_t>(i)] = av;
            pb[static_cast<size_t>(i)] = bv;
            paa[static_cast<size_t>(i)] = av * av;
            pbb[static_cast<size_t>(i)] = bv * bv;
            pab[static_cast<size_t>(i)] = av * bv;
        }
        filter(pa, ma);
        filter(pb, mb);
        filter(paa, maa);
        filter(pbb, mbb);
        filter(pab, mab);
        double acc = 0.0;
        for (size_t i = 0; i < ma.size(); ++i) {
            const double mu_a = ma[i], mu_b = mb[i];
            const double va = maa[i] - mu_a * mu_a;
            const double vb = mbb[i] - mu_b * mu_b;
            const double cov = mab[i] - mu_a * mu_b;
            acc += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                   ((mu_a * mu_a + mu_b * mu_b + kC1) * (va + vb + kC2));
        }
        total += acc / static_cast<double>(ma.size());
    }
    return total / c;
}

}  // namespace silt
