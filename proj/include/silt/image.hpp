// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "silt/tensor.hpp"

namespace silt {

/// Images are CHW float tensors with 1 or 3 channels and values in [0,1].
/// Every public operation here keeps values inside that range.
using Image = Tensor<float>;

inline int image_channels(const Image& im) { return im.dim(0); }
inline int image_height(const Image& im) { return im.dim(1); }
inline int image_width(const Image& im) { return im.dim(2); }

/// 8-bit PNG (gray, palette, RGB; alpha is stripped). Byte v maps to v/255.
Image load_png(const std::string& path);
/// round(x*255) per sample; 1-channel images save as gray, 3-channel as RGB.
void save_png(const Image& im, const std::string& path);

/// Separable Keys bicubic (a = -0.5), antialiased when downscaling,
/// edge-clamped, output clamped to [0,1]. Identity when sizes match.
Image resize_bicubic(const Image& im, int out_h, int out_w);

/// Bicubic downscale by integer factor t; height/width are cropped to the
/// nearest multiple of t first (top-left anchored).
Image downsample(const Image& im, int t);
/// Bicubic upscale by integer factor t.
Image upsample_ut(const Image& im, int t);
/// The crop downsample() starts from, exposed so references can be aligned.
Image crop_to_multiple(const Image& im, int t);

struct DegradationConfig {
    int t = 1;               // downscale factor
    double sigma_255 = 0.0;  // noise std on the 0-255 scale
    uint64_t seed = 0;
    bool clip = true;
};

/// Adds seeded zero-mean Gaussian noise with std sigma_255/255 per sample.
Image add_gaussian_noise(const Image& im, const DegradationConfig& cfg);

/// 10*log10(1/MSE) on the [0,1] range, capped at 100 dB for identical inputs.
double psnr(const Image& a, const Image& b);

/// Mean local SSIM: 11x11 Gaussian window (std 1.5), K1=0.01, K2=0.03,
/// dynamic range 1, channels averaged. Needs min(H, W) >= 11.
double ssim(const Image& a, const Image& b);

double mse_value(const Image& a, const Image& b);

/// Replicates single-channel images to 3 channels; passes 3-channel through.
Image ensure_rgb(const Image& im);

Image clamp01(Image im);

}  // namespace silt
