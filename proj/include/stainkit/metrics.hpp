#pragma once

#include <array>

#include "stainkit/image.hpp"

namespace stainkit {

/// SSIM constants of the reference formulation: 11x11 Gaussian window,
/// sigma 1.5, k1 = 0.01, k2 = 0.03, 8-bit dynamic range.
struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

/// BT.601 luma weights; the grayscale convention used by ssim_source.
struct GrayWeights {
    double r = 0.299;
    double g = 0.587;
    double b = 0.114;
};

/// 10*log10(255^2 / MSE); +inf for identical images.
double psnr(const RgbImage& a, const RgbImage& b);

/// Mean SSIM over valid window positions of two single-channel images with
/// values in [0, dynamic_range].
double ssim(const FloatImage& a, const FloatImage& b, const SsimConfig& cfg = {});

/// Mean of per-channel SSIM over R, G, B (the "SSIM Target" aggregation).
double ssim_rgb(const RgbImage& a, const RgbImage& b, const SsimConfig& cfg = {});

FloatImage grayscale(const RgbImage& image, const GrayWeights& weights = {});

/// Affine map of a single-channel image onto [0, 255]; constant images map
/// to all zeros.
FloatImage linear_stretch(const FloatImage& image);

/// SSIM between grayscale + linearly stretched versions of both images
/// (the "SSIM Source" information-preservation metric).
double ssim_source(const RgbImage& normalized, const RgbImage& source, const SsimConfig& cfg = {});

}  // namespace stainkit
