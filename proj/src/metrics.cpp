#include "stainkit/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace stainkit {

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Valid-mode separable filter of a single-channel image; output is
// (w - size + 1) x (h - size + 1).
FloatImage filter_valid(const FloatImage& img, const std::vector<double>& k) {
    const int size = static_cast<int>(k.size());
    const int ow = img.width - size + 1;
    const int oh = img.height - size + 1;
    // horizontal pass
    FloatImage tmp(ow, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        const double* row = img.data.data() + static_cast<std::size_t>(y) * img.width;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < size; ++i) acc += k[i] * row[x + i];
            tmp.data[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    // vertical pass
    FloatImage out(ow, oh, 1);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < size; ++i)
                acc += k[i] * tmp.data[static_cast<std::size_t>(y + i) * ow + x];
            out.data[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

FloatImage hadamard(const FloatImage& a, const FloatImage& b) {
    FloatImage out(a.width, a.height, 1);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

FloatImage channel_of(const RgbImage& img, int c) {
    FloatImage out(img.width, img.height, 1);
    for (std::size_t p = 0; p < img.pixel_count(); ++p)
        out.data[p] = static_cast<double>(img.data[p * 3 + c]);
    return out;
}

}  // namespace

double psnr(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("psnr: dimension mismatch");
    double se = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        se += d * d;
    }
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = se / static_cast<double>(a.data.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const FloatImage& a, const FloatImage& b, const SsimConfig& cfg) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: dimension mismatch");
    if (a.channels != 1 || b.channels != 1)
        throw std::invalid_argument("ssim: expected single-channel images");
    if (a.width < cfg.window || a.height < cfg.window)
        throw std::invalid_argument("ssim: image smaller than window");

    const auto kernel = gaussian_kernel(cfg.window, cfg.sigma);
    const double c1 = cfg.k1 * cfg.dynamic_range * cfg.k1 * cfg.dynamic_range;
    const double c2 = cfg.k2 * cfg.dynamic_range * cfg.k2 * cfg.dynamic_range;

    const FloatImage mu_a = filter_valid(a, kernel);
    const FloatImage mu_b = filter_valid(b, kernel);
    const FloatImage m_aa = filter_valid(hadamard(a, a), kernel);
    const FloatImage m_bb = filter_valid(hadamard(b, b), kernel);
    const FloatImage m_ab = filter_valid(hadamard(a, b), kernel);

    double acc = 0.0;
    const std::size_t n = mu_a.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double ma = mu_a.data[i], mb = mu_b.data[i];
        const double va = m_aa.data[i] - ma * ma;
        const double vb = m_bb.data[i] - mb * mb;
        const double cov = m_ab.data[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(n);
}

double ssim_rgb(const RgbImage& a, const RgbImage& b, const SsimConfig& cfg) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim_rgb: dimension mismatch");
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) acc += ssim(channel_of(a, c), channel_of(b, c), cfg);
    return acc / 3.0;
}

FloatImage grayscale(const RgbImage& image, const GrayWeights& w) {
    FloatImage out(image.width, image.height, 1);
    for (std::size_t p = 0; p < image.pixel_count(); ++p) {
        out.data[p] = w.r * image.data[p * 3 + 0] +
                      w.g * image.data[p * 3 + 1] +
                      w.b * image.data[p * 3 + 2];
    }
    return out;
}

FloatImage linear_stretch(const FloatImage& image) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : image.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    FloatImage out(image.width, image.height, image.channels);
    if (hi == lo) return out;  // constant image -> all zeros
    const double scale = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < image.data.size(); ++i)
        out.data[i] = (image.data[i] - lo) * scale;
    return out;
}

double ssim_source(const RgbImage& normalized, const RgbImage& source, const SsimConfig& cfg) {
    return ssim(linear_stretch(grayscale(normalized)), linear_stretch(grayscale(source)), cfg);
}

}  // namespace stainkit
