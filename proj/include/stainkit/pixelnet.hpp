#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stainkit/image.hpp"

namespace stainkit {

struct LayerSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;  // 1 or 3
};

struct PixelNetConfig {
    std::vector<LayerSpec> layers;
    int hidden_width = 32;

    /// Default shape: 3 -> hidden -> hidden -> 3, all 1x1.
    static PixelNetConfig standard(int hidden_width = 32);

    void validate() const;  // throws on a broken channel chain
    bool fully_pointwise() const;
};

/// The color-mapping network: a stack of convolutions with ReLU between
/// layers, a linear final layer, and outputs clamped to [-1, 1]. The default
/// configuration is three 1x1 convolutions totalling 1283 parameters.
struct PixelNet {
    struct Layer {
        LayerSpec spec;
        // out x (in * k * k); column index (i*k + ky)*k + kx so a row-major
        // dump is ordered (out, in, ky, kx)
        Eigen::MatrixXd weights;
        Eigen::VectorXd bias;
    };

    PixelNetConfig config;
    std::vector<Layer> layers;

    bool fully_pointwise() const { return config.fully_pointwise(); }

    std::string to_json() const;
    static PixelNet from_json(const std::string& text);
};

PixelNet pixelnet_init(const PixelNetConfig& config, std::uint64_t seed);

std::size_t param_count(const PixelNetConfig& config);
std::size_t param_count(const PixelNet& net);

/// Applies the network to an image in [-1, 1]; spatial size is preserved
/// (3x3 layers use reflection padding).
FloatImage forward(const PixelNet& net, const FloatImage& image, int threads = 1);
FloatImage32 forward(const PixelNet& net, const FloatImage32& image, int threads = 1);

/// Per-pixel evaluation; only valid for fully 1x1 networks.
Eigen::Vector3d forward_pixel(const PixelNet& net, const Eigen::Vector3d& rgb);

/// The four Table-II-style structures (N 1x1, M 3x3) with N + M = 3; 3x3
/// kernels replace the trailing layers first.
std::array<PixelNetConfig, 4> ablation_variants(int hidden_width = 32);

/// Parses "1x1:N,3x3:M" (N + M = 3) into the matching ablation structure.
PixelNetConfig parse_variant(const std::string& text, int hidden_width = 32);

}  // namespace stainkit
