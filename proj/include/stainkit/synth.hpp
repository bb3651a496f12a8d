#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stainkit/image.hpp"
#include "stainkit/train.hpp"

namespace stainkit {

/// Closed-form per-pixel color map used as the distillation teacher.
struct ColorTransform {
    enum class Kind { Identity, LinearMatrix, PerChannelGamma, Composed };

    Kind kind = Kind::Identity;
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();  // LinearMatrix
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();      // LinearMatrix
    Eigen::Vector3d gamma = Eigen::Vector3d::Ones();       // PerChannelGamma, in [0.4, 2.5]
    std::vector<ColorTransform> parts;                     // Composed, applied in order

    static ColorTransform identity();
    static ColorTransform linear(const Eigen::Matrix3d& m,
                                 const Eigen::Vector3d& offset = Eigen::Vector3d::Zero());
    static ColorTransform per_channel_gamma(const Eigen::Vector3d& exponents);
    static ColorTransform composed(std::vector<ColorTransform> parts);

    /// Parses CLI teacher specs: "identity", "gamma:a,b,c",
    /// "matrix:m00,...,m22[,o0,o1,o2]".
    static ColorTransform parse(const std::string& spec);

    Eigen::Vector3d apply_rgb(const Eigen::Vector3d& rgb) const;  // real 0..255 in/out

    std::string to_json() const;
    static ColorTransform from_json(const std::string& text);
};

RgbImage apply_transform(const ColorTransform& t, const RgbImage& image);

/// Parameters of the synthetic "cell patch" renderer: elliptical dark nuclei
/// with lighter cytoplasm halos on a bright noisy background.
struct SynthSceneConfig {
    int width = 128;
    int height = 128;
    int min_cells = 6;
    int max_cells = 14;
    std::array<std::uint8_t, 3> nucleus_color = {72, 48, 110};
    std::array<std::uint8_t, 3> cytoplasm_color = {180, 150, 200};
    std::array<std::uint8_t, 3> background_color = {235, 228, 238};
    double noise_amplitude = 8.0;
    std::uint64_t seed = 0;
};

RgbImage render_scene(const SynthSceneConfig& cfg);

/// Renders n_train + n_val scenes, writes (source, teacher(source)) PNG
/// pairs plus manifest.jsonl and teacher.json under out_dir.
PairedDataset generate_dataset(const SynthSceneConfig& scene_cfg, const ColorTransform& teacher,
                               int n_train, int n_val, const std::string& out_dir);

}  // namespace stainkit
