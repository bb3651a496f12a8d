#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stainkit/color.hpp"
#include "stainkit/image.hpp"

namespace stainkit {

/// Per-channel mean and population std of an image in l-alpha-beta space.
struct ReinhardParams {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d std = Eigen::Vector3d::Ones();

    static constexpr double kStdFloor = 1e-6;

    std::string to_json() const;
    static ReinhardParams from_json(const std::string& text);
};

/// Two OD-space stain vectors (unit-norm, nonnegative columns; column 0 is
/// the hematoxylin-like stain) and robust per-stain maximum concentrations.
struct StainModel {
    Eigen::Matrix<double, 3, 2> stain_matrix = Eigen::Matrix<double, 3, 2>::Zero();
    Eigen::Vector2d max_concentrations = Eigen::Vector2d::Zero();

    std::string to_json(const std::string& method) const;
    static StainModel from_json(const std::string& text);
};

struct MacenkoConfig {
    double i0 = 255.0;
    double od_threshold = 0.15;    // beta in the original method
    double angle_percentile = 1.0; // alpha in the original method
    double conc_percentile = 99.0;
};

struct VahadaneConfig {
    double i0 = 255.0;
    double od_threshold = 0.15;
    double sparsity = 0.1;  // lambda on the L1 norm of the concentration rows
    int n_iterations = 100;
    std::size_t sample_limit = 100000;
    std::uint64_t seed = 0;
    double conc_percentile = 99.0;
};

ReinhardParams reinhard_fit(const RgbImage& reference);
RgbImage reinhard_normalize(const RgbImage& source, const ReinhardParams& ref_params);
RgbImage reinhard_normalize(const RgbImage& source, const ReinhardParams& ref_params,
                            const ReinhardParams& src_params);

StainModel macenko_fit(const RgbImage& image, const MacenkoConfig& cfg = {});

struct SnmfTrace {
    std::vector<double> objective;  // per-iteration penalized objective
};

struct SnmfResult {
    Eigen::Matrix<double, 3, 2> w;  // unit-norm columns
    Eigen::MatrixXd h;              // 2 x n, nonnegative
};

/// Sparse NMF core: min ||V - WH||_F^2 + lambda * sum|H| over W,H >= 0 via
/// alternating multiplicative updates, unit-norm W columns re-imposed each
/// iteration. The recorded objective is non-increasing.
SnmfResult snmf_factorize(const Eigen::MatrixXd& v, const VahadaneConfig& cfg = {},
                          SnmfTrace* trace = nullptr);

StainModel vahadane_fit(const RgbImage& image, const VahadaneConfig& cfg = {},
                        SnmfTrace* trace = nullptr);

RgbImage stain_normalize(const RgbImage& source, const StainModel& src_model,
                         const StainModel& tgt_model, double i0 = kDefaultI0);

/// Percentile with linear interpolation between order statistics; sorts a
/// copy of the input.
double percentile(std::vector<double> values, double pct);

enum class NormMethod { Reinhard, Macenko, Vahadane };

/// Normalizes `source` against each reference and returns the pairwise PSNR
/// matrix between the outputs (+inf on the diagonal and for identical
/// outputs).
Eigen::MatrixXd reference_sensitivity_report(const RgbImage& source,
                                             const std::vector<RgbImage>& references,
                                             NormMethod method);

}  // namespace stainkit
