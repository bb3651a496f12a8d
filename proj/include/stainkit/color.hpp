#pragma once

#include <Eigen/Dense>

#include "stainkit/image.hpp"

namespace stainkit {

/// Optical-density raster (3 channels, values >= 0).
using OdImage = FloatImage;
/// Decorrelated log-LMS raster (channels l, alpha, beta).
using LabImage = FloatImage;

// RGB -> LMS mixing matrix of Reinhard's color transfer method, applied to
// RGB scaled to [0, 1].
inline const Eigen::Matrix3d& rgb_to_lms_matrix() {
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() <<
        0.3811, 0.5783, 0.0402,
        0.1967, 0.7244, 0.0782,
        0.0241, 0.1288, 0.8444).finished();
    return m;
}

// log-LMS -> l,alpha,beta decorrelation.
inline const Eigen::Matrix3d& lms_to_lab_matrix() {
    static const Eigen::Matrix3d m = (Eigen::Matrix3d() <<
        1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0),
        1.0 / std::sqrt(6.0), 1.0 / std::sqrt(6.0), -2.0 / std::sqrt(6.0),
        1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0).finished();
    return m;
}

constexpr double kDefaultI0 = 255.0;
// LMS values are clamped here before the log so black pixels stay finite.
constexpr double kLmsFloor = 1.0 / 255.0;

/// OD = -log10(max(I,1)/i0) for a single channel intensity.
inline double od_from_intensity(double intensity, double i0 = kDefaultI0) {
    return -std::log10(std::max(intensity, 1.0) / i0);
}
inline double intensity_from_od(double od, double i0 = kDefaultI0) {
    return i0 * std::pow(10.0, -od);
}

OdImage rgb_to_od(const RgbImage& image, double i0 = kDefaultI0);
RgbImage od_to_rgb(const OdImage& image, double i0 = kDefaultI0);

LabImage rgb_to_lab(const RgbImage& image);
RgbImage lab_to_rgb(const LabImage& image);

}  // namespace stainkit
