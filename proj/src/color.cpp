#include "stainkit/color.hpp"

#include <stdexcept>

namespace stainkit {

OdImage rgb_to_od(const RgbImage& image, double i0) {
    if (i0 <= 0.0) throw std::invalid_argument("rgb_to_od: i0 must be > 0");
    OdImage out(image.width, image.height, 3);
    const std::size_t n = image.data.size();
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = od_from_intensity(static_cast<double>(image.data[i]), i0);
    return out;
}

RgbImage od_to_rgb(const OdImage& image, double i0) {
    if (image.channels != 3) throw std::invalid_argument("od_to_rgb: expected 3 channels");
    RgbImage out(image.width, image.height);
    const std::size_t n = image.data.size();
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = quantize8(intensity_from_od(image.data[i], i0));
    return out;
}

LabImage rgb_to_lab(const RgbImage& image) {
    const Eigen::Matrix3d& to_lms = rgb_to_lms_matrix();
    const Eigen::Matrix3d& to_lab = lms_to_lab_matrix();
    LabImage out(image.width, image.height, 3);
    const Eigen::Index px = static_cast<Eigen::Index>(image.pixel_count());
    // zero intensities clamp to 1 (as in OD space) so the round trip
    // stays within one intensity level even for near-black pixels
    const Eigen::MatrixXd rgb =
        Eigen::Map<const Eigen::Matrix<std::uint8_t, 3, Eigen::Dynamic>>(image.data.data(), 3, px)
            .cast<double>()
            .cwiseMax(1.0) /
        255.0;
    const Eigen::MatrixXd lms = (to_lms * rgb).cwiseMax(kLmsFloor);
    constexpr double kInvLn10 = 0.43429448190325176;  // 1 / ln(10)
    Eigen::Map<Eigen::MatrixXd>(out.data.data(), 3, px).noalias() =
        to_lab * (lms.array().log() * kInvLn10).matrix();
    return out;
}

RgbImage lab_to_rgb(const LabImage& image) {
    if (image.channels != 3) throw std::invalid_argument("lab_to_rgb: expected 3 channels");
    // Exact algebraic inverses so the round trip stays within quantization.
    static const Eigen::Matrix3d lab_to_lms = lms_to_lab_matrix().inverse();
    static const Eigen::Matrix3d lms_to_rgb = rgb_to_lms_matrix().inverse();
    RgbImage out(image.width, image.height);
    const Eigen::Index px = static_cast<Eigen::Index>(image.pixel_count());
    const Eigen::MatrixXd log_lms =
        lab_to_lms * Eigen::Map<const Eigen::MatrixXd>(image.data.data(), 3, px);
    constexpr double kLn10 = 2.302585092994046;
    const Eigen::MatrixXd rgb =
        255.0 * (lms_to_rgb * (log_lms.array() * kLn10).exp().matrix());
    for (Eigen::Index i = 0; i < rgb.size(); ++i) out.data[i] = quantize8(rgb(i));
    return out;
}

}  // namespace stainkit
