#include "stainkit/image.hpp"

namespace stainkit {

namespace {

template <typename T>
PlanarImage<T> to_float_impl(const RgbImage& image, Scale scale) {
    PlanarImage<T> out(image.width, image.height, 3);
    const std::size_t n = image.data.size();
    if (scale == Scale::Unit) {
        for (std::size_t i = 0; i < n; ++i)
            out.data[i] = static_cast<T>(image.data[i]) / T(255);
    } else {
        for (std::size_t i = 0; i < n; ++i)
            out.data[i] = T(2) * static_cast<T>(image.data[i]) / T(255) - T(1);
    }
    return out;
}

template <typename T>
RgbImage from_float_impl(const PlanarImage<T>& image, Scale scale) {
    if (image.channels != 3)
        throw std::invalid_argument("from_float: expected 3 channels");
    RgbImage out(image.width, image.height);
    const std::size_t n = image.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        double v = static_cast<double>(image.data[i]);
        if (scale == Scale::Unit) {
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            v *= 255.0;
        } else {
            v = v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v);
            v = (v + 1.0) * 0.5 * 255.0;
        }
        out.data[i] = quantize8(v);
    }
    return out;
}

}  // namespace

FloatImage to_float(const RgbImage& image, Scale scale) { return to_float_impl<double>(image, scale); }
RgbImage from_float(const FloatImage& image, Scale scale) { return from_float_impl(image, scale); }

FloatImage32 to_float32(const RgbImage& image, Scale scale) { return to_float_impl<float>(image, scale); }
RgbImage from_float32(const FloatImage32& image, Scale scale) { return from_float_impl(image, scale); }

}  // namespace stainkit
