#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace stainkit {

/// Interval the real-valued representation of an 8-bit image lives in.
enum class Scale {
    Unit,      // [0, 1]
    Symmetric  // [-1, 1]
};

/// 8-bit interleaved RGB raster, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // length = width * height * 3

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {
        if (w < 1 || h < 1) throw std::invalid_argument("RgbImage: dimensions must be >= 1");
    }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    std::uint8_t& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    bool operator==(const RgbImage& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

/// Real-valued raster with an arbitrary channel count, row-major interleaved.
template <typename T>
struct PlanarImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<T> data;  // length = width * height * channels

    PlanarImage() = default;
    PlanarImage(int w, int h, int c)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, T(0)) {}

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    T& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    T at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

using FloatImage = PlanarImage<double>;
using FloatImage32 = PlanarImage<float>;

/// Round half away from zero; the single rounding convention used whenever a
/// real becomes an 8-bit value.
inline double round_half_away(double v) { return std::round(v); }

inline std::uint8_t quantize8(double v) {
    double r = std::round(v);
    if (r < 0.0) r = 0.0;
    if (r > 255.0) r = 255.0;
    return static_cast<std::uint8_t>(r);
}

FloatImage to_float(const RgbImage& image, Scale scale);
RgbImage from_float(const FloatImage& image, Scale scale);

FloatImage32 to_float32(const RgbImage& image, Scale scale);
RgbImage from_float32(const FloatImage32& image, Scale scale);

}  // namespace stainkit
