#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stainkit/image.hpp"
#include "stainkit/pixelnet.hpp"

namespace stainkit {

/// Dense RGB -> RGB lookup cube baked from a fully 1x1 network. At size 256
/// the table enumerates every 8-bit color and application is exact; smaller
/// sizes interpolate trilinearly.
struct Lut3D {
    int size = 0;  // 33, 64, or 256 grid points per axis
    std::vector<std::uint8_t> table;  // size^3 * 3 bytes, indexed [r][g][b]

    static bool valid_size(int s) { return s == 33 || s == 64 || s == 256; }

    const std::uint8_t* entry(int r, int g, int b) const {
        return table.data() +
               ((static_cast<std::size_t>(r) * size + g) * size + b) * 3;
    }
};

Lut3D bake_lut(const PixelNet& net, int size);
RgbImage apply_lut(const Lut3D& lut, const RgbImage& image, int threads = 1);

/// Binary container: 16-byte magic+version header, 4-byte little-endian
/// size, then size^3 * 3 bytes r-major.
void save_lut(const Lut3D& lut, const std::string& path);
Lut3D load_lut(const std::string& path);

/// Text .cube export for interoperability with color-grading tools.
void save_cube(const Lut3D& lut, const std::string& path);

}  // namespace stainkit
