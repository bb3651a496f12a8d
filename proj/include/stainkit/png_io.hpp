#pragma once

#include <string>

#include "stainkit/image.hpp"

namespace stainkit {

/// Loads an 8-bit RGB PNG. RGBA input has its alpha stripped with a warning
/// on stderr; grayscale, palette, and 16-bit files are rejected.
RgbImage load_image(const std::string& path);

/// Writes an 8-bit RGB PNG; load_image(save_image(x)) is the identity.
void save_image(const RgbImage& image, const std::string& path);

}  // namespace stainkit
