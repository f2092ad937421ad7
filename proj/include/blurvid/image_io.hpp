#pragma once

#include <filesystem>

#include "blurvid/image.hpp"

namespace blurvid {

// Reads an 8-bit PNG (gray, gray+alpha, RGB, RGBA or palette) or a binary
// PGM/PPM (P5/P6, maxval 255). Intensities are scaled to [0,1]. Any alpha
// channel in the file is dropped; grayscale stays 1 channel, color is 3.
Image load_image(const std::filesystem::path& path);

// Writes 8-bit PNG, or PGM/PPM when the extension is .pgm/.ppm/.pnm.
// Values are clamped to [0,1] and rounded to the nearest 8-bit level.
void save_image(const Image& img, const std::filesystem::path& path);

// Quantizes to the 8-bit levels a save/load round trip would produce.
Image quantize8(const Image& img);

}  // namespace blurvid
