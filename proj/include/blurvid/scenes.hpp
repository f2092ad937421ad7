#pragma once

#include <cstdint>

#include "blurvid/image.hpp"

namespace blurvid {

// A sharp synthetic image and the binary mask of its moving object.
struct Scene {
  Image sharp;
  Image mask;
};

// Smoothly textured disk on a differently textured background. The center is
// given as fractions of the image extent. Textures are sums of low-frequency
// sinusoids drawn from `seed`.
Scene disk_on_texture(int height, int width, int channels, std::uint64_t seed,
                      double radius_fraction = 0.25, double center_x = 0.5,
                      double center_y = 0.5);

// Textured ellipse (semi-axes as fractions of the width) rotated by
// `orientation` radians about the image center.
Scene ellipse_on_texture(int height, int width, int channels, std::uint64_t seed,
                         double semi_major = 0.3, double semi_minor = 0.15,
                         double orientation = 0.4);

}  // namespace blurvid
