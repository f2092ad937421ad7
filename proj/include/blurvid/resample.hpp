#pragma once

#include "blurvid/image.hpp"

namespace blurvid {

// Catmull-Rom bicubic kernel (a = -0.5).
double cubic_kernel(double t);

// Resizes by `factor`: output dims are round(dim * factor). Sampling is
// corner-aligned (pixel 0 -> 0, last -> last), the same convention as the
// normalized affine coordinates, so affine params are unchanged by resizing.
// Source coordinates are clamped at the border; output is clamped to [0,1].
Image resample_bicubic(const Image& img, double factor);

// Same kernel and alignment, explicit target size.
Image resize_bicubic(const Image& img, int out_height, int out_width);

}  // namespace blurvid
