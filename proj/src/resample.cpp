#include "blurvid/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace blurvid {

namespace {

constexpr double kCubicA = -0.5;

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> make_taps(int in_size, int out_size) {
  std::vector<Taps> taps(out_size);
  const double step = out_size > 1 ? static_cast<double>(in_size - 1) / (out_size - 1) : 0.0;
  for (int o = 0; o < out_size; ++o) {
    const double src = o * step;
    const double base = std::floor(src);
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      const int offset = k - 1;
      taps[o].index[k] = std::clamp(static_cast<int>(base) + offset, 0, in_size - 1);
      taps[o].weight[k] = cubic_kernel(frac - offset);
    }
  }
  return taps;
}

}  // namespace

double cubic_kernel(double t) {
  const double x = std::abs(t);
  if (x <= 1.0) return ((kCubicA + 2.0) * x - (kCubicA + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((kCubicA * x - 5.0 * kCubicA) * x + 8.0 * kCubicA) * x - 4.0 * kCubicA;
  return 0.0;
}

Image resize_bicubic(const Image& img, int out_height, int out_width) {
  if (out_height < 2 || out_width < 2) {
    throw ShapeError("resample target " + std::to_string(out_height) + "x" +
                     std::to_string(out_width) + " is smaller than 2x2");
  }
  if (out_height == img.height() && out_width == img.width()) return img;

  const int c = img.channels();
  const auto row_taps = make_taps(img.height(), out_height);
  const auto col_taps = make_taps(img.width(), out_width);

  // Horizontal pass then vertical pass.
  std::vector<double> tmp(static_cast<std::size_t>(img.height()) * out_width * c, 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Taps& t = col_taps[x];
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += t.weight[k] * img.at(y, t.index[k], ch);
        tmp[(static_cast<std::size_t>(y) * out_width + x) * c + ch] = acc;
      }
    }
  }

  Image out(out_height, out_width, c);
  for (int y = 0; y < out_height; ++y) {
    const Taps& t = row_taps[y];
    for (int x = 0; x < out_width; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          acc += t.weight[k] * tmp[(static_cast<std::size_t>(t.index[k]) * out_width + x) * c + ch];
        }
        out.at(y, x, ch) = acc;
      }
    }
  }
  clamp_unit(out);
  return out;
}

Image resample_bicubic(const Image& img, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw InvalidArgument("resample factor must be positive and finite");
  }
  const int oh = static_cast<int>(std::lround(img.height() * factor));
  const int ow = static_cast<int>(std::lround(img.width() * factor));
  return resize_bicubic(img, oh, ow);
}

}  // namespace blurvid
