#include "blurvid/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace blurvid {

namespace {

struct Wave {
  double fx, fy, phase, amplitude;
};

class Texture {
 public:
  // Periods between min_period and max_period pixels, total amplitude `contrast`.
  Texture(std::mt19937_64& rng, int waves, double min_period, double max_period, double base,
          double contrast)
      : base_(base) {
    auto uniform = [&rng](double lo, double hi) {
      return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    for (int i = 0; i < waves; ++i) {
      const double period = uniform(min_period, max_period);
      const double angle = uniform(0.0, std::numbers::pi);
      const double k = 2.0 * std::numbers::pi / period;
      waves_.push_back({k * std::cos(angle), k * std::sin(angle),
                        uniform(0.0, 2.0 * std::numbers::pi), contrast / waves});
    }
  }

  double operator()(double y, double x) const {
    double v = base_;
    for (const Wave& w : waves_) v += w.amplitude * std::sin(w.fx * x + w.fy * y + w.phase);
    return v;
  }

 private:
  double base_;
  std::vector<Wave> waves_;
};

// Fills pixels where inside(y, x) holds with `fg`, the rest with `bg`.
template <typename Inside>
Scene paint(int height, int width, int channels, std::uint64_t seed, Inside inside) {
  std::mt19937_64 rng(seed);
  std::vector<Texture> fg, bg;
  const std::array<double, 3> fg_base{0.70, 0.55, 0.35};
  const std::array<double, 3> bg_base{0.30, 0.40, 0.55};
  for (int c = 0; c < channels; ++c) {
    fg.emplace_back(rng, 3, 40.0, 90.0, channels == 1 ? 0.65 : fg_base[c], 0.45);
    bg.emplace_back(rng, 3, 20.0, 60.0, channels == 1 ? 0.35 : bg_base[c], 0.35);
  }
  // Textures are laid out on a 128-pixel reference so smaller renders are
  // downscaled copies of the same scene.
  const double unit = 128.0 / std::max(height, width);
  Scene s{Image(height, width, channels), Image(height, width, 1)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool in = inside(y, x);
      s.mask.at(y, x) = in ? 1.0 : 0.0;
      for (int c = 0; c < channels; ++c) {
        const double v = in ? fg[c](y * unit, x * unit) : bg[c](y * unit, x * unit);
        s.sharp.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return s;
}

}  // namespace

Scene disk_on_texture(int height, int width, int channels, std::uint64_t seed,
                      double radius_fraction, double center_x, double center_y) {
  const double cy = center_y * (height - 1);
  const double cx = center_x * (width - 1);
  const double r = radius_fraction * std::min(height, width);
  return paint(height, width, channels, seed, [=](int y, int x) {
    const double dy = y - cy;
    const double dx = x - cx;
    return dx * dx + dy * dy <= r * r;
  });
}

Scene ellipse_on_texture(int height, int width, int channels, std::uint64_t seed,
                         double semi_major, double semi_minor, double orientation) {
  const double cy = 0.5 * (height - 1);
  const double cx = 0.5 * (width - 1);
  const double a = semi_major * width;
  const double b = semi_minor * width;
  const double co = std::cos(orientation);
  const double so = std::sin(orientation);
  return paint(height, width, channels, seed, [=](int y, int x) {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = co * dx + so * dy;
    const double v = -so * dx + co * dy;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
  });
}

}  // namespace blurvid
