#include "blurvid/metrics.hpp"

#include <array>
#include <cmath>

namespace blurvid {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

double mse_to_psnr(double mse) {
  if (mse == 0.0) return kPsnrInfinite;
  return 10.0 * std::log10(1.0 / mse);
}

// Separable 'valid' Gaussian filter of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::array<double, kWindow>& g) {
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * plane[static_cast<std::size_t>(y) * w + x + k];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  double acc = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    acc += d * d;
  }
  return mse_to_psnr(acc / static_cast<double>(da.size()));
}

double psnr_masked(const Image& a, const Image& b, const Image& region) {
  require_same_shape(a, b, "psnr_masked");
  require_same_extent(a, region, "psnr_masked region");
  double acc = 0.0;
  std::size_t count = 0;
  const int c = a.channels();
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (region.at(y, x) <= 0.5) continue;
      for (int ch = 0; ch < c; ++ch) {
        const double d = a.at(y, x, ch) - b.at(y, x, ch);
        acc += d * d;
      }
      count += c;
    }
  }
  if (count == 0) throw InvalidArgument("psnr_masked: empty region");
  return mse_to_psnr(acc / static_cast<double>(count));
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kWindow || a.width() < kWindow) {
    throw ShapeError("ssim: image smaller than the 11x11 window");
  }
  if (a == b) return 1.0;

  const auto g = gaussian_taps();
  const int h = a.height();
  const int w = a.width();
  const std::size_t n = a.pixel_count();

  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t p = 0; p < n; ++p) {
      x[p] = a.data()[p * a.channels() + ch];
      y[p] = b.data()[p * b.channels() + ch];
      xx[p] = x[p] * x[p];
      yy[p] = y[p] * y[p];
      xy[p] = x[p] * y[p];
    }
    const auto mx = filter_valid(x, h, w, g);
    const auto my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g);
    const auto syy = filter_valid(yy, h, w, g);
    const auto sxy = filter_valid(xy, h, w, g);

    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      const double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2);
      const double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
      acc += num / den;
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / a.channels();
}

Metrics compare(const Image& a, const Image& b) { return {psnr(a, b), ssim(a, b)}; }

}  // namespace blurvid
