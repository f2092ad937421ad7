#pragma once

#include <limits>

#include "blurvid/image.hpp"

namespace blurvid {

struct Metrics {
  double psnr = 0.0;  // dB; +infinity for identical inputs
  double ssim = 0.0;
};

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

// 10*log10(1/MSE) with peak 1, MSE over all channels jointly.
double psnr(const Image& a, const Image& b);

// PSNR restricted to pixels where region > 0.5 (region is 1-channel, same extent).
double psnr_masked(const Image& a, const Image& b, const Image& region);

// Mean SSIM over all valid 11x11 Gaussian windows (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2, averaged over channels.
double ssim(const Image& a, const Image& b);

Metrics compare(const Image& a, const Image& b);

}  // namespace blurvid
