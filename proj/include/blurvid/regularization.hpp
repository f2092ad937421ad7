#pragma once

#include <string>

#include "blurvid/affine.hpp"
#include "blurvid/image.hpp"

namespace blurvid {

enum class TvVariant { L0, L1, L2 };

TvVariant parse_tv_variant(const std::string& name);
std::string to_string(TvVariant v);

struct TvNorm {
  TvVariant variant = TvVariant::L0;
  double epsilon = 1.0;  // L0 relaxation width, (0, 1]
};

struct RegWeights {
  double w_tv = 1e-9;
  double w_alpha = 0.3;
  double w_l = 10.0;
  double w_t = 1.0;

  void validate() const;
};

// Penalty of one finite difference d under `norm`.
double tv_penalty(double d, const TvNorm& norm);
// Its derivative; 0 at the L1 kink and outside the L0 quadratic branch.
double tv_penalty_derivative(double d, const TvNorm& norm);

// Sum over pixels, channels and both directions of the penalty of forward
// differences. Differences past the last row/column are zero.
double tv_value(const Image& img, const TvNorm& norm);
Image tv_grad(const Image& img, const TvNorm& norm);

// w_l * ||A_l - E||^2 + w_t * ||A_t||^2 + w_alpha * sum |predicted - alpha|.
double affine_prior_value(const AffineParams& params, const RegWeights& weights,
                          const Image& predicted_alpha, const Image& alpha);

// Split of the prior into its parametric part and the alpha residual.
double affine_matrix_penalty(const AffineParams& params, const RegWeights& weights);
double alpha_residual(const Image& predicted_alpha, const Image& alpha);

struct AffinePriorGrad {
  AffineVector d_params{};
  Image d_predicted_alpha;  // w_alpha * sign(predicted - alpha), sign(0) = 0
};

AffinePriorGrad affine_prior_grad(const AffineParams& params, const RegWeights& weights,
                                  const Image& predicted_alpha, const Image& alpha);

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace blurvid
