#include "blurvid/regularization.hpp"

#include <cmath>

namespace blurvid {

TvVariant parse_tv_variant(const std::string& name) {
  if (name == "L0" || name == "l0") return TvVariant::L0;
  if (name == "L1" || name == "l1") return TvVariant::L1;
  if (name == "L2" || name == "l2") return TvVariant::L2;
  throw InvalidArgument("unknown TV variant '" + name + "' (expected L0, L1 or L2)");
}

std::string to_string(TvVariant v) {
  switch (v) {
    case TvVariant::L0:
      return "L0";
    case TvVariant::L1:
      return "L1";
    case TvVariant::L2:
      return "L2";
  }
  return "L0";
}

void RegWeights::validate() const {
  for (double w : {w_tv, w_alpha, w_l, w_t}) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("regularization weights must be finite and >= 0");
  }
}

double tv_penalty(double d, const TvNorm& norm) {
  switch (norm.variant) {
    case TvVariant::L0: {
      const double a = std::abs(d);
      return a <= norm.epsilon ? (d * d) / (norm.epsilon * norm.epsilon) : 1.0;
    }
    case TvVariant::L1:
      return std::abs(d);
    case TvVariant::L2:
      return d * d;
  }
  return 0.0;
}

double tv_penalty_derivative(double d, const TvNorm& norm) {
  switch (norm.variant) {
    case TvVariant::L0:
      return std::abs(d) <= norm.epsilon ? 2.0 * d / (norm.epsilon * norm.epsilon) : 0.0;
    case TvVariant::L1:
      return sign0(d);
    case TvVariant::L2:
      return 2.0 * d;
  }
  return 0.0;
}

double tv_value(const Image& img, const TvNorm& norm) {
  const int h = img.height();
  const int w = img.width();
  const int c = img.channels();
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        const double v = img.at(y, x, ch);
        if (x + 1 < w) total += tv_penalty(img.at(y, x + 1, ch) - v, norm);
        if (y + 1 < h) total += tv_penalty(img.at(y + 1, x, ch) - v, norm);
      }
    }
  }
  return total;
}

Image tv_grad(const Image& img, const TvNorm& norm) {
  const int h = img.height();
  const int w = img.width();
  const int c = img.channels();
  Image g(h, w, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        const double v = img.at(y, x, ch);
        if (x + 1 < w) {
          const double d = tv_penalty_derivative(img.at(y, x + 1, ch) - v, norm);
          g.at(y, x + 1, ch) += d;
          g.at(y, x, ch) -= d;
        }
        if (y + 1 < h) {
          const double d = tv_penalty_derivative(img.at(y + 1, x, ch) - v, norm);
          g.at(y + 1, x, ch) += d;
          g.at(y, x, ch) -= d;
        }
      }
    }
  }
  return g;
}

double affine_matrix_penalty(const AffineParams& params, const RegWeights& weights) {
  const auto& t = params.theta;
  const double l = (t[0] - 1.0) * (t[0] - 1.0) + t[1] * t[1] + t[3] * t[3] +
                   (t[4] - 1.0) * (t[4] - 1.0);
  const double tr = t[2] * t[2] + t[5] * t[5];
  return weights.w_l * l + weights.w_t * tr;
}

double alpha_residual(const Image& predicted_alpha, const Image& alpha) {
  require_same_shape(predicted_alpha, alpha, "alpha residual");
  double acc = 0.0;
  auto a = predicted_alpha.data();
  auto b = alpha.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

double affine_prior_value(const AffineParams& params, const RegWeights& weights,
                          const Image& predicted_alpha, const Image& alpha) {
  return affine_matrix_penalty(params, weights) +
         weights.w_alpha * alpha_residual(predicted_alpha, alpha);
}

AffinePriorGrad affine_prior_grad(const AffineParams& params, const RegWeights& weights,
                                  const Image& predicted_alpha, const Image& alpha) {
  require_same_shape(predicted_alpha, alpha, "affine prior");
  AffinePriorGrad g;
  const auto& t = params.theta;
  g.d_params = {2.0 * weights.w_l * (t[0] - 1.0), 2.0 * weights.w_l * t[1], 2.0 * weights.w_t * t[2],
                2.0 * weights.w_l * t[3],         2.0 * weights.w_l * (t[4] - 1.0),
                2.0 * weights.w_t * t[5]};
  g.d_predicted_alpha = Image(alpha.height(), alpha.width(), alpha.channels());
  auto a = predicted_alpha.data();
  auto b = alpha.data();
  auto d = g.d_predicted_alpha.data();
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = weights.w_alpha * sign0(a[i] - b[i]);
  return g;
}

}  // namespace blurvid
