#include <doctest.h>

#include <cmath>
#include <limits>

#include "blurvid/regularization.hpp"
#include "support.hpp"

using namespace blurvid;
using blurvid::testing::random_image;
using blurvid::testing::rel_err;

namespace {

const TvNorm kL0{TvVariant::L0, 1.0};
const TvNorm kL1{TvVariant::L1, 1.0};
const TvNorm kL2{TvVariant::L2, 1.0};

Image step_4x4() {
  Image img(4, 4, 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 2; x < 4; ++x) img.at(y, x) = 1.0;
  }
  return img;
}

// Forward differences of one pixel and its left/up neighbors that involve it.
std::vector<double> touching_differences(const Image& img, int y, int x, int ch) {
  std::vector<double> d;
  const double v = img.at(y, x, ch);
  if (x + 1 < img.width()) d.push_back(img.at(y, x + 1, ch) - v);
  if (y + 1 < img.height()) d.push_back(img.at(y + 1, x, ch) - v);
  if (x > 0) d.push_back(v - img.at(y, x - 1, ch));
  if (y > 0) d.push_back(v - img.at(y - 1, x, ch));
  return d;
}

double brute_prior(const AffineParams& p, const RegWeights& w, const Image& pa, const Image& a) {
  const auto& t = p.theta;
  double lin = 0.0;
  lin += (t[0] - 1.0) * (t[0] - 1.0);
  lin += t[1] * t[1];
  lin += t[3] * t[3];
  lin += (t[4] - 1.0) * (t[4] - 1.0);
  double res = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) res += std::abs(pa.data()[i] - a.data()[i]);
  return w.w_l * lin + w.w_t * (t[2] * t[2] + t[5] * t[5]) + w.w_alpha * res;
}

}  // namespace

TEST_SUITE("tv") {
  TEST_CASE("variant names round trip") {
    for (TvVariant v : {TvVariant::L0, TvVariant::L1, TvVariant::L2}) CHECK(parse_tv_variant(to_string(v)) == v);
    CHECK(parse_tv_variant("l1") == TvVariant::L1);
    CHECK_THROWS_AS(parse_tv_variant("L3"), InvalidArgument);
  }

  TEST_CASE("constant image has zero value and gradient") {
    const Image c(6, 5, 3, 0.37);
    for (TvNorm n : {kL0, kL1, kL2, TvNorm{TvVariant::L0, 0.01}}) {
      CHECK(tv_value(c, n) == 0.0);
      const Image g = tv_grad(c, n);
      for (double v : g.vec()) CHECK(v == 0.0);
    }
  }

  TEST_CASE("unit step under L0") {
    const Image img = step_4x4();
    // One horizontal difference of 1 per row.
    CHECK(tv_value(img, kL0) == doctest::Approx(4.0));
    CHECK(tv_value(img, TvNorm{TvVariant::L0, 0.25}) == 4.0);
    Image scaled = img;
    for (double& v : scaled.data()) v *= 0.5;
    CHECK(tv_value(scaled, kL0) == doctest::Approx(4 * 0.25));
  }

  TEST_CASE("L2 gradient on [0, 1, 0]") {
    // Images are at least 2x2; identical rows add no vertical differences.
    const Image img(2, 3, 1, std::vector<double>{0.0, 1.0, 0.0, 0.0, 1.0, 0.0});
    CHECK(tv_value(img, kL2) == 4.0);
    const Image g = tv_grad(img, kL2);
    for (int y = 0; y < 2; ++y) {
      CHECK(g.at(y, 0) == doctest::Approx(-2.0));
      CHECK(g.at(y, 1) == doctest::Approx(4.0));
      CHECK(g.at(y, 2) == doctest::Approx(-2.0));
    }
  }

  TEST_CASE("L1 subgradient is zero at a kink") {
    const Image img(2, 3, 1, std::vector<double>{0.2, 0.2, 0.7, 0.2, 0.2, 0.7});
    const Image g = tv_grad(img, kL1);
    CHECK(g.at(0, 0) == 0.0);
    CHECK(g.at(0, 1) == -1.0);
    CHECK(g.at(0, 2) == 1.0);
  }

  TEST_CASE("gradients match central differences away from branch boundaries") {
    const double h = 1e-5;
    for (TvNorm norm : {TvNorm{TvVariant::L0, 0.3}, TvNorm{TvVariant::L0, 1.0}, kL1, kL2}) {
      CAPTURE(to_string(norm.variant));
      CAPTURE(norm.epsilon);
      const Image img = random_image(7, 6, 3, 42);
      const Image g = tv_grad(img, norm);
      int checked = 0;
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          for (int ch = 0; ch < 3; ++ch) {
            bool near_boundary = false;
            for (double d : touching_differences(img, y, x, ch)) {
              if (std::abs(d) <= 2 * h) near_boundary = true;
              if (norm.variant == TvVariant::L0 && std::abs(std::abs(d) - norm.epsilon) <= 2 * h) near_boundary = true;
            }
            if (near_boundary) continue;
            Image plus = img, minus = img;
            plus.at(y, x, ch) += h;
            minus.at(y, x, ch) -= h;
            const double fd = (tv_value(plus, norm) - tv_value(minus, norm)) / (2 * h);
            const double an = g.at(y, x, ch);
            // Exact zeros (cancelling L1 signs) only see roundoff in the FD.
            if (an == 0.0) {
              CHECK(std::abs(fd) <= 1e-8);
            } else {
              CHECK(rel_err(an, fd) <= 1e-4);
            }
            ++checked;
          }
        }
      }
      CHECK(checked > 50);
    }
  }

  TEST_CASE("L0 value is bounded by two per pixel") {
    for (double eps : {1.0, 0.1, 1e-4}) {
      const Image img = random_image(9, 8, 1, 7);
      CHECK(tv_value(img, TvNorm{TvVariant::L0, eps}) <= 2.0 * 9 * 8);
    }
  }

  TEST_CASE("nonconstant images have positive value") {
    Image img(5, 5, 1, 0.5);
    img.at(2, 3) = 0.5 + 1e-6;
    for (TvNorm n : {kL0, kL1, kL2}) CHECK(tv_value(img, n) > 0.0);
  }

  TEST_CASE("L0 approaches the edge count as epsilon shrinks") {
    Image img(8, 8, 1);
    for (int y = 2; y < 6; ++y) {
      for (int x = 3; x < 7; ++x) img.at(y, x) = 1.0;
    }
    int edges = 0;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (x + 1 < 8) edges += img.at(y, x + 1) != img.at(y, x);
        if (y + 1 < 8) edges += img.at(y + 1, x) != img.at(y, x);
      }
    }
    CHECK(edges == 16);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1.0, 0.5, 0.1, 1e-3}) {
      const double v = tv_value(img, TvNorm{TvVariant::L0, eps});
      CHECK(std::abs(v - edges) <= std::abs(prev - edges));
      prev = v;
    }
    CHECK(prev == edges);
  }

  TEST_CASE("lowering contrast never raises L0") {
    const Image img = random_image(10, 10, 3, 8);
    for (double eps : {1.0, 0.3, 0.05}) {
      const TvNorm n{TvVariant::L0, eps};
      double prev = tv_value(img, n);
      for (double c : {0.9, 0.5, 0.2, 0.01}) {
        Image s = img;
        for (double& v : s.data()) v *= c;
        const double value = tv_value(s, n);
        CHECK(value <= prev + 1e-12);
        prev = value;
      }
    }
  }
}

TEST_SUITE("affine prior") {
  TEST_CASE("weights validate") {
    CHECK_NOTHROW(RegWeights{}.validate());
    CHECK_THROWS_AS((RegWeights{-1.0, 0.3, 10.0, 1.0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((RegWeights{0.0, std::nan(""), 10.0, 1.0}.validate()), InvalidArgument);
    const RegWeights d;
    CHECK(d.w_tv == 1e-9);
    CHECK(d.w_alpha == 0.3);
    CHECK(d.w_l == 10.0);
    CHECK(d.w_t == 1.0);
  }

  TEST_CASE("zero at the identity with matching alphas") {
    const Image a = random_image(6, 6, 1, 1);
    const RegWeights w;
    CHECK(affine_prior_value(AffineParams::identity(), w, a, a) == 0.0);
    const AffinePriorGrad g = affine_prior_grad(AffineParams::identity(), w, a, a);
    for (double v : g.d_params) CHECK(v == 0.0);
    for (double v : g.d_predicted_alpha.vec()) CHECK(v == 0.0);
  }

  TEST_CASE("translation only") {
    const Image a = random_image(6, 6, 1, 2);
    CHECK(affine_prior_value(AffineParams::translation(0.1, 0.0), RegWeights{}, a, a) == doctest::Approx(0.01));
  }

  TEST_CASE("linear part gradient") {
    const Image a(4, 4, 1);
    const AffineParams p = AffineParams::from_linear(1.1, 0.0, 0.0, 1.1);
    const AffinePriorGrad g = affine_prior_grad(p, RegWeights{}, a, a);
    CHECK(g.d_params[0] == doctest::Approx(2.0));
    CHECK(g.d_params[4] == doctest::Approx(2.0));
    CHECK(g.d_params[1] == 0.0);
    CHECK(g.d_params[2] == 0.0);
  }

  TEST_CASE("value matches term-by-term summation") {
    const RegWeights w{1e-9, 0.3, 10.0, 1.0};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Image pa = random_image(8, 7, 1, seed);
      const Image a = random_image(8, 7, 1, seed + 100);
      const Image th = random_image(2, 3, 1, seed + 200, -0.2, 0.2);
      AffineParams p;
      for (int j = 0; j < 6; ++j) p.theta[j] = th.data()[j] + ((j == 0 || j == 4) ? 1.0 : 0.0);
      CHECK(std::abs(affine_prior_value(p, w, pa, a) - brute_prior(p, w, pa, a)) <= 1e-12);
      CHECK(affine_prior_value(p, w, pa, a) ==
            doctest::Approx(affine_matrix_penalty(p, w) + w.w_alpha * alpha_residual(pa, a)).epsilon(1e-14));
    }
  }

  TEST_CASE("gradient matches central differences") {
    const RegWeights w{0.0, 0.3, 10.0, 1.0};
    const Image pa = random_image(5, 5, 1, 3);
    const Image a = random_image(5, 5, 1, 4);
    AffineParams p = AffineParams::from_linear(0.97, 0.04, -0.03, 1.05, 0.08, -0.06);
    const AffinePriorGrad g = affine_prior_grad(p, w, pa, a);
    const double h = 1e-6;
    for (int j = 0; j < 6; ++j) {
      AffineParams plus = p, minus = p;
      plus.theta[j] += h;
      minus.theta[j] -= h;
      const double fd = (affine_prior_value(plus, w, pa, a) - affine_prior_value(minus, w, pa, a)) / (2 * h);
      CHECK(rel_err(g.d_params[j], fd) <= 1e-6);
    }
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(g.d_predicted_alpha.data()[i] == w.w_alpha * sign0(pa.data()[i] - a.data()[i]));
    }
  }

  TEST_CASE("shape mismatch") {
    CHECK_THROWS_AS(affine_prior_value(AffineParams::identity(), RegWeights{}, Image(3, 3, 1), Image(3, 4, 1)),
                    ShapeError);
    CHECK_THROWS_AS(affine_prior_grad(AffineParams::identity(), RegWeights{}, Image(3, 3, 1), Image(4, 3, 1)),
                    ShapeError);
  }
}
