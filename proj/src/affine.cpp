#include "blurvid/affine.hpp"

#include <cmath>
#include <string>

namespace blurvid {

namespace {

// Homogeneous 3x3 form of an affine map; the last row stays (0, 0, 1) for
// params and (0, 0, 0) for derivatives.
using Mat3 = std::array<double, 9>;

Mat3 to_mat(const AffineParams& p) {
  const auto& t = p.theta;
  return {t[0], t[1], t[2], t[3], t[4], t[5], 0.0, 0.0, 1.0};
}

AffineParams from_mat(const Mat3& m) { return {{m[0], m[1], m[2], m[3], m[4], m[5]}}; }

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += a[i * 3 + k] * b[k * 3 + j];
      r[i * 3 + j] = acc;
    }
  }
  return r;
}

Mat3 add(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 9; ++i) r[i] = a[i] + b[i];
  return r;
}

constexpr Mat3 kIdentity{1, 0, 0, 0, 1, 0, 0, 0, 1};

Mat3 unit(int j) {
  Mat3 e{};
  e[(j / 3) * 3 + j % 3] = 1.0;
  return e;
}

// d(G^q) given dG: sum_a G^a dG G^(q-1-a).
Mat3 power_derivative(const Mat3& g, const Mat3& dg, int q) {
  std::vector<Mat3> powers(q);
  powers[0] = kIdentity;
  for (int a = 1; a < q; ++a) powers[a] = mul(powers[a - 1], g);
  Mat3 acc{};
  for (int a = 0; a < q; ++a) acc = add(acc, mul(mul(powers[a], dg), powers[q - 1 - a]));
  return acc;
}

}  // namespace

bool AffineParams::finite() const {
  for (double v : theta) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_invertible(const AffineParams& p) {
  if (!p.finite()) throw SingularTransformError("affine params contain non-finite entries");
  if (std::abs(p.determinant()) < kMinAbsDeterminant) {
    throw SingularTransformError("affine linear part is singular (|det| = " +
                                 std::to_string(std::abs(p.determinant())) + ")");
  }
}

double to_normalized(double pixel, int dim) { return 2.0 * pixel / (dim - 1) - 1.0; }
double to_pixel(double normalized, int dim) {
  const double p = (normalized + 1.0) * 0.5 * (dim - 1);
  // Snap round-off so integer-aligned grids read pixels exactly.
  const double r = std::nearbyint(p);
  return std::abs(p - r) < 1e-9 ? r : p;
}

SampleGrid grid_generate(const AffineParams& params, int height, int width) {
  if (height < 2 || width < 2) throw ShapeError("grid must be at least 2x2");
  SampleGrid g;
  g.height = height;
  g.width = width;
  g.xs.resize(static_cast<std::size_t>(height) * width);
  g.ys.resize(g.xs.size());
  const auto& t = params.theta;
  for (int y = 0; y < height; ++y) {
    const double yt = to_normalized(y, height);
    for (int x = 0; x < width; ++x) {
      const double xt = to_normalized(x, width);
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      g.xs[i] = t[0] * xt + t[1] * yt + t[2];
      g.ys[i] = t[3] * xt + t[4] * yt + t[5];
    }
  }
  return g;
}

SamplerJacobian::SamplerJacobian(const SampleGrid& grid, int src_height, int src_width)
    : out_h_(grid.height), out_w_(grid.width), src_h_(src_height), src_w_(src_width) {
  entries_.resize(grid.xs.size());
  for (std::size_t i = 0; i < grid.xs.size(); ++i) {
    const double px = to_pixel(grid.xs[i], src_width);
    const double py = to_pixel(grid.ys[i], src_height);
    const double fx0 = std::floor(px);
    const double fy0 = std::floor(py);
    const double fx = px - fx0;
    const double fy = py - fy0;
    Entry& e = entries_[i];
    // Coordinates far outside the view have no support; the guard also keeps
    // the integer conversion below in range.
    if (!(fx0 >= -1.0 && fx0 < src_width && fy0 >= -1.0 && fy0 < src_height)) {
      for (int k = 0; k < 4; ++k) {
        e.index[k] = -1;
        e.weight[k] = 0.0;
      }
      continue;
    }
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const int xs[2] = {x0, x0 + 1};
    const int ys[2] = {y0, y0 + 1};
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    for (int b = 0; b < 2; ++b) {
      for (int a = 0; a < 2; ++a) {
        const int k = b * 2 + a;
        const bool inside = xs[a] >= 0 && xs[a] < src_width && ys[b] >= 0 && ys[b] < src_height;
        e.index[k] = inside ? ys[b] * src_width + xs[a] : -1;
        e.weight[k] = inside ? wx[a] * wy[b] : 0.0;
      }
    }
  }
}

Image SamplerJacobian::apply(const Image& d_src) const {
  if (d_src.height() != src_h_ || d_src.width() != src_w_) {
    throw ShapeError("SamplerJacobian::apply: source size mismatch");
  }
  const int c = d_src.channels();
  Image out(out_h_, out_w_, c);
  auto src = d_src.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& e = entries_[i];
    for (int k = 0; k < 4; ++k) {
      if (e.index[k] < 0) continue;
      for (int ch = 0; ch < c; ++ch) {
        dst[i * c + ch] += e.weight[k] * src[static_cast<std::size_t>(e.index[k]) * c + ch];
      }
    }
  }
  return out;
}

void SamplerJacobian::apply_transpose(const Image& d_out, Image& d_src) const {
  if (d_out.height() != out_h_ || d_out.width() != out_w_ || d_src.height() != src_h_ ||
      d_src.width() != src_w_ || d_out.channels() != d_src.channels()) {
    throw ShapeError("SamplerJacobian::apply_transpose: shape mismatch");
  }
  const int c = d_out.channels();
  auto src = d_out.data();
  auto dst = d_src.data();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& e = entries_[i];
    for (int k = 0; k < 4; ++k) {
      if (e.index[k] < 0) continue;
      for (int ch = 0; ch < c; ++ch) {
        dst[static_cast<std::size_t>(e.index[k]) * c + ch] += e.weight[k] * src[i * c + ch];
      }
    }
  }
}

Image SamplerJacobian::apply_transpose(const Image& d_out) const {
  Image d_src(src_h_, src_w_, d_out.channels());
  apply_transpose(d_out, d_src);
  return d_src;
}

SamplerJacobian sample_grad_image(const SampleGrid& grid, int src_height, int src_width) {
  return SamplerJacobian(grid, src_height, src_width);
}

Image grid_sample(const Image& src, const SampleGrid& grid) {
  return SamplerJacobian(grid, src.height(), src.width()).apply(src);
}

CoordGradients sample_grad_coords(const Image& src, const SampleGrid& grid) {
  const int c = src.channels();
  const int sw = src.width();
  const int sh = src.height();
  CoordGradients g{Image(grid.height, grid.width, c), Image(grid.height, grid.width, c)};
  auto read = [&](int y, int x, int ch) {
    return (x >= 0 && x < sw && y >= 0 && y < sh) ? src.at(y, x, ch) : 0.0;
  };
  for (std::size_t i = 0; i < grid.xs.size(); ++i) {
    const double px = to_pixel(grid.xs[i], sw);
    const double py = to_pixel(grid.ys[i], sh);
    const double fx0 = std::floor(px);
    const double fy0 = std::floor(py);
    if (!(fx0 >= -1.0 && fx0 < sw && fy0 >= -1.0 && fy0 < sh)) continue;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const double fx = px - fx0;
    const double fy = py - fy0;
    // Pixel floor(x) carries g = -1 and floor(x)+1 carries g = +1.
    for (int ch = 0; ch < c; ++ch) {
      const double v00 = read(y0, x0, ch);
      const double v01 = read(y0, x0 + 1, ch);
      const double v10 = read(y0 + 1, x0, ch);
      const double v11 = read(y0 + 1, x0 + 1, ch);
      g.dx.data()[i * c + ch] = (1.0 - fy) * (v01 - v00) + fy * (v11 - v10);
      g.dy.data()[i * c + ch] = (1.0 - fx) * (v10 - v00) + fx * (v11 - v01);
    }
  }
  return g;
}

AffineParams invert(const AffineParams& p) {
  require_invertible(p);
  const double det = p.determinant();
  const double a = p.theta[0], b = p.theta[1], c = p.theta[3], d = p.theta[4];
  const double i11 = d / det, i12 = -b / det, i21 = -c / det, i22 = a / det;
  const double tx = p.theta[2], ty = p.theta[5];
  return {{i11, i12, -(i11 * tx + i12 * ty), i21, i22, -(i21 * tx + i22 * ty)}};
}

AffineParams compose(const AffineParams& a, const AffineParams& b) {
  return from_mat(mul(to_mat(a), to_mat(b)));
}

AffineParams step_transform(const AffineParams& p, int k) {
  if (k == 0) return AffineParams::identity();
  const Mat3 base = to_mat(k > 0 ? p : invert(p));
  Mat3 acc = base;
  for (int i = 1; i < std::abs(k); ++i) acc = mul(base, acc);
  return from_mat(acc);
}

std::array<AffineVector, 6> step_transform_jacobian(const AffineParams& p, int k) {
  std::array<AffineVector, 6> jac{};
  if (k == 0) return jac;
  const Mat3 h = to_mat(p);
  const int q = std::abs(k);
  const Mat3 g = k > 0 ? h : to_mat(invert(p));
  for (int j = 0; j < 6; ++j) {
    const Mat3 dh = unit(j);
    // d(H^-1) = -H^-1 dH H^-1
    Mat3 dg = k > 0 ? dh : mul(mul(g, dh), g);
    if (k < 0) {
      for (double& v : dg) v = -v;
    }
    const Mat3 d = power_derivative(g, dg, q);
    for (int e = 0; e < 6; ++e) jac[j][e] = d[e];
  }
  return jac;
}

void require_odd_frame_count(int n) {
  if (n < 1 || n % 2 == 0) {
    throw InvalidArgument("frame count must be odd and >= 1, got " + std::to_string(n));
  }
}

}  // namespace blurvid
