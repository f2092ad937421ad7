#pragma once

#include <array>
#include <vector>

#include "blurvid/image.hpp"

namespace blurvid {

// Entries in row order: t11 t12 t13 t21 t22 t23.
using AffineVector = std::array<double, 6>;

inline constexpr double kMinAbsDeterminant = 1e-6;

/// Six-parameter affine map in normalized coordinates,
///   (xs, ys) = [t11 t12; t21 t22] (xt, yt) + (t13, t23).
/// Maps a TARGET coordinate to the SOURCE coordinate it samples from, so
/// applying params to an image means reading the image through the map.
struct AffineParams {
  AffineVector theta{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static AffineParams identity() { return {}; }
  static AffineParams translation(double tx, double ty) { return {{1.0, 0.0, tx, 0.0, 1.0, ty}}; }
  static AffineParams from_linear(double a11, double a12, double a21, double a22, double tx = 0.0,
                                  double ty = 0.0) {
    return {{a11, a12, tx, a21, a22, ty}};
  }

  double linear(int r, int c) const { return theta[r * 3 + c]; }
  double trans(int r) const { return theta[r * 3 + 2]; }
  double determinant() const { return theta[0] * theta[4] - theta[1] * theta[3]; }
  bool finite() const;

  bool operator==(const AffineParams&) const = default;
};

// Throws SingularTransformError when |det(linear)| < kMinAbsDeterminant or
// any entry is non-finite.
void require_invertible(const AffineParams& p);

/// Source coordinates, one (x, y) pair per target pixel, normalized so that
/// pixel 0 sits at -1 and pixel dim-1 at +1.
struct SampleGrid {
  int height = 0;
  int width = 0;
  std::vector<double> xs;
  std::vector<double> ys;
};

double to_normalized(double pixel, int dim);
double to_pixel(double normalized, int dim);

SampleGrid grid_generate(const AffineParams& params, int height, int width);

// Bilinear read of `src` at every grid point; out-of-view support reads 0.
Image grid_sample(const Image& src, const SampleGrid& grid);

/// Jacobian of grid_sample with respect to the source pixels. Each output
/// pixel touches at most four source pixels with bilinear weights.
class SamplerJacobian {
 public:
  SamplerJacobian(const SampleGrid& grid, int src_height, int src_width);

  // d(out) for a source perturbation d(src).
  Image apply(const Image& d_src) const;
  // Accumulates J^T d_out into d_src (shape src_height x src_width x C).
  void apply_transpose(const Image& d_out, Image& d_src) const;
  Image apply_transpose(const Image& d_out) const;

  struct Entry {
    int index[4];  // source pixel index, -1 when out of view
    double weight[4];
  };
  const std::vector<Entry>& entries() const { return entries_; }
  int out_height() const { return out_h_; }
  int out_width() const { return out_w_; }

 private:
  int out_h_;
  int out_w_;
  int src_h_;
  int src_w_;
  std::vector<Entry> entries_;
};

SamplerJacobian sample_grad_image(const SampleGrid& grid, int src_height, int src_width);

/// d(out_i)/d(xs_i) and d(out_i)/d(ys_i) in SOURCE PIXEL units, per channel.
/// Multiply by (src_dim - 1) / 2 to obtain derivatives in normalized units.
struct CoordGradients {
  Image dx;
  Image dy;
};

CoordGradients sample_grad_coords(const Image& src, const SampleGrid& grid);

AffineParams invert(const AffineParams& p);

// Coordinate map of `a` applied after `b` is read through: x -> a(b(x)).
AffineParams compose(const AffineParams& a, const AffineParams& b);

// k-fold self composition for k > 0, identity for k = 0, |k|-fold
// composition of the inverse for k < 0.
AffineParams step_transform(const AffineParams& p, int k);

// d step_transform(p, k) / d theta_j for j = 0..5; row j holds the six
// derivative entries.
std::array<AffineVector, 6> step_transform_jacobian(const AffineParams& p, int k);

// Clip frames are 1-indexed; the reference is the middle frame m = (n+1)/2
// and frame i is step_transform(params, i - m) of it.
void require_odd_frame_count(int n);
inline int middle_index(int n) { return (n + 1) / 2; }
inline int frame_offset(int i, int n) { return i - middle_index(n); }

}  // namespace blurvid
