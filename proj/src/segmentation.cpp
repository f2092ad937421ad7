#include "blurvid/segmentation.hpp"

#include <algorithm>

namespace blurvid {

void require_alpha_map(const Image& alpha) {
  if (alpha.channels() != 1) throw ShapeError("alpha map must be single-channel");
  for (double v : alpha.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("alpha map values must lie in [0,1]");
  }
}

Image middle_mask(const Image& alpha) {
  require_alpha_map(alpha);
  Image mask(alpha.height(), alpha.width(), 1);
  auto src = alpha.data();
  auto dst = mask.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= 0.5 ? 1.0 : 0.0;
  return mask;
}

std::vector<Image> propagate_masks(const Image& middle, const AffineParams& params, int n) {
  require_odd_frame_count(n);
  if (n > 1) require_invertible(params);
  if (middle.channels() != 1) throw ShapeError("mask must be single-channel");
  std::vector<Image> masks;
  masks.reserve(n);
  for (int i = 1; i <= n; ++i) {
    const int k = frame_offset(i, n);
    if (k == 0) {
      masks.push_back(middle);
      continue;
    }
    Image m = grid_sample(middle, grid_generate(step_transform(params, k), middle.height(),
                                                middle.width()));
    clamp_unit(m);
    masks.push_back(std::move(m));
  }
  return masks;
}

Image synth_alpha(const Image& middle_truth, const AffineParams& params, int n) {
  const auto masks = propagate_masks(middle_truth, params, n);
  return clamped_unit(mean_of(masks));
}

}  // namespace blurvid
