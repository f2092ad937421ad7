#pragma once

#include <cstdint>
#include <vector>

#include "blurvid/affine.hpp"
#include "blurvid/image.hpp"

namespace blurvid {

/// The optimized unknowns of one object: its appearance in the middle frame,
/// the static scene behind it, and its soft middle-frame mask.
struct ReferenceState {
  Image foreground;
  Image background;
  Image middle_mask;  // 1 channel

  // Throws ShapeError when extents or channel counts disagree.
  void validate() const;
  // Middle frame: mask * foreground + (1 - mask) * background.
  Image composite() const;
};

struct VideoClip {
  std::vector<Image> frames;  // frames[i-1] is frame i
  AffineParams params;
  int middle_index = 1;

  const Image& middle() const { return frames.at(middle_index - 1); }
};

// Frame i = M_i * F_i + (1 - M_i) * background where F_i, M_i are the
// foreground and mask read through step_transform(params, i - m).
VideoClip render_frames(const ReferenceState& state, const AffineParams& params, int n);

// Pixel-wise mean of the n rendered frames: the modeled blurred image.
Image blur_forward(const ReferenceState& state, const AffineParams& params, int n);

// Mean of the n propagated masks: the modeled alpha map.
Image blur_forward_mask(const Image& middle_mask, const AffineParams& params, int n);

struct SyntheticCase {
  Image blurred;
  Image alpha;
  ReferenceState state;
  VideoClip truth;
};

// Builds a test case from a sharp image and its middle-frame object mask:
// foreground is the sharp image inside the mask support, background is the
// sharp image outside with the object hole filled by iterative dilation. The
// truth clip is rendered, averaged, and perturbed by i.i.d. Gaussian noise of
// `noise_sigma` (clipped to [0,1]).
SyntheticCase synthesize_case(const Image& sharp, const Image& alpha_truth,
                              const AffineParams& params, int n, double noise_sigma,
                              std::uint64_t seed = 0);

// Fills pixels where `known` is 0 by repeatedly averaging known 8-neighbors.
Image fill_by_dilation(const Image& img, const Image& known);

}  // namespace blurvid
