#pragma once

#include <vector>

#include "blurvid/affine.hpp"
#include "blurvid/image.hpp"

namespace blurvid {

// Soft per-pixel foreground coverage over the exposure (1 channel, [0,1]).
// Throws ShapeError unless the map is single-channel and InvalidArgument when
// a value falls outside [0,1].
void require_alpha_map(const Image& alpha);

// Binary mask of the middle frame: 1 where alpha >= 0.5, else 0.
Image middle_mask(const Image& alpha);

// Masks of frames 1..n: frame i is the middle mask read through
// step_transform(params, i - m). Out-of-view content decays to 0.
std::vector<Image> propagate_masks(const Image& middle, const AffineParams& params, int n);

// Temporal average of the n propagated masks.
Image synth_alpha(const Image& middle_truth, const AffineParams& params, int n);

}  // namespace blurvid
