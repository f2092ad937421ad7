#include "blurvid/formation.hpp"

#include <random>

#include "blurvid/segmentation.hpp"

namespace blurvid {

void ReferenceState::validate() const {
  require_same_shape(foreground, background, "reference state foreground/background");
  require_same_extent(foreground, middle_mask, "reference state mask");
  if (middle_mask.channels() != 1) throw ShapeError("reference state mask must be single-channel");
}

Image ReferenceState::composite() const {
  validate();
  Image out = background;
  const int c = out.channels();
  const std::size_t n = out.pixel_count();
  for (std::size_t p = 0; p < n; ++p) {
    const double m = middle_mask.data()[p];
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t i = p * c + ch;
      out.data()[i] = m * foreground.data()[i] + (1.0 - m) * background.data()[i];
    }
  }
  return out;
}

VideoClip render_frames(const ReferenceState& state, const AffineParams& params, int n) {
  require_odd_frame_count(n);
  state.validate();
  if (n > 1) require_invertible(params);

  VideoClip clip;
  clip.params = params;
  clip.middle_index = middle_index(n);
  clip.frames.reserve(n);
  const auto masks = propagate_masks(state.middle_mask, params, n);
  const int h = state.foreground.height();
  const int w = state.foreground.width();
  const int c = state.foreground.channels();
  for (int i = 1; i <= n; ++i) {
    const int k = frame_offset(i, n);
    const Image fg = k == 0 ? state.foreground
                            : grid_sample(state.foreground,
                                          grid_generate(step_transform(params, k), h, w));
    const Image& m = masks[i - 1];
    Image frame(h, w, c);
    for (std::size_t p = 0; p < frame.pixel_count(); ++p) {
      const double mv = m.data()[p];
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t idx = p * c + ch;
        frame.data()[idx] = mv * fg.data()[idx] + (1.0 - mv) * state.background.data()[idx];
      }
    }
    clip.frames.push_back(std::move(frame));
  }
  return clip;
}

Image blur_forward(const ReferenceState& state, const AffineParams& params, int n) {
  const VideoClip clip = render_frames(state, params, n);
  return mean_of(clip.frames);
}

Image blur_forward_mask(const Image& middle_mask, const AffineParams& params, int n) {
  return synth_alpha(middle_mask, params, n);
}

Image fill_by_dilation(const Image& img, const Image& known) {
  require_same_extent(img, known, "fill_by_dilation");
  Image out = img;
  std::vector<char> have(img.pixel_count());
  std::size_t missing = 0;
  for (std::size_t p = 0; p < have.size(); ++p) {
    have[p] = known.data()[p] > 0.5;
    if (!have[p]) ++missing;
  }
  if (missing == have.size()) throw InvalidArgument("fill_by_dilation: nothing known");

  const int h = img.height();
  const int w = img.width();
  const int c = img.channels();
  while (missing > 0) {
    std::vector<char> next = have;
    Image updated = out;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (have[p]) continue;
        int count = 0;
        std::vector<double> acc(c, 0.0);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy;
            const int xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            if (!have[static_cast<std::size_t>(yy) * w + xx]) continue;
            for (int ch = 0; ch < c; ++ch) acc[ch] += out.at(yy, xx, ch);
            ++count;
          }
        }
        if (count == 0) continue;
        for (int ch = 0; ch < c; ++ch) updated.at(y, x, ch) = acc[ch] / count;
        next[p] = 1;
        --missing;
      }
    }
    out = std::move(updated);
    have = std::move(next);
  }
  return out;
}

SyntheticCase synthesize_case(const Image& sharp, const Image& alpha_truth,
                              const AffineParams& params, int n, double noise_sigma,
                              std::uint64_t seed) {
  require_same_extent(sharp, alpha_truth, "synthesize_case");
  require_alpha_map(alpha_truth);
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be >= 0");
  require_odd_frame_count(n);

  Image region(alpha_truth.height(), alpha_truth.width(), 1);
  bool any = false;
  for (std::size_t p = 0; p < region.pixel_count(); ++p) {
    region.data()[p] = alpha_truth.data()[p] > 0.0 ? 1.0 : 0.0;
    any = any || region.data()[p] > 0.0;
  }
  if (!any) throw InvalidArgument("degenerate alpha: mask is all zero");

  Image outside(region.height(), region.width(), 1);
  bool any_outside = false;
  for (std::size_t p = 0; p < region.pixel_count(); ++p) {
    outside.data()[p] = 1.0 - region.data()[p];
    any_outside = any_outside || outside.data()[p] > 0.0;
  }

  SyntheticCase out;
  out.state.foreground = sharp;
  const int c = sharp.channels();
  for (std::size_t p = 0; p < region.pixel_count(); ++p) {
    for (int ch = 0; ch < c; ++ch) out.state.foreground.data()[p * c + ch] *= region.data()[p];
  }
  // A full-frame object leaves nothing to inpaint from.
  out.state.background = any_outside ? fill_by_dilation(sharp, outside) : sharp;
  out.state.middle_mask = alpha_truth;

  out.truth = render_frames(out.state, params, n);
  out.blurred = mean_of(out.truth.frames);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : out.blurred.data()) v += noise(rng);
  }
  clamp_unit(out.blurred);
  out.alpha = synth_alpha(alpha_truth, params, n);
  return out;
}

}  // namespace blurvid
