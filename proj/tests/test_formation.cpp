#include <doctest.h>

#include <cmath>
#include <set>

#include "blurvid/formation.hpp"
#include "blurvid/metrics.hpp"
#include "blurvid/scenes.hpp"
#include "blurvid/segmentation.hpp"
#include "support.hpp"

using namespace blurvid;
using blurvid::testing::max_abs_diff;
using blurvid::testing::random_image;

namespace {

Image disk_mask(int h, int w, double cx, double cy, double r) {
  Image m(h, w, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.at(y, x) = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r ? 1.0 : 0.0;
  }
  return m;
}

ReferenceState random_state(int h, int w, int c, std::uint64_t seed) {
  ReferenceState s;
  s.foreground = random_image(h, w, c, seed);
  s.background = random_image(h, w, c, seed + 1);
  s.middle_mask = disk_mask(h, w, w / 2.0, h / 2.0, std::min(h, w) / 4.0);
  return s;
}

const AffineParams kMotion = AffineParams::from_linear(1.02, 0.03, -0.02, 0.99, 0.05, -0.03);

// Frames assembled pixel by pixel from independently sampled layers.
Image naive_blur(const ReferenceState& s, const AffineParams& p, int n) {
  const int h = s.foreground.height(), w = s.foreground.width(), c = s.foreground.channels();
  Image acc(h, w, c);
  for (int i = 1; i <= n; ++i) {
    const SampleGrid g = grid_generate(step_transform(p, i - (n + 1) / 2), h, w);
    const Image f = grid_sample(s.foreground, g);
    const Image m = grid_sample(s.middle_mask, g);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ch = 0; ch < c; ++ch) {
          acc.at(y, x, ch) += m.at(y, x) * f.at(y, x, ch) + (1.0 - m.at(y, x)) * s.background.at(y, x, ch);
        }
      }
    }
  }
  for (double& v : acc.data()) v /= n;
  return acc;
}

}  // namespace

TEST_SUITE("render_frames") {
  TEST_CASE("identity params give identical composited frames") {
    const ReferenceState s = random_state(12, 10, 3, 1);
    const VideoClip clip = render_frames(s, AffineParams::identity(), 7);
    REQUIRE(clip.frames.size() == 7);
    CHECK(clip.middle_index == 4);
    for (const Image& f : clip.frames) CHECK(f == s.composite());
  }

  TEST_CASE("middle frame is the composite exactly") {
    const ReferenceState s = random_state(16, 16, 3, 2);
    CHECK(render_frames(s, kMotion, 5).middle() == s.composite());
  }

  TEST_CASE("full mask makes the background irrelevant where the mask stays in view") {
    ReferenceState a = random_state(24, 24, 1, 3);
    a.middle_mask = Image(24, 24, 1, 1.0);
    ReferenceState b = a;
    b.background = random_image(24, 24, 1, 99);
    const AffineParams p = AffineParams::translation(0.04, 0.02);
    const VideoClip ca = render_frames(a, p, 5);
    const VideoClip cb = render_frames(b, p, 5);
    const auto masks = propagate_masks(a.middle_mask, p, 5);
    int checked = 0;
    for (int i = 0; i < 5; ++i) {
      const Image chain = grid_sample(a.foreground, grid_generate(step_transform(p, i - 2), 24, 24));
      for (std::size_t q = 0; q < chain.size(); ++q) {
        if (masks[i].data()[q] != 1.0) continue;
        CHECK(ca.frames[i].data()[q] == chain.data()[q]);
        CHECK(cb.frames[i].data()[q] == chain.data()[q]);
        ++checked;
      }
    }
    CHECK(checked > 5 * 400);
  }

  TEST_CASE("translating disk advances its centroid by equal increments") {
    const int n = 64;
    ReferenceState s;
    s.foreground = Image(n, n, 1, 1.0);
    s.background = random_image(n, n, 1, 5, 0.0, 0.5);
    s.middle_mask = disk_mask(n, n, 31.5, 31.5, 10.0);
    const VideoClip clip = render_frames(s, AffineParams::translation(0.1, 0.0), 7);
    std::vector<double> cx;
    for (const Image& f : clip.frames) {
      // frame - background = M * (1 - background), so this recovers M.
      double sx = 0, sw = 0;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double m = (f.at(y, x) - s.background.at(y, x)) / (1.0 - s.background.at(y, x));
          sx += x * m;
          sw += m;
        }
      }
      cx.push_back(sx / sw);
    }
    for (int i = 1; i < 7; ++i) {
      const double step_normalized = (cx[i] - cx[i - 1]) * 2.0 / (n - 1);
      CHECK(step_normalized == doctest::Approx(-0.1).epsilon(1e-3));
    }
  }

  TEST_CASE("errors") {
    const ReferenceState s = random_state(8, 8, 1, 4);
    CHECK_THROWS_AS(render_frames(s, kMotion, 4), InvalidArgument);
    CHECK_THROWS_AS(render_frames(s, kMotion, 0), InvalidArgument);
    CHECK_THROWS_AS(render_frames(s, AffineParams::from_linear(1, 2, 2, 4), 3), SingularTransformError);
    CHECK_NOTHROW(render_frames(s, AffineParams::from_linear(1, 2, 2, 4), 1));
    ReferenceState bad = s;
    bad.background = Image(8, 8, 3);
    CHECK_THROWS_AS(render_frames(bad, kMotion, 3), ShapeError);
    bad = s;
    bad.middle_mask = Image(8, 7, 1);
    CHECK_THROWS_AS(render_frames(bad, kMotion, 3), ShapeError);
  }
}

TEST_SUITE("blur_forward") {
  TEST_CASE("no motion or a single frame gives the composite") {
    const ReferenceState s = random_state(10, 14, 3, 6);
    CHECK(max_abs_diff(blur_forward(s, AffineParams::identity(), 7), s.composite()) < 1e-15);
    CHECK(blur_forward(s, kMotion, 1) == s.composite());
  }

  TEST_CASE("equals the mean of a synthesized ground-truth clip") {
    const Scene sc = disk_on_texture(48, 48, 3, 7);
    const SyntheticCase c = synthesize_case(sc.sharp, sc.mask, kMotion, 7, 0.0);
    Image mean(48, 48, 3);
    for (const Image& f : c.truth.frames) {
      for (std::size_t q = 0; q < mean.size(); ++q) mean.data()[q] += f.data()[q];
    }
    for (double& v : mean.data()) v /= 7.0;
    CHECK(max_abs_diff(blur_forward(c.state, kMotion, 7), mean) <= 1e-6);
  }

  TEST_CASE("matches a frame-by-frame oracle") {
    const ReferenceState s = random_state(20, 18, 3, 8);
    for (int n : {1, 3, 7, 9}) CHECK(max_abs_diff(blur_forward(s, kMotion, n), naive_blur(s, kMotion, n)) <= 1e-12);
  }

  TEST_CASE("output stays in the unit range") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      ReferenceState s = random_state(16, 16, 3, 10 + seed);
      s.middle_mask = random_image(16, 16, 1, 20 + seed);
      const Image b = blur_forward(s, kMotion, 7);
      for (double v : b.vec()) CHECK((v >= 0.0 && v <= 1.0));
    }
  }

  TEST_CASE("energy is conserved under an in-view translation of a full mask") {
    const int n = 64;
    ReferenceState s;
    s.foreground = Image(n, n, 1);
    const Image tex = random_image(n, n, 1, 11);
    for (int y = 12; y < n - 12; ++y) {
      for (int x = 12; x < n - 12; ++x) s.foreground.at(y, x) = tex.at(y, x);
    }
    s.background = Image(n, n, 1);
    s.middle_mask = Image(n, n, 1, 1.0);
    const Image b = blur_forward(s, AffineParams::translation(0.05, -0.03), 7);
    double mb = 0, mf = 0;
    for (std::size_t q = 0; q < b.size(); ++q) {
      mb += b.data()[q];
      mf += s.foreground.data()[q];
    }
    CHECK(std::abs(mb - mf) / b.size() <= 1e-3);
  }

  TEST_CASE("inverse params render the same frames in reverse order") {
    const Scene sc = disk_on_texture(48, 48, 3, 12);
    const SyntheticCase c = synthesize_case(sc.sharp, sc.mask, kMotion, 7, 0.0);
    const VideoClip back = render_frames(c.state, invert(kMotion), 7);
    for (int i = 0; i < 7; ++i) CHECK(psnr(c.truth.frames[i], back.frames[6 - i]) >= 35.0);
  }
}

TEST_SUITE("blur_forward_mask") {
  TEST_CASE("identity params return the mask") {
    const Image m = random_image(9, 9, 1, 13);
    CHECK(max_abs_diff(blur_forward_mask(m, AffineParams::identity(), 7), m) < 1e-15);
  }

  TEST_CASE("is synth_alpha") {
    const Image m = disk_mask(32, 32, 15, 16, 8);
    CHECK(blur_forward_mask(m, kMotion, 7) == synth_alpha(m, kMotion, 7));
  }

  TEST_CASE("translating disk ramps through seven levels") {
    const int n = 65;
    const Image m = disk_mask(n, n, 32, 32, 12);
    const Image a = blur_forward_mask(m, AffineParams::translation(4.0 / 64.0, 0.0), 7);
    std::set<long> levels;
    for (int x = 0; x < n; ++x) {
      const double v = a.at(32, x) * 7.0;
      CHECK(std::abs(v - std::round(v)) < 1e-9);
      levels.insert(std::lround(v));
    }
    CHECK(levels == std::set<long>{0, 1, 2, 3, 4, 5, 6, 7});
  }
}

TEST_SUITE("synthesize_case") {
  TEST_CASE("no noise and no motion reproduces the sharp image") {
    const Scene sc = disk_on_texture(40, 40, 3, 14);
    const SyntheticCase c = synthesize_case(sc.sharp, sc.mask, AffineParams::identity(), 7, 0.0);
    CHECK(max_abs_diff(c.blurred, sc.sharp) < 1e-15);
    CHECK(c.alpha == sc.mask);
    CHECK(c.truth.frames.size() == 7);
  }

  TEST_CASE("a one-pixel bar smears over (n-1)|t|") {
    const int n = 65;
    Image sharp(n, n, 1);
    for (int y = 0; y < n; ++y) sharp.at(y, 32) = 1.0;
    const Image alpha(n, n, 1, 1.0);
    for (double t : {0.0625, 0.05}) {
      const SyntheticCase c = synthesize_case(sharp, alpha, AffineParams::translation(t, 0.0), 7, 0.0);
      int first = -1, last = -1;
      for (int x = 0; x < n; ++x) {
        if (c.blurred.at(32, x) > 1e-9) {
          if (first < 0) first = x;
          last = x;
        }
      }
      const double extent = (last - first) * 2.0 / (n - 1);
      CHECK(extent == doctest::Approx(6 * t).epsilon(0.15));
    }
  }

  TEST_CASE("PSNR against the sharp image falls as the translation grows") {
    const Scene sc = disk_on_texture(64, 64, 3, 15);
    double prev = kPsnrInfinite;
    for (double t : {0.02, 0.05, 0.1}) {
      const SyntheticCase c = synthesize_case(sc.sharp, sc.mask, AffineParams::translation(t, 0.0), 7, 0.0);
      const double p = psnr(c.blurred, sc.sharp);
      CHECK(p < prev);
      prev = p;
    }
  }

  TEST_CASE("noise is seeded, clipped and of the requested spread") {
    const Scene sc = disk_on_texture(64, 64, 1, 16);
    const SyntheticCase clean = synthesize_case(sc.sharp, sc.mask, kMotion, 7, 0.0);
    const SyntheticCase a = synthesize_case(sc.sharp, sc.mask, kMotion, 7, 0.01, 5);
    const SyntheticCase b = synthesize_case(sc.sharp, sc.mask, kMotion, 7, 0.01, 5);
    const SyntheticCase other = synthesize_case(sc.sharp, sc.mask, kMotion, 7, 0.01, 6);
    CHECK(a.blurred == b.blurred);
    CHECK_FALSE(a.blurred == other.blurred);
    double ss = 0;
    int count = 0;
    for (std::size_t q = 0; q < a.blurred.size(); ++q) {
      CHECK((a.blurred.data()[q] >= 0.0 && a.blurred.data()[q] <= 1.0));
      const double v = clean.blurred.data()[q];
      if (v > 0.05 && v < 0.95) {
        const double d = a.blurred.data()[q] - v;
        ss += d * d;
        ++count;
      }
    }
    CHECK(std::sqrt(ss / count) == doctest::Approx(0.01).epsilon(0.1));
    CHECK(a.alpha == clean.alpha);
  }

  TEST_CASE("background is filled from outside the object") {
    const Scene sc = disk_on_texture(40, 40, 3, 17);
    const SyntheticCase c = synthesize_case(sc.sharp, sc.mask, kMotion, 5, 0.0);
    for (std::size_t p = 0; p < sc.mask.size(); ++p) {
      for (int ch = 0; ch < 3; ++ch) {
        const std::size_t q = p * 3 + ch;
        if (sc.mask.data()[p] == 0.0) {
          CHECK(c.state.background.data()[q] == sc.sharp.data()[q]);
          CHECK(c.state.foreground.data()[q] == 0.0);
        } else {
          CHECK(c.state.foreground.data()[q] == sc.sharp.data()[q]);
        }
      }
    }
  }

  TEST_CASE("errors") {
    const Scene sc = disk_on_texture(16, 16, 1, 18);
    CHECK_THROWS_AS(synthesize_case(sc.sharp, Image(16, 16, 1), kMotion, 7, 0.0), InvalidArgument);
    CHECK_THROWS_AS(synthesize_case(sc.sharp, sc.mask, kMotion, 7, -0.1), InvalidArgument);
    CHECK_THROWS_AS(synthesize_case(sc.sharp, sc.mask, kMotion, 6, 0.0), InvalidArgument);
    CHECK_THROWS_AS(synthesize_case(sc.sharp, Image(16, 15, 1), kMotion, 7, 0.0), ShapeError);
  }
}

TEST_CASE("fill_by_dilation keeps known pixels and fills holes from neighbors") {
  Image img(5, 5, 1, 0.0);
  Image known(5, 5, 1, 1.0);
  for (int x = 0; x < 5; ++x) img.at(0, x) = 0.8;
  for (int y = 1; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) known.at(y, x) = 0.0;
  }
  const Image out = fill_by_dilation(img, known);
  for (double v : out.vec()) CHECK(v == doctest::Approx(0.8));
  CHECK_THROWS_AS(fill_by_dilation(img, Image(5, 5, 1)), InvalidArgument);
}
