#include "blurvid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "blurvid/resample.hpp"
#include "blurvid/segmentation.hpp"

namespace blurvid {

namespace {

constexpr double kAlphaSupportThreshold = 1e-3;

// One rendered frame together with everything its backward pass needs.
struct FrameCache {
  int offset = 0;
  AffineParams transform;
  std::array<AffineVector, 6> jacobian{};
  SampleGrid grid;
  std::optional<SamplerJacobian> sampler;  // empty for the reference frame
  Image fg;
  Image mask;
};

struct Forward {
  std::vector<FrameCache> frames;
  Image pred;        // modeled blurred image
  Image pred_alpha;  // modeled alpha map
};

Forward forward(const ReferenceState& state, const AffineParams& params, int n) {
  const int h = state.foreground.height();
  const int w = state.foreground.width();
  const int c = state.foreground.channels();
  Forward fw;
  fw.frames.resize(n);
  std::vector<Image> composites, masks;
  for (int i = 1; i <= n; ++i) {
    FrameCache& f = fw.frames[i - 1];
    f.offset = frame_offset(i, n);
    if (f.offset == 0) {
      f.fg = state.foreground;
      f.mask = state.middle_mask;
    } else {
      f.transform = step_transform(params, f.offset);
      f.jacobian = step_transform_jacobian(params, f.offset);
      f.grid = grid_generate(f.transform, h, w);
      f.sampler.emplace(f.grid, h, w);
      f.fg = f.sampler->apply(state.foreground);
      f.mask = clamped_unit(f.sampler->apply(state.middle_mask));
    }
    Image frame(h, w, c);
    const std::size_t np = f.mask.pixel_count();
    for (std::size_t p = 0; p < np; ++p) {
      const double m = f.mask.data()[p];
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t idx = p * c + ch;
        frame.data()[idx] = m * f.fg.data()[idx] + (1.0 - m) * state.background.data()[idx];
      }
    }
    composites.push_back(std::move(frame));
    masks.push_back(f.mask);
  }
  // Same averaging as the renderer, so a true state reproduces its blur exactly.
  fw.pred = mean_of(composites);
  fw.pred_alpha = mean_of(masks);
  return fw;
}

double data_penalty(double r, DataTerm term) {
  if (term == DataTerm::Charbonnier) {
    return std::sqrt(r * r + kCharbonnierDelta * kCharbonnierDelta) - kCharbonnierDelta;
  }
  return std::abs(r);
}

double data_derivative(double r, DataTerm term) {
  if (term == DataTerm::Charbonnier) {
    return r / std::sqrt(r * r + kCharbonnierDelta * kCharbonnierDelta);
  }
  return sign0(r);
}

void check_inputs(const ReferenceState& state, const AffineParams& params, const Image& blurred,
                  const Image& alpha, const SolverConfig& cfg) {
  cfg.validate();
  state.validate();
  require_same_shape(state.foreground, blurred, "blurred image vs reference state");
  require_same_extent(blurred, alpha, "alpha map vs blurred image");
  if (alpha.channels() != 1) throw ShapeError("alpha map must be single-channel");
  if (cfg.n_frames > 1) require_invertible(params);
}

ObjectiveTerms terms_of(const Forward& fw, const ReferenceState& state,
                        const AffineParams& params, const Image& blurred, const Image& alpha,
                        const SolverConfig& cfg, double epsilon) {
  ObjectiveTerms t;
  auto pred = fw.pred.data();
  auto b = blurred.data();
  for (std::size_t i = 0; i < pred.size(); ++i) t.data += data_penalty(pred[i] - b[i], cfg.data_term);
  t.tv = cfg.weights.w_tv * tv_value(state.foreground, {cfg.tv_variant, epsilon});
  t.affine_matrix = affine_matrix_penalty(params, cfg.weights);
  t.alpha = cfg.weights.w_alpha * alpha_residual(fw.pred_alpha, alpha);
  t.total = t.data + t.tv + t.affine_matrix + t.alpha;
  return t;
}

Image data_residual_derivative(const Forward& fw, const Image& blurred, DataTerm term) {
  Image d(blurred.height(), blurred.width(), blurred.channels());
  auto pred = fw.pred.data();
  auto b = blurred.data();
  auto out = d.data();
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = data_derivative(pred[i] - b[i], term);
  return d;
}

// Gradient of the data term with respect to foreground and background, given
// d_pred = dL/d(pred).
void image_gradient(const Forward& fw, const ReferenceState& state, const Image& d_pred,
                    Image& d_fg, Image& d_bg) {
  const int n = static_cast<int>(fw.frames.size());
  const int c = d_pred.channels();
  const double inv_n = 1.0 / n;
  d_fg = Image(state.foreground.height(), state.foreground.width(), c);
  d_bg = Image(state.background.height(), state.background.width(), c);
  Image weighted(d_pred.height(), d_pred.width(), c);
  for (const FrameCache& f : fw.frames) {
    const std::size_t np = f.mask.pixel_count();
    for (std::size_t p = 0; p < np; ++p) {
      const double m = f.mask.data()[p];
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t idx = p * c + ch;
        const double g = d_pred.data()[idx] * inv_n;
        weighted.data()[idx] = m * g;
        d_bg.data()[idx] += (1.0 - m) * g;
      }
    }
    if (f.sampler) {
      f.sampler->apply_transpose(weighted, d_fg);
    } else {
      for (std::size_t i = 0; i < weighted.size(); ++i) d_fg.data()[i] += weighted.data()[i];
    }
  }
}

// dL/dtheta through the sampling coordinates of every non-reference frame,
// given dL/d(pred) and dL/d(pred_alpha).
AffineVector motion_gradient(const Forward& fw, const ReferenceState& state, const Image& d_pred,
                             const Image& d_pred_alpha) {
  AffineVector grad{};
  const int n = static_cast<int>(fw.frames.size());
  const double inv_n = 1.0 / n;
  const int h = state.foreground.height();
  const int w = state.foreground.width();
  const int c = state.foreground.channels();
  const double sx = 0.5 * (w - 1);
  const double sy = 0.5 * (h - 1);
  for (const FrameCache& f : fw.frames) {
    if (f.offset == 0) continue;
    const CoordGradients cf = sample_grad_coords(state.foreground, f.grid);
    const CoordGradients cm = sample_grad_coords(state.middle_mask, f.grid);
    // dL/d(transform entries): outer products of coordinate gradients with
    // the homogeneous target coordinates.
    AffineVector g_t{};
    for (int y = 0; y < h; ++y) {
      const double yt = to_normalized(y, h);
      for (int x = 0; x < w; ++x) {
        const double xt = to_normalized(x, w);
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        const double m = f.mask.data()[p];
        const double dmx = cm.dx.data()[p];
        const double dmy = cm.dy.data()[p];
        double ex = d_pred_alpha.data()[p] * dmx;
        double ey = d_pred_alpha.data()[p] * dmy;
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t idx = p * c + ch;
          const double diff = f.fg.data()[idx] - state.background.data()[idx];
          const double dp = d_pred.data()[idx];
          ex += dp * (m * cf.dx.data()[idx] + diff * dmx);
          ey += dp * (m * cf.dy.data()[idx] + diff * dmy);
        }
        const double gx = ex * inv_n * sx;
        const double gy = ey * inv_n * sy;
        if (gx == 0.0 && gy == 0.0) continue;
        g_t[0] += gx * xt;
        g_t[1] += gx * yt;
        g_t[2] += gx;
        g_t[3] += gy * xt;
        g_t[4] += gy * yt;
        g_t[5] += gy;
      }
    }
    for (int j = 0; j < 6; ++j) {
      for (int e = 0; e < 6; ++e) grad[j] += g_t[e] * f.jacobian[j][e];
    }
  }
  return grad;
}

Image alpha_residual_derivative(const Forward& fw, const Image& alpha, double weight) {
  Image d(alpha.height(), alpha.width(), 1);
  auto pa = fw.pred_alpha.data();
  auto a = alpha.data();
  for (std::size_t i = 0; i < pa.size(); ++i) d.data()[i] = weight * sign0(pa[i] - a[i]);
  return d;
}

std::size_t alpha_support(const Image& alpha) {
  std::size_t n = 0;
  for (double v : alpha.data()) n += v > kAlphaSupportThreshold;
  return std::max<std::size_t>(n, 1);
}

AffineVector matrix_prior_gradient(const AffineParams& params, const RegWeights& w) {
  const auto& t = params.theta;
  return {2.0 * w.w_l * (t[0] - 1.0), 2.0 * w.w_l * t[1], 2.0 * w.w_t * t[2],
          2.0 * w.w_l * t[3],         2.0 * w.w_l * (t[4] - 1.0), 2.0 * w.w_t * t[5]};
}

// Gradient of the motion subproblem from an existing forward pass.
AffineVector affine_gradient_from(const Forward& fw, const ReferenceState& state,
                                  const AffineParams& params, const Image& blurred,
                                  const Image& alpha, const SolverConfig& cfg) {
  const double support = static_cast<double>(alpha_support(alpha));
  const double data_scale = 1.0 / (support * blurred.channels());
  Image d_pred = data_residual_derivative(fw, blurred, cfg.data_term);
  for (double& v : d_pred.data()) v *= data_scale;
  const Image d_pa = alpha_residual_derivative(fw, alpha, cfg.weights.w_alpha / support);
  AffineVector g = motion_gradient(fw, state, d_pred, d_pa);
  const AffineVector prior = matrix_prior_gradient(params, cfg.weights);
  for (int j = 0; j < 6; ++j) g[j] += prior[j];
  return g;
}

ReferenceState image_step_from(const Forward& fw, const ReferenceState& state,
                               const Image& blurred, const SolverConfig& cfg, double epsilon) {
  Image d_fg, d_bg;
  image_gradient(fw, state, data_residual_derivative(fw, blurred, cfg.data_term), d_fg, d_bg);
  if (cfg.weights.w_tv > 0.0) {
    const Image tv = tv_grad(state.foreground, {cfg.tv_variant, epsilon});
    for (std::size_t i = 0; i < tv.size(); ++i) d_fg.data()[i] += cfg.weights.w_tv * tv.data()[i];
  }
  ReferenceState next = state;
  for (std::size_t i = 0; i < d_fg.size(); ++i) {
    next.foreground.data()[i] -= cfg.lr_image * d_fg.data()[i];
    next.background.data()[i] -= cfg.lr_image * d_bg.data()[i];
  }
  clamp_unit(next.foreground);
  clamp_unit(next.background);
  return next;
}

AffineParams apply_affine_step(const AffineParams& params, const AffineVector& grad, double lr) {
  AffineParams next = params;
  for (int j = 0; j < 6; ++j) next.theta[j] -= lr * grad[j];
  if (!next.finite()) throw NonFiniteError("affine update produced non-finite parameters");
  // Pull the linear part toward identity until it is safely invertible.
  for (int tries = 0; std::abs(next.determinant()) < kMinAbsDeterminant && tries < 64; ++tries) {
    next.theta[0] = 0.5 * (next.theta[0] + 1.0);
    next.theta[1] *= 0.5;
    next.theta[3] *= 0.5;
    next.theta[4] = 0.5 * (next.theta[4] + 1.0);
  }
  require_invertible(next);
  return next;
}

}  // namespace

DataTerm parse_data_term(const std::string& name) {
  if (name == "l1" || name == "L1") return DataTerm::L1;
  if (name == "charbonnier") return DataTerm::Charbonnier;
  throw InvalidArgument("unknown data term '" + name + "' (expected l1 or charbonnier)");
}

std::string to_string(DataTerm d) { return d == DataTerm::L1 ? "l1" : "charbonnier"; }

void SolverConfig::validate() const {
  require_odd_frame_count(n_frames);
  weights.validate();
  if (!(lr_image > 0.0) || !(lr_affine > 0.0) || !std::isfinite(lr_image) ||
      !std::isfinite(lr_affine)) {
    throw InvalidArgument("learning rates must be positive and finite");
  }
  if (iterations_per_scale.empty()) throw InvalidArgument("at least one scale is required");
  for (int it : iterations_per_scale) {
    if (it < 0) throw InvalidArgument("iteration counts must be >= 0");
  }
  if (!(epsilon_init > 0.0 && epsilon_init <= 1.0)) throw InvalidArgument("epsilon_init must lie in (0, 1]");
  if (epsilon_halving_period < 1) throw InvalidArgument("epsilon_halving_period must be >= 1");
}

double SolverConfig::epsilon_at(int iteration) const {
  return std::ldexp(epsilon_init, -(iteration / epsilon_halving_period));
}

double SolverConfig::scale_factor(int scale_index) const {
  return std::pow(std::sqrt(2.0), scale_index - scales());
}

ObjectiveTerms objective(const ReferenceState& state, const AffineParams& params,
                         const Image& blurred, const Image& alpha, const SolverConfig& cfg,
                         double epsilon) {
  check_inputs(state, params, blurred, alpha, cfg);
  const Forward fw = forward(state, params, cfg.n_frames);
  return terms_of(fw, state, params, blurred, alpha, cfg, epsilon);
}

ObjectiveTerms objective(const ReferenceState& state, const AffineParams& params,
                         const Image& blurred, const Image& alpha, const SolverConfig& cfg) {
  return objective(state, params, blurred, alpha, cfg, cfg.epsilon_init);
}

ObjectiveGradient objective_gradient(const ReferenceState& state, const AffineParams& params,
                                     const Image& blurred, const Image& alpha,
                                     const SolverConfig& cfg, double epsilon) {
  check_inputs(state, params, blurred, alpha, cfg);
  const Forward fw = forward(state, params, cfg.n_frames);
  const Image d_pred = data_residual_derivative(fw, blurred, cfg.data_term);
  ObjectiveGradient g;
  image_gradient(fw, state, d_pred, g.d_foreground, g.d_background);
  const Image tv = tv_grad(state.foreground, {cfg.tv_variant, epsilon});
  for (std::size_t i = 0; i < tv.size(); ++i) {
    g.d_foreground.data()[i] += cfg.weights.w_tv * tv.data()[i];
  }
  g.d_params =
      motion_gradient(fw, state, d_pred, alpha_residual_derivative(fw, alpha, cfg.weights.w_alpha));
  const AffineVector prior = matrix_prior_gradient(params, cfg.weights);
  for (int j = 0; j < 6; ++j) g.d_params[j] += prior[j];
  return g;
}

double affine_objective(const ReferenceState& state, const AffineParams& params,
                        const Image& blurred, const Image& alpha, const SolverConfig& cfg) {
  check_inputs(state, params, blurred, alpha, cfg);
  const Forward fw = forward(state, params, cfg.n_frames);
  double data = 0.0;
  for (std::size_t i = 0; i < blurred.size(); ++i) {
    data += data_penalty(fw.pred.data()[i] - blurred.data()[i], cfg.data_term);
  }
  const double support = static_cast<double>(alpha_support(alpha));
  return data / (support * blurred.channels()) +
         cfg.weights.w_alpha * alpha_residual(fw.pred_alpha, alpha) / support +
         affine_matrix_penalty(params, cfg.weights);
}

AffineVector affine_objective_gradient(const ReferenceState& state, const AffineParams& params,
                                       const Image& blurred, const Image& alpha,
                                       const SolverConfig& cfg) {
  check_inputs(state, params, blurred, alpha, cfg);
  const Forward fw = forward(state, params, cfg.n_frames);
  return affine_gradient_from(fw, state, params, blurred, alpha, cfg);
}

ReferenceState step_image(const ReferenceState& state, const AffineParams& params,
                          const Image& blurred, const Image& alpha, const SolverConfig& cfg,
                          double epsilon) {
  check_inputs(state, params, blurred, alpha, cfg);
  const Forward fw = forward(state, params, cfg.n_frames);
  return image_step_from(fw, state, blurred, cfg, epsilon);
}

AffineParams step_affine(const ReferenceState& state, const AffineParams& params,
                         const Image& blurred, const Image& alpha, const SolverConfig& cfg) {
  return apply_affine_step(params, affine_objective_gradient(state, params, blurred, alpha, cfg),
                           cfg.lr_affine);
}

ScaleResult run_scale(const Image& blurred, const Image& alpha, const Image& middle_mask,
                      const ReferenceState& state_init, const AffineParams& params_init,
                      const SolverConfig& cfg, int scale_index) {
  if (scale_index < 1 || scale_index > cfg.scales()) {
    throw InvalidArgument("scale index out of range: " + std::to_string(scale_index));
  }
  ScaleResult r;
  r.state = state_init;
  r.state.middle_mask = middle_mask;
  r.params = params_init;
  check_inputs(r.state, r.params, blurred, alpha, cfg);

  const int iterations = cfg.iterations_per_scale[scale_index - 1];
  r.trace.reserve(iterations);
  if (iterations == 0) return r;

  Forward fw = forward(r.state, r.params, cfg.n_frames);
  for (int t = 0; t < iterations; ++t) {
    const double eps = cfg.epsilon_at(t);
    r.state = image_step_from(fw, r.state, blurred, cfg, eps);
    fw = forward(r.state, r.params, cfg.n_frames);
    r.params = apply_affine_step(
        r.params, affine_gradient_from(fw, r.state, r.params, blurred, alpha, cfg), cfg.lr_affine);
    fw = forward(r.state, r.params, cfg.n_frames);
    const ObjectiveTerms terms = terms_of(fw, r.state, r.params, blurred, alpha, cfg, eps);
    if (!std::isfinite(terms.total)) {
      throw NonFiniteError("non-finite objective at scale " + std::to_string(scale_index) +
                           ", iteration " + std::to_string(t + 1));
    }
    r.trace.push_back(terms);
  }
  return r;
}

AffineParams initial_params(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Uniform draw built from the raw 53-bit mantissa so the sequence does not
  // depend on the standard library's distribution implementation.
  auto uniform = [&rng]() {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return -0.01 + 0.02 * u;
  };
  AffineParams p = AffineParams::identity();
  p.theta[0] += uniform();
  p.theta[1] += uniform();
  p.theta[3] += uniform();
  p.theta[4] += uniform();
  return p;
}

ExtractionResult extract(const Image& blurred, const Image& alpha, const SolverConfig& cfg) {
  cfg.validate();
  require_same_extent(blurred, alpha, "alpha map vs blurred image");
  require_alpha_map(alpha);
  if (!all_finite(blurred)) throw NonFiniteError("blurred image contains non-finite values");

  const Image mask_full = middle_mask(alpha);
  ExtractionResult result;
  result.params_init = initial_params(cfg.seed);
  AffineParams params = result.params_init;
  ReferenceState state;

  for (int s = 1; s <= cfg.scales(); ++s) {
    const double f = cfg.scale_factor(s);
    const int h = static_cast<int>(std::lround(blurred.height() * f));
    const int w = static_cast<int>(std::lround(blurred.width() * f));
    const Image b_s = resize_bicubic(blurred, h, w);
    const Image a_s = resize_bicubic(alpha, h, w);
    const Image m_s = resize_bicubic(mask_full, h, w);
    if (s == 1) {
      state.foreground = Image(h, w, blurred.channels(), 0.0);
      state.background = Image(h, w, blurred.channels(), 0.0);
    } else {
      state.foreground = resize_bicubic(state.foreground, h, w);
      state.background = resize_bicubic(state.background, h, w);
    }
    state.middle_mask = m_s;
    ScaleResult r = run_scale(b_s, a_s, m_s, state, params, cfg, s);
    state = std::move(r.state);
    params = r.params;
    result.loss_trace.push_back(std::move(r.trace));
  }

  state.middle_mask = mask_full;
  result.state = state;
  result.params = params;
  result.clip = render_frames(state, params, cfg.n_frames);
  return result;
}

}  // namespace blurvid
