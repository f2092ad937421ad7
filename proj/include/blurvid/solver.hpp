#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blurvid/affine.hpp"
#include "blurvid/formation.hpp"
#include "blurvid/image.hpp"
#include "blurvid/metrics.hpp"
#include "blurvid/regularization.hpp"

namespace blurvid {

enum class DataTerm { L1, Charbonnier };

inline constexpr double kCharbonnierDelta = 1e-3;

DataTerm parse_data_term(const std::string& name);
std::string to_string(DataTerm d);

struct SolverConfig {
  int n_frames = 7;
  RegWeights weights;
  double lr_image = 0.02;
  double lr_affine = 0.01;
  // One entry per scale, coarsest first. Scale s of S runs at (sqrt 2)^(s-S).
  std::vector<int> iterations_per_scale{50, 100, 150};
  double epsilon_init = 1.0;
  int epsilon_halving_period = 50;
  TvVariant tv_variant = TvVariant::L0;
  DataTerm data_term = DataTerm::L1;
  std::uint64_t seed = 0;

  void validate() const;
  int scales() const { return static_cast<int>(iterations_per_scale.size()); }
  // epsilon_init / 2^floor(t / halving_period) for 0-based iteration t.
  double epsilon_at(int iteration) const;
  double scale_factor(int scale_index) const;  // 1-based
};

struct ObjectiveTerms {
  double data = 0.0;          // sum_p rho(f(I_m, A) - B)
  double tv = 0.0;            // w_tv * TV(foreground)
  double affine_matrix = 0.0; // w_l ||A_l - E||^2 + w_t ||A_t||^2
  double alpha = 0.0;         // w_alpha * sum_p |f(M_m, A) - I_alpha|
  double total = 0.0;
};

struct ObjectiveGradient {
  Image d_foreground;
  Image d_background;
  AffineVector d_params{};
};

// Full objective at (state, params). `state.middle_mask` is the middle mask
// of this scale; `alpha` is the alpha map of the same size.
ObjectiveTerms objective(const ReferenceState& state, const AffineParams& params,
                         const Image& blurred, const Image& alpha, const SolverConfig& cfg,
                         double epsilon);
ObjectiveTerms objective(const ReferenceState& state, const AffineParams& params,
                         const Image& blurred, const Image& alpha, const SolverConfig& cfg);

// Gradient of `objective` with respect to every unknown.
ObjectiveGradient objective_gradient(const ReferenceState& state, const AffineParams& params,
                                     const Image& blurred, const Image& alpha,
                                     const SolverConfig& cfg, double epsilon);

// Objective of the motion subproblem. The residual sums are averaged over the
// object support (pixels with alpha > 1e-3; the data sum also over channels)
// so the step size means the same thing at every scale and object size. The
// matrix prior is added unscaled. Its gradient drives step_affine.
double affine_objective(const ReferenceState& state, const AffineParams& params,
                        const Image& blurred, const Image& alpha, const SolverConfig& cfg);
AffineVector affine_objective_gradient(const ReferenceState& state, const AffineParams& params,
                                       const Image& blurred, const Image& alpha,
                                       const SolverConfig& cfg);

// One descent step on foreground and background with A fixed; clamps to [0,1].
ReferenceState step_image(const ReferenceState& state, const AffineParams& params,
                          const Image& blurred, const Image& alpha, const SolverConfig& cfg,
                          double epsilon);

// One descent step on the six affine entries with the images fixed.
AffineParams step_affine(const ReferenceState& state, const AffineParams& params,
                         const Image& blurred, const Image& alpha, const SolverConfig& cfg);

struct ScaleResult {
  ReferenceState state;
  AffineParams params;
  std::vector<ObjectiveTerms> trace;  // objective after each iteration
};

// Alternates step_image / step_affine for iterations_per_scale[scale_index-1]
// iterations. Inputs must already be at this scale's resolution.
ScaleResult run_scale(const Image& blurred, const Image& alpha, const Image& middle_mask,
                      const ReferenceState& state_init, const AffineParams& params_init,
                      const SolverConfig& cfg, int scale_index);

struct ExtractionResult {
  VideoClip clip;
  ReferenceState state;
  AffineParams params;
  AffineParams params_init;
  std::vector<std::vector<ObjectiveTerms>> loss_trace;  // per scale
  std::optional<Metrics> metrics;
};

// Initial motion: identity linear part perturbed by i.i.d. U(-0.01, 0.01)
// drawn from `seed`, zero translation.
AffineParams initial_params(std::uint64_t seed);

// Coarse-to-fine reconstruction of one object.
ExtractionResult extract(const Image& blurred, const Image& alpha, const SolverConfig& cfg);

}  // namespace blurvid
