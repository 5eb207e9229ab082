#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "pvi/bounds.hpp"
#include "pvi/model.hpp"
#include "pvi/variational.hpp"

namespace pvi {

enum class EstimatorKind { Reparameterization, ScoreFunction };

struct GradientEstimate {
  Eigen::VectorXd grad_lambda;         // 2N, layout [mu; rho]
  double grad_v0 = 0.0;                // Perturbative only
  Eigen::VectorXd per_coord_variance;  // sample variance over the S draws
  double grad_v0_variance = 0.0;
  int sample_count = 0;
  // Mean of the per-sample objective: the surrogate for Perturbative, the
  // ELBO for KL, the (rescaled) alpha bound over (1 - alpha) for Alpha.
  double objective = 0.0;
  double elbo = 0.0;  // mean of log p - log q on the same draws
};

// Per-sample objective as a function of w = log p(x,z) - log q(z) = -V, and
// its derivative in w.
struct SampleTransform {
  std::function<double(double)> value;
  std::function<double(double)> slope;
};

// KL: f = w. Perturbative: f = sum_{k<=K} (V0 + w)^k / k!.
// Alpha: f = exp((1-alpha)(w + V0)) / (1 - alpha), whose gradient is the
// (rescaled) alpha-bound gradient with the 1/(1-alpha) factor removed, so the
// ascent direction is the same for alpha < 1 and alpha > 1.
SampleTransform transform_for(const BoundSpec& bound);

GradientEstimate reparam_gradient(const BoundSpec& bound, const Model& model,
                                  const VariationalParams& params, const Draws& draws);

GradientEstimate score_gradient(const BoundSpec& bound, const Model& model,
                                const VariationalParams& params, const Draws& draws);

// Score-function estimate for an arbitrary transform; no model gradient needed.
GradientEstimate score_gradient(const SampleTransform& transform, const Model& model,
                                const VariationalParams& params, const Draws& draws);

GradientEstimate estimate_gradient(EstimatorKind kind, const BoundSpec& bound,
                                   const Model& model, const VariationalParams& params,
                                   const Draws& draws);

// g_V0 - surrogate: the rescaled V0-gradient of the bound itself.
double v0_update_direction(double g_v0, double surrogate);

enum class VarianceCoords { Mean, All };

struct VarianceOptions {
  EstimatorKind estimator = EstimatorKind::Reparameterization;
  VarianceCoords coords = VarianceCoords::Mean;
  std::uint64_t seed = 0;
  std::uint64_t stream = 7;
};

// Variance of the single-sample gradient estimator over n_samples draws,
// averaged over coordinates (the N mean coordinates by default).
double gradient_variance_profile(const BoundSpec& bound, const Model& model,
                                 const VariationalParams& params, int n_samples,
                                 const VarianceOptions& options = {});

// Same draws shared across several bounds; one entry per bound.
std::vector<double> gradient_variance_profile(const std::vector<BoundSpec>& bounds,
                                              const Model& model,
                                              const VariationalParams& params,
                                              int n_samples,
                                              const VarianceOptions& options = {});

}  // namespace pvi
