#include "pvi/estimators.hpp"

#include <cmath>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/numeric.hpp"
#include "pvi/rng.hpp"

namespace pvi {

namespace {

// Per-sample quantities shared by every bound.
struct SampleEval {
  double w = 0.0;           // log p - log q
  Eigen::VectorXd dw;       // reparameterized d w / d lambda (2N)
  Eigen::VectorXd score;    // d log q / d lambda at fixed z (2N)
};

SampleEval evaluate(const Model& model, const VariationalParams& params,
                    const Eigen::VectorXd& eps, bool want_reparam) {
  SampleEval s;
  const Eigen::VectorXd z = reparameterize(params, eps);
  s.w = model.log_joint(z) - log_q(params, z);
  const int n = params.dim();
  if (want_reparam) {
    const Eigen::VectorXd g = model.grad_log_joint(z);
    s.dw.resize(2 * n);
    s.dw.head(n) = g;
    // log q at the reparameterized point is sum(-eps^2/2 - rho) + const.
    s.dw.tail(n) = (g.array() * params.sigma().array() * eps.array() + 1.0).matrix();
  } else {
    s.score = grad_log_q_in_lambda(params, z);
  }
  return s;
}

void summarize(const Eigen::MatrixXd& per_sample, const std::vector<double>& v0_terms,
               GradientEstimate& out) {
  const Eigen::Index dim = per_sample.rows();
  const Eigen::Index s = per_sample.cols();
  out.grad_lambda.resize(dim);
  out.per_coord_variance.resize(dim);
  std::vector<double> row(static_cast<std::size_t>(s));
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) row[static_cast<std::size_t>(j)] = per_sample(i, j);
    const double mean = pairwise_mean(row);
    for (double& x : row) x = (x - mean) * (x - mean);
    out.grad_lambda[i] = mean;
    out.per_coord_variance[i] = s > 1 ? pairwise_sum(row) / static_cast<double>(s - 1) : 0.0;
  }
  if (!v0_terms.empty()) {
    out.grad_v0 = pairwise_mean(v0_terms);
    double acc = 0.0;
    for (double x : v0_terms) acc += (x - out.grad_v0) * (x - out.grad_v0);
    out.grad_v0_variance = s > 1 ? acc / static_cast<double>(s - 1) : 0.0;
  }
  out.sample_count = static_cast<int>(s);
}

void require_draws(const Draws& draws, const VariationalParams& params,
                   const Model& model, const char* who) {
  if (draws.empty()) throw InputError(std::string(who) + ": need at least one draw");
  if (params.dim() != model.dim()) {
    throw InputError(std::string(who) + ": params and model dimensions differ");
  }
}

GradientEstimate run(const SampleTransform& t, bool perturbative, int order,
                     double v0, const Model& model, const VariationalParams& params,
                     const Draws& draws, bool reparam) {
  if (reparam && !model.has_gradient()) {
    throw CapabilityError("reparameterization gradient needs model z-gradients ('" +
                          model.name() + "')");
  }
  const Eigen::Index s = static_cast<Eigen::Index>(draws.size());
  Eigen::MatrixXd per_sample(2 * params.dim(), s);
  std::vector<double> values(draws.size());
  std::vector<double> ws(draws.size());
  std::vector<double> v0_terms;
  if (perturbative) v0_terms.resize(draws.size());
  for (Eigen::Index j = 0; j < s; ++j) {
    const auto& d = draws[static_cast<std::size_t>(j)];
    const SampleEval e = evaluate(model, params, d.eps, reparam);
    const double f = t.value(e.w);
    const double df = t.slope(e.w);
    values[static_cast<std::size_t>(j)] = f;
    ws[static_cast<std::size_t>(j)] = e.w;
    if (reparam) {
      per_sample.col(j) = df * e.dw;
    } else {
      per_sample.col(j) = (f - df) * e.score;
    }
    if (perturbative) {
      // d/dV0 of the per-sample surrogate is h_{K-1}(V0 + w).
      v0_terms[static_cast<std::size_t>(j)] = truncated_exp(v0 + e.w, order - 1);
    }
  }
  GradientEstimate out;
  summarize(per_sample, v0_terms, out);
  out.objective = pairwise_mean(values);
  out.elbo = pairwise_mean(ws);
  return out;
}

}  // namespace

SampleTransform transform_for(const BoundSpec& bound) {
  bound.validate();
  switch (bound.kind) {
    case BoundKind::KL:
      return {[](double w) { return w; }, [](double) { return 1.0; }};
    case BoundKind::Perturbative: {
      const int k = bound.order;
      const double v0 = bound.v0;
      return {[k, v0](double w) { return truncated_exp(v0 + w, k); },
              [k, v0](double w) { return truncated_exp(v0 + w, k - 1); }};
    }
    case BoundKind::Alpha: {
      const double a = 1.0 - bound.alpha;
      const double v0 = bound.v0;
      return {[a, v0](double w) { return std::exp(a * (w + v0)) / a; },
              [a, v0](double w) { return std::exp(a * (w + v0)); }};
    }
  }
  throw InputError("transform_for: unknown bound kind");
}

GradientEstimate reparam_gradient(const BoundSpec& bound, const Model& model,
                                  const VariationalParams& params, const Draws& draws) {
  require_draws(draws, params, model, "reparam_gradient");
  return run(transform_for(bound), bound.kind == BoundKind::Perturbative, bound.order,
             bound.v0, model, params, draws, true);
}

GradientEstimate score_gradient(const BoundSpec& bound, const Model& model,
                                const VariationalParams& params, const Draws& draws) {
  require_draws(draws, params, model, "score_gradient");
  return run(transform_for(bound), bound.kind == BoundKind::Perturbative, bound.order,
             bound.v0, model, params, draws, false);
}

GradientEstimate score_gradient(const SampleTransform& transform, const Model& model,
                                const VariationalParams& params, const Draws& draws) {
  require_draws(draws, params, model, "score_gradient");
  return run(transform, false, 1, 0.0, model, params, draws, false);
}

GradientEstimate estimate_gradient(EstimatorKind kind, const BoundSpec& bound,
                                   const Model& model, const VariationalParams& params,
                                   const Draws& draws) {
  return kind == EstimatorKind::Reparameterization
             ? reparam_gradient(bound, model, params, draws)
             : score_gradient(bound, model, params, draws);
}

double v0_update_direction(double g_v0, double surrogate) { return g_v0 - surrogate; }

double gradient_variance_profile(const BoundSpec& bound, const Model& model,
                                 const VariationalParams& params, int n_samples,
                                 const VarianceOptions& options) {
  return gradient_variance_profile(std::vector<BoundSpec>{bound}, model, params,
                                   n_samples, options)
      .front();
}

std::vector<double> gradient_variance_profile(const std::vector<BoundSpec>& bounds,
                                              const Model& model,
                                              const VariationalParams& params,
                                              int n_samples,
                                              const VarianceOptions& options) {
  if (n_samples < 100) {
    throw InputError("gradient_variance_profile: need at least 100 samples");
  }
  if (params.dim() != model.dim()) {
    throw InputError("gradient_variance_profile: params and model dimensions differ");
  }
  const bool reparam = options.estimator == EstimatorKind::Reparameterization;
  if (reparam && !model.has_gradient()) {
    throw CapabilityError("reparameterization gradient needs model z-gradients");
  }
  std::vector<SampleTransform> transforms;
  for (const auto& b : bounds) transforms.push_back(transform_for(b));

  const int n = params.dim();
  const int coords = options.coords == VarianceCoords::Mean ? n : 2 * n;
  // Welford accumulators, one column per bound.
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(coords, static_cast<Eigen::Index>(bounds.size()));
  Eigen::MatrixXd m2 = mean;
  NoiseStream stream(options.seed, options.stream);
  for (int s = 0; s < n_samples; ++s) {
    const NoiseDraw d = stream.next(n);
    const SampleEval e = evaluate(model, params, d.eps, reparam);
    for (std::size_t b = 0; b < bounds.size(); ++b) {
      const double f = transforms[b].value(e.w);
      const double df = transforms[b].slope(e.w);
      const Eigen::VectorXd g =
          reparam ? Eigen::VectorXd(df * e.dw.head(coords))
                  : Eigen::VectorXd((f - df) * e.score.head(coords));
      const auto col = static_cast<Eigen::Index>(b);
      const Eigen::VectorXd delta = g - mean.col(col);
      mean.col(col) += delta / (s + 1);
      m2.col(col) += (delta.array() * (g - mean.col(col)).array()).matrix();
    }
  }
  std::vector<double> out;
  for (std::size_t b = 0; b < bounds.size(); ++b) {
    out.push_back(m2.col(static_cast<Eigen::Index>(b)).mean() / (n_samples - 1));
  }
  return out;
}

}  // namespace pvi
