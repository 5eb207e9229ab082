#include "pvi/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "pvi/errors.hpp"
#include "pvi/numeric.hpp"

namespace pvi {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

void require_dim(const Eigen::VectorXd& z, int dim, const char* who) {
  if (z.size() != dim) {
    throw InputError(std::string(who) + ": expected dimension " +
                     std::to_string(dim) + ", got " + std::to_string(z.size()));
  }
}

double matern32(double r, const KernelConfig& cfg) {
  const double a = kSqrt3 * r / cfg.l;
  return cfg.s * cfg.s * (1.0 + a) * std::exp(-a);
}

void require_finite_points(const Eigen::MatrixXd& points) {
  if (!points.allFinite()) {
    throw InputError("matern32_kernel: non-finite point coordinates");
  }
}

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

}  // namespace

// ---------------------------------------------------------------------------

FunctionModel::FunctionModel(int dim, std::string name, LogJoint log_joint,
                             Gradient gradient)
    : dim_(dim),
      name_(std::move(name)),
      log_joint_(std::move(log_joint)),
      gradient_(std::move(gradient)) {
  if (dim_ < 1) throw InputError("FunctionModel: dim must be positive");
  if (!log_joint_) throw InputError("FunctionModel: log_joint is required");
}

double FunctionModel::log_joint(const Eigen::VectorXd& z) const {
  require_dim(z, dim_, "FunctionModel::log_joint");
  return log_joint_(z);
}

Eigen::VectorXd FunctionModel::grad_log_joint(const Eigen::VectorXd& z) const {
  if (!gradient_) {
    throw CapabilityError("model '" + name_ + "' provides no z-gradient");
  }
  require_dim(z, dim_, "FunctionModel::grad_log_joint");
  return gradient_(z);
}

// ---------------------------------------------------------------------------

void KernelConfig::validate() const {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw InputError("KernelConfig: signal scale s must be positive");
  }
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw InputError("KernelConfig: length scale l must be positive");
  }
}

Eigen::MatrixXd matern32_kernel(const Eigen::MatrixXd& points,
                                const KernelConfig& cfg) {
  cfg.validate();
  require_finite_points(points);
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = cfg.s * cfg.s;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = matern32((points.row(i) - points.row(j)).norm(), cfg);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

Eigen::MatrixXd matern32_cross(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b,
                               const KernelConfig& cfg) {
  cfg.validate();
  require_finite_points(a);
  require_finite_points(b);
  if (a.cols() != b.cols()) {
    throw InputError("matern32_cross: point dimensions differ");
  }
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      out(i, j) = matern32((a.row(i) - b.row(j)).norm(), cfg);
    }
  }
  return out;
}

JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) {
    throw InputError("cholesky_with_jitter: expected a non-empty square matrix");
  }
  const double scale = gram.diagonal().mean();
  JitteredCholesky out;
  double jitter = 0.0;
  double next = 1e-10 * scale;
  const double max_jitter = 1e-4 * scale * (1.0 + 1e-12);
  while (true) {
    out.matrix = gram;
    out.matrix.diagonal().array() += jitter;
    out.llt.compute(out.matrix);
    if (out.llt.info() == Eigen::Success &&
        (out.llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      break;
    }
    if (next > max_jitter) {
      throw NumericalError("Cholesky failed after maximum jitter " +
                           std::to_string(jitter));
    }
    jitter = next;
    next *= 10.0;
  }
  out.jitter = jitter;
  const Eigen::MatrixXd lower = out.llt.matrixL();
  out.log_det = 2.0 * lower.diagonal().array().log().sum();
  return out;
}

GaussianPrior::GaussianPrior(const Eigen::MatrixXd& gram)
    : chol_(cholesky_with_jitter(gram)) {}

double GaussianPrior::log_density(const Eigen::VectorXd& f) const {
  require_dim(f, dim(), "GaussianPrior::log_density");
  const Eigen::VectorXd half = chol_.llt.matrixL().solve(f);
  return -0.5 * (half.squaredNorm() + chol_.log_det + dim() * kLog2Pi);
}

Eigen::VectorXd GaussianPrior::solve(const Eigen::VectorXd& f) const {
  return chol_.llt.solve(f);
}

Eigen::MatrixXd GaussianPrior::solve_matrix(const Eigen::MatrixXd& m) const {
  return chol_.llt.solve(m);
}

// ---------------------------------------------------------------------------

ConjugateGaussianModel::ConjugateGaussianModel(double prior_var,
                                               double noise_var, double x_obs)
    : prior_var_(prior_var), noise_var_(noise_var), x_obs_(x_obs) {
  if (!(prior_var > 0.0) || !(noise_var > 0.0)) {
    throw InputError("conjugate_gaussian_model: variances must be positive");
  }
}

double ConjugateGaussianModel::log_joint(const Eigen::VectorXd& z) const {
  require_dim(z, 1, "ConjugateGaussianModel::log_joint");
  return log_normal(z[0], 0.0, prior_var_) + log_normal(x_obs_, z[0], noise_var_);
}

Eigen::VectorXd ConjugateGaussianModel::grad_log_joint(
    const Eigen::VectorXd& z) const {
  require_dim(z, 1, "ConjugateGaussianModel::grad_log_joint");
  Eigen::VectorXd g(1);
  g[0] = -z[0] / prior_var_ + (x_obs_ - z[0]) / noise_var_;
  return g;
}

double ConjugateGaussianModel::log_evidence() const {
  return log_normal(x_obs_, 0.0, prior_var_ + noise_var_);
}

double ConjugateGaussianModel::evidence() const {
  return std::exp(log_evidence());
}

double ConjugateGaussianModel::posterior_mean() const {
  return x_obs_ * prior_var_ / (prior_var_ + noise_var_);
}

double ConjugateGaussianModel::posterior_var() const {
  return prior_var_ * noise_var_ / (prior_var_ + noise_var_);
}

ConjugateGaussianModel conjugate_gaussian_model(double prior_var,
                                                double noise_var,
                                                double x_obs) {
  return ConjugateGaussianModel(prior_var, noise_var, x_obs);
}

// ---------------------------------------------------------------------------

ProductModel::ProductModel(std::vector<std::shared_ptr<const Model>> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InputError("ProductModel: no blocks");
  for (const auto& b : blocks_) {
    if (!b) throw InputError("ProductModel: null block");
    dim_ += b->dim();
  }
}

std::string ProductModel::name() const {
  std::string out = "product(";
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (i) out += ",";
    out += blocks_[i]->name();
  }
  return out + ")";
}

double ProductModel::log_joint(const Eigen::VectorXd& z) const {
  require_dim(z, dim_, "ProductModel::log_joint");
  double acc = 0.0;
  Eigen::Index offset = 0;
  for (const auto& b : blocks_) {
    acc += b->log_joint(z.segment(offset, b->dim()));
    offset += b->dim();
  }
  return acc;
}

bool ProductModel::has_gradient() const {
  return std::all_of(blocks_.begin(), blocks_.end(),
                     [](const auto& b) { return b->has_gradient(); });
}

Eigen::VectorXd ProductModel::grad_log_joint(const Eigen::VectorXd& z) const {
  require_dim(z, dim_, "ProductModel::grad_log_joint");
  Eigen::VectorXd g(dim_);
  Eigen::Index offset = 0;
  for (const auto& b : blocks_) {
    g.segment(offset, b->dim()) = b->grad_log_joint(z.segment(offset, b->dim()));
    offset += b->dim();
  }
  return g;
}

// ---------------------------------------------------------------------------

BimodalTarget BimodalTarget::symmetric(double half_gap, double std) {
  return BimodalTarget{-half_gap, half_gap, std, 0.5, 0.5};
}

void BimodalTarget::validate() const {
  if (!(c1 < c2)) throw InputError("BimodalTarget: requires c1 < c2");
  if (!(component_std > 0.0)) {
    throw InputError("BimodalTarget: component_std must be positive");
  }
  if (w1 < 0.0 || w2 < 0.0 || std::abs(w1 + w2 - 1.0) > 1e-12) {
    throw InputError("BimodalTarget: weights must be non-negative and sum to 1");
  }
}

namespace {

// Per-component log(w_k N(z; c_k, std^2)); -inf for zero weight.
std::pair<double, double> component_logs(const BimodalTarget& t, double z) {
  const double var = t.component_std * t.component_std;
  const double ninf = -std::numeric_limits<double>::infinity();
  const double a = t.w1 > 0.0 ? std::log(t.w1) + log_normal(z, t.c1, var) : ninf;
  const double b = t.w2 > 0.0 ? std::log(t.w2) + log_normal(z, t.c2, var) : ninf;
  return {a, b};
}

}  // namespace

double bimodal_log_density(const BimodalTarget& target, double z) {
  const auto [a, b] = component_logs(target, z);
  const double terms[2] = {a, b};
  return log_sum_exp(terms);
}

double bimodal_grad_log_density(const BimodalTarget& target, double z) {
  const auto [a, b] = component_logs(target, z);
  const double terms[2] = {a, b};
  const double total = log_sum_exp(terms);
  const double r1 = std::exp(a - total);
  const double r2 = std::exp(b - total);
  const double var = target.component_std * target.component_std;
  return (r1 * (target.c1 - z) + r2 * (target.c2 - z)) / var;
}

BimodalModel::BimodalModel(BimodalTarget target) : target_(target) {
  target_.validate();
}

double BimodalModel::log_joint(const Eigen::VectorXd& z) const {
  require_dim(z, 1, "BimodalModel::log_joint");
  return bimodal_log_density(target_, z[0]);
}

Eigen::VectorXd BimodalModel::grad_log_joint(const Eigen::VectorXd& z) const {
  require_dim(z, 1, "BimodalModel::grad_log_joint");
  Eigen::VectorXd g(1);
  g[0] = bimodal_grad_log_density(target_, z[0]);
  return g;
}

// ---------------------------------------------------------------------------

GPRegressionModel::GPRegressionModel(Eigen::MatrixXd inputs, Eigen::VectorXd y,
                                     KernelConfig kernel, double noise_std)
    : inputs_(std::move(inputs)),
      y_(std::move(y)),
      kernel_(kernel),
      noise_std_(noise_std),
      prior_(matern32_kernel(inputs_, kernel_)) {
  if (inputs_.rows() != y_.size()) {
    throw InputError("GPRegressionModel: inputs and observations differ in length");
  }
  if (!(noise_std_ > 0.0)) {
    throw InputError("GPRegressionModel: noise_std must be positive");
  }
  if (!y_.allFinite()) throw InputError("GPRegressionModel: non-finite y");
}

double GPRegressionModel::log_joint(const Eigen::VectorXd& f) const {
  require_dim(f, dim(), "GPRegressionModel::log_joint");
  const double var = noise_std_ * noise_std_;
  const double sq = (y_ - f).squaredNorm();
  return prior_.log_density(f) -
         0.5 * (dim() * (kLog2Pi + std::log(var)) + sq / var);
}

Eigen::VectorXd GPRegressionModel::grad_log_joint(
    const Eigen::VectorXd& f) const {
  require_dim(f, dim(), "GPRegressionModel::grad_log_joint");
  return -prior_.solve(f) + (y_ - f) / (noise_std_ * noise_std_);
}

GPRegressionModel::Posterior GPRegressionModel::analytic_posterior() const {
  // mean = K (K + e^2 I)^{-1} y = y - e^2 (K + e^2 I)^{-1} y
  // cov  = K - K (K + e^2 I)^{-1} K = e^2 I - e^4 (K + e^2 I)^{-1}
  const double var = noise_std_ * noise_std_;
  const int n = dim();
  Eigen::MatrixXd shifted = prior_.gram();
  shifted.diagonal().array() += var;
  const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("gp_regression_analytic_posterior: factorization failed");
  }
  Posterior post;
  post.mean = y_ - var * llt.solve(y_);
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  post.cov = var * Eigen::MatrixXd::Identity(n, n) - var * var * inv;
  post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
  return post;
}

GPRegressionModel::Posterior gp_regression_analytic_posterior(
    const GPRegressionModel& model) {
  return model.analytic_posterior();
}

// ---------------------------------------------------------------------------

GPClassificationModel::GPClassificationModel(Eigen::MatrixXd inputs,
                                             Eigen::VectorXd labels,
                                             KernelConfig kernel)
    : inputs_(std::move(inputs)),
      labels_(std::move(labels)),
      kernel_(kernel),
      prior_(matern32_kernel(inputs_, kernel_)) {
  if (inputs_.rows() != labels_.size()) {
    throw InputError("GPClassificationModel: inputs and labels differ in length");
  }
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_[i] != 0.0 && labels_[i] != 1.0) {
      throw InputError("GPClassificationModel: labels must be 0 or 1");
    }
  }
}

double GPClassificationModel::log_likelihood(const Eigen::VectorXd& f) const {
  require_dim(f, dim(), "GPClassificationModel::log_likelihood");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    acc += labels_[i] == 1.0 ? log_sigmoid(f[i]) : log_sigmoid(-f[i]);
  }
  return acc;
}

double GPClassificationModel::log_joint(const Eigen::VectorXd& f) const {
  return prior_.log_density(f) + log_likelihood(f);
}

Eigen::VectorXd GPClassificationModel::grad_log_joint(
    const Eigen::VectorXd& f) const {
  require_dim(f, dim(), "GPClassificationModel::grad_log_joint");
  Eigen::VectorXd g = -prior_.solve(f);
  for (Eigen::Index i = 0; i < f.size(); ++i) g[i] += labels_[i] - sigmoid(f[i]);
  return g;
}

Eigen::VectorXd GPClassificationModel::predict_latent(
    const Eigen::MatrixXd& test_inputs, const Eigen::VectorXd& f_mean) const {
  require_dim(f_mean, dim(), "GPClassificationModel::predict_latent");
  return matern32_cross(test_inputs, inputs_, kernel_) * prior_.solve(f_mean);
}

}  // namespace pvi
