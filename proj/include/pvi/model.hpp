#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pvi {

// Target density contract: log p(x, z) with the data x bound at construction.
// Implementations are immutable after construction, so log_joint and
// grad_log_joint may be called concurrently.
class Model {
 public:
  virtual ~Model() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual double log_joint(const Eigen::VectorXd& z) const = 0;

  // Models that cannot provide z-gradients return false and throw
  // CapabilityError from grad_log_joint.
  virtual bool has_gradient() const { return true; }
  virtual Eigen::VectorXd grad_log_joint(const Eigen::VectorXd& z) const = 0;
};

// Wraps plain callables; mostly for tests and ad-hoc targets.
class FunctionModel final : public Model {
 public:
  using LogJoint = std::function<double(const Eigen::VectorXd&)>;
  using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  FunctionModel(int dim, std::string name, LogJoint log_joint,
                Gradient gradient = {});

  int dim() const override { return dim_; }
  std::string name() const override { return name_; }
  double log_joint(const Eigen::VectorXd& z) const override;
  bool has_gradient() const override { return static_cast<bool>(gradient_); }
  Eigen::VectorXd grad_log_joint(const Eigen::VectorXd& z) const override;

 private:
  int dim_;
  std::string name_;
  LogJoint log_joint_;
  Gradient gradient_;
};

// ---------------------------------------------------------------------------
// Kernels

struct KernelConfig {
  double s = 1.0;  // signal scale
  double l = 1.0;  // length scale

  void validate() const;
};

// Matern-3/2 Gram matrix over the rows of `points` (N x D):
//   s^2 (1 + sqrt(3) r / l) exp(-sqrt(3) r / l),  r = ||x_i - x_j||_2.
Eigen::MatrixXd matern32_kernel(const Eigen::MatrixXd& points,
                                const KernelConfig& cfg);

// Cross-covariance between rows of `a` and rows of `b`.
Eigen::MatrixXd matern32_cross(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b,
                               const KernelConfig& cfg);

// Cholesky with escalating diagonal jitter: none, then 1e-10 * mean(diag),
// growing by 10x up to 1e-4 * mean(diag). Throws NumericalError beyond that.
struct JitteredCholesky {
  Eigen::MatrixXd matrix;  // input plus the jitter that was applied
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  double log_det = 0.0;
};

JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& gram);

// Zero-mean Gaussian N(0, gram), factorized once.
class GaussianPrior {
 public:
  explicit GaussianPrior(const Eigen::MatrixXd& gram);

  int dim() const { return static_cast<int>(chol_.matrix.rows()); }
  double log_density(const Eigen::VectorXd& f) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& f) const;
  Eigen::MatrixXd solve_matrix(const Eigen::MatrixXd& m) const;
  const Eigen::MatrixXd& gram() const { return chol_.matrix; }
  double jitter() const { return chol_.jitter; }
  double log_det() const { return chol_.log_det; }

 private:
  JitteredCholesky chol_;
};

// ---------------------------------------------------------------------------
// Conjugate Gaussian: z ~ N(0, prior_var), x | z ~ N(z, noise_var).

class ConjugateGaussianModel final : public Model {
 public:
  ConjugateGaussianModel(double prior_var, double noise_var, double x_obs);

  int dim() const override { return 1; }
  std::string name() const override { return "conjugate_gaussian"; }
  double log_joint(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd grad_log_joint(const Eigen::VectorXd& z) const override;

  double log_evidence() const;
  double evidence() const;
  double posterior_mean() const;
  double posterior_var() const;

 private:
  double prior_var_;
  double noise_var_;
  double x_obs_;
};

ConjugateGaussianModel conjugate_gaussian_model(double prior_var,
                                                double noise_var, double x_obs);

// Independent blocks stacked into one latent vector; log p is the sum.
class ProductModel final : public Model {
 public:
  explicit ProductModel(std::vector<std::shared_ptr<const Model>> blocks);

  int dim() const override { return dim_; }
  std::string name() const override;
  double log_joint(const Eigen::VectorXd& z) const override;
  bool has_gradient() const override;
  Eigen::VectorXd grad_log_joint(const Eigen::VectorXd& z) const override;

  const std::vector<std::shared_ptr<const Model>>& blocks() const {
    return blocks_;
  }

 private:
  std::vector<std::shared_ptr<const Model>> blocks_;
  int dim_ = 0;
};

// ---------------------------------------------------------------------------
// Two-component 1-D Gaussian mixture.

struct BimodalTarget {
  double c1 = -2.0;
  double c2 = 2.0;
  double component_std = 0.75;
  double w1 = 0.3;
  double w2 = 0.7;

  // Equal-weight variant centred on zero.
  static BimodalTarget symmetric(double half_gap = 2.0, double std = 0.75);

  void validate() const;
};

double bimodal_log_density(const BimodalTarget& target, double z);

// d/dz log density, i.e. responsibility-weighted component scores.
double bimodal_grad_log_density(const BimodalTarget& target, double z);

class BimodalModel final : public Model {
 public:
  explicit BimodalModel(BimodalTarget target);

  int dim() const override { return 1; }
  std::string name() const override { return "bimodal"; }
  double log_joint(const Eigen::VectorXd& z) const override;
  Eigen::VectorXd grad_log_joint(const Eigen::VectorXd& z) const override;

  const BimodalTarget& target() const { return target_; }

 private:
  BimodalTarget target_;
};

// ---------------------------------------------------------------------------
// GP regression: f ~ GP(0, K), y_i ~ N(f_i, noise_std^2).

class GPRegressionModel final : public Model {
 public:
  struct Posterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
  };

  // `inputs` holds one point per row.
  GPRegressionModel(Eigen::MatrixXd inputs, Eigen::VectorXd y,
                    KernelConfig kernel, double noise_std);

  int dim() const override { return static_cast<int>(y_.size()); }
  std::string name() const override { return "gp_regression"; }
  double log_joint(const Eigen::VectorXd& f) const override;
  Eigen::VectorXd grad_log_joint(const Eigen::VectorXd& f) const override;

  Posterior analytic_posterior() const;

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& observations() const { return y_; }
  const KernelConfig& kernel() const { return kernel_; }
  double noise_std() const { return noise_std_; }
  const GaussianPrior& prior() const { return prior_; }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd y_;
  KernelConfig kernel_;
  double noise_std_;
  GaussianPrior prior_;
};

GPRegressionModel::Posterior gp_regression_analytic_posterior(
    const GPRegressionModel& model);

// ---------------------------------------------------------------------------
// GP classification: f ~ GP(0, K), y_i ~ Bern(sigmoid(f_i)).

class GPClassificationModel final : public Model {
 public:
  GPClassificationModel(Eigen::MatrixXd inputs, Eigen::VectorXd labels,
                        KernelConfig kernel);

  int dim() const override { return static_cast<int>(labels_.size()); }
  std::string name() const override { return "gp_classification"; }
  double log_joint(const Eigen::VectorXd& f) const override;
  Eigen::VectorXd grad_log_joint(const Eigen::VectorXd& f) const override;

  // Bernoulli log-likelihood part only.
  double log_likelihood(const Eigen::VectorXd& f) const;

  // Predictive latent mean at new inputs given a latent mean at the training
  // inputs: K(test, train) K^{-1} f_mean.
  Eigen::VectorXd predict_latent(const Eigen::MatrixXd& test_inputs,
                                 const Eigen::VectorXd& f_mean) const;

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& labels() const { return labels_; }
  const KernelConfig& kernel() const { return kernel_; }
  const GaussianPrior& prior() const { return prior_; }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd labels_;
  KernelConfig kernel_;
  GaussianPrior prior_;
};

}  // namespace pvi
