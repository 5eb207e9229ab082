#pragma once

#include <cstdint>

#include <Eigen/Dense>
#include "json.hpp"

namespace pvi {

// Fully factorized Gaussian q(z) = prod_i N(z_i; mu_i, exp(2 rho_i)).
// rho is the log standard deviation, so sigma stays positive under plain SGD.
struct VariationalParams {
  Eigen::VectorXd mu;
  Eigen::VectorXd rho;

  VariationalParams() = default;
  VariationalParams(Eigen::VectorXd mu_, Eigen::VectorXd rho_);

  int dim() const { return static_cast<int>(mu.size()); }
  Eigen::VectorXd sigma() const { return rho.array().exp(); }

  // Stacked [mu; rho], the layout used for all 2N-vectors.
  Eigen::VectorXd flatten() const;
  static VariationalParams unflatten(const Eigen::VectorXd& flat);

  // mu ~ N(0, 0.1^2) i.i.d. and rho = 0.
  static VariationalParams random_init(int dim, std::uint64_t seed);
  static VariationalParams standard(int dim);

  bool all_finite() const;
};

Eigen::VectorXd reparameterize(const VariationalParams& params,
                               const Eigen::VectorXd& eps);

double log_q(const VariationalParams& params, const Eigen::VectorXd& z);

Eigen::VectorXd grad_log_q_in_z(const VariationalParams& params,
                                const Eigen::VectorXd& z);

// Score vector [d/dmu; d/drho] log q(z) at fixed z.
Eigen::VectorXd grad_log_q_in_lambda(const VariationalParams& params,
                                     const Eigen::VectorXd& z);

double entropy(const VariationalParams& params);

nlohmann::json to_json(const VariationalParams& params);
VariationalParams params_from_json(const nlohmann::json& j);

}  // namespace pvi
