#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "pvi/model.hpp"
#include "pvi/oracle.hpp"
#include "pvi/rng.hpp"
#include "pvi/variational.hpp"

namespace pvi {

enum class BoundKind { KL, Perturbative, Alpha };

// Which objective to optimize. `v0` is the reference energy: the optimizer's
// V0 for Perturbative, and a fixed rescaling exp((1-alpha) v0) for Alpha
// (0 gives the raw bound).
struct BoundSpec {
  BoundKind kind = BoundKind::KL;
  int order = 1;
  double v0 = 0.0;
  double alpha = 0.5;

  static BoundSpec kl();
  static BoundSpec perturbative(int order, double v0 = 0.0);
  static BoundSpec alpha_bound(double alpha, double v0 = 0.0);

  void validate() const;
  std::string label() const;
};

nlohmann::json to_json(const BoundSpec& bound);
BoundSpec bound_from_json(const nlohmann::json& j);

using Draws = std::vector<NoiseDraw>;

// V(x, z) = log q(z) - log p(x, z)
double interaction_energy(const Model& model, const VariationalParams& params,
                          const Eigen::VectorXd& z);

// One energy per draw, z = mu + sigma * eps.
std::vector<double> energy_samples(const Model& model, const VariationalParams& params,
                                   const Draws& draws);

double elbo_estimate(const Model& model, const VariationalParams& params,
                     const Draws& draws);

// f(xi) = e^{-V0} sum_{k=0}^{K} (V0 + log xi)^k / k! and its first two
// derivatives in xi.
double f_perturbative(double xi, double v0, int order);
double f_perturbative_d1(double xi, double v0, int order);
double f_perturbative_d2(double xi, double v0, int order);

// Mean over draws of sum_{k<=K} (V0 - V)^k / k!.
double surrogate_value(const Model& model, const VariationalParams& params,
                       double v0, int order, const Draws& draws);

struct BoundValue {
  double value = 0.0;     // may be inf or 0 when log_space is set
  double log_abs = 0.0;   // log |value|
  int sign = 1;
  double surrogate = 0.0;
  double v0 = 0.0;
  bool log_space = false;  // |V0| > 700: e^{-V0} would over/underflow
};

BoundValue perturbative_bound_value(const Model& model, const VariationalParams& params,
                                    double v0, int order, const Draws& draws);

// Mean over draws of exp(-(1 - alpha) V), summed in log space.
double alpha_bound_value(const Model& model, const VariationalParams& params,
                         double alpha, const Draws& draws);
double log_alpha_bound_value(const Model& model, const VariationalParams& params,
                             double alpha, const Draws& draws);

// -E V + E(V-EV)^2 / 2 [- E(V-EV)^3 / 6]; approximates log p(x), not a bound.
// Expectations are taken by quadrature (N <= 2 only).
double cumulant_diagnostic(const Model& model, const VariationalParams& params,
                           int order,
                           const std::optional<QuadratureGrid>& grid = std::nullopt);

struct Theorem1Report {
  bool concave = true;           // f'' <= 0 everywhere on the grid
  bool below_identity = true;    // f(xi) <= xi + tol
  bool tangent_slope_one = true; // |f'(e^{-V0}) - 1| <= tol
  double max_second_derivative = 0.0;
  double max_excess = 0.0;       // max f(xi) - xi
  double tangent_slope = 0.0;
  std::size_t violations = 0;
  bool all() const { return concave && below_identity && tangent_slope_one; }
};

Theorem1Report check_theorem1(double v0, int order, const std::vector<double>& grid,
                              double excess_tol = 1e-12, double slope_tol = 1e-8);

struct Theorem2Report {
  bool positive = true;
  double min_value = 0.0;        // min of h on the grid
  double argmin = 0.0;           // refined minimizer
  double value_at_argmin = 0.0;
  double predicted = 0.0;        // argmin^{K-1} / (K-1)!
  bool min_matches = true;
};

// h(u) = sum_{k=0}^{K-1} u^k / k!
double theorem2_h(double u, int order);
Theorem2Report check_theorem2_h(int order, const std::vector<double>& grid,
                                double tol = 1e-10);

std::vector<double> log_grid(double lo, double hi, int n);
std::vector<double> linear_grid(double lo, double hi, int n);

}  // namespace pvi
