#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pvi/model.hpp"
#include "pvi/variational.hpp"

namespace pvi {

// Deterministic reference computations for models with at most two latent
// dimensions. Nothing in here touches a random number generator.

enum class QuadratureRule { Trapezoid, GaussHermite };

struct QuadratureGrid {
  QuadratureRule rule = QuadratureRule::Trapezoid;
  int nodes = 2048;  // per dimension
  // Per-dimension [lo, hi]. Gauss-Hermite reads this as centre +- 10 scales.
  std::vector<std::pair<double, double>> ranges;

  int dim() const { return static_cast<int>(ranges.size()); }
  void validate() const;
  QuadratureGrid refined() const;  // same ranges, twice the nodes
};

inline constexpr int kDefaultNodes1D = 2048;
inline constexpr int kDefaultNodes2D = 512;
inline constexpr int kDefaultGaussHermiteNodes = 96;

int default_nodes(int dim, QuadratureRule rule = QuadratureRule::Trapezoid);

// Tensor grid flattened to points and weights (the weights integrate
// Lebesgue measure, not a density).
struct GridPoints {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
};

GridPoints expand(const QuadratureGrid& grid);

// Gauss-Hermite nodes/weights for the weight function exp(-x^2).
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

// mu_i +- 10 sigma_i.
QuadratureGrid grid_for_q(const VariationalParams& params,
                          QuadratureRule rule = QuadratureRule::Trapezoid,
                          int nodes = 0);

// Posterior mean +- 10 posterior std, located with a coarse pilot pass over
// [-pilot_halfwidth, pilot_halfwidth]^N.
QuadratureGrid grid_for_model(const Model& model,
                              QuadratureRule rule = QuadratureRule::Trapezoid,
                              int nodes = 0, double pilot_halfwidth = 50.0);

struct MarginalLikelihood {
  double value = 0.0;
  double log_value = 0.0;
  double error_estimate = 0.0;  // |I(M) - I(2M)|
};

MarginalLikelihood marginal_likelihood(const Model& model,
                                       const QuadratureGrid& grid);
MarginalLikelihood marginal_likelihood(const Model& model);

struct PosteriorMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

PosteriorMoments posterior_moments(const Model& model, const QuadratureGrid& grid);
PosteriorMoments posterior_moments(const Model& model);

// V = log q - log p(x, z) tabulated on a grid together with normalized
// q-weights, so several expectations can share one pass over the model.
class EnergyTable {
 public:
  EnergyTable(const Model& model, const VariationalParams& params,
              const QuadratureGrid& grid);
  EnergyTable(const Model& model, const VariationalParams& params);

  // E_q[g(V)].
  double expect(const std::function<double(double)>& g) const;

  double mean_energy() const;
  double elbo() const { return -mean_energy(); }
  // E_q[(V0 - V)^k]
  double power(double v0, int k) const;
  // E_q[sum_{k<=K} (V0 - V)^k / k!]
  double surrogate(double v0, int order) const;
  // e^{-V0} * surrogate
  double bound(double v0, int order) const;
  // E_q[exp((1 - alpha)(V0 - V))]
  double alpha_moment(double alpha, double v0 = 0.0) const;
  // Central moments of V under q: {E V, E (V-EV)^2, E (V-EV)^3}.
  std::array<double, 3> central_moments() const;

  std::size_t size() const { return energy_.size(); }

 private:
  std::vector<double> energy_;
  std::vector<double> weight_;  // sums to one
};

double exact_expectation_power(const Model& model, const VariationalParams& params,
                               double v0, int k, const QuadratureGrid& grid);
double exact_expectation_power(const Model& model, const VariationalParams& params,
                               double v0, int k);

double exact_elbo(const Model& model, const VariationalParams& params);
double exact_surrogate(const Model& model, const VariationalParams& params,
                       double v0, int order);
double exact_perturbative_bound(const Model& model, const VariationalParams& params,
                                double v0, int order);

// Central differences with h_i = step * (1 + |x_i|).
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step = 1e-5);

}  // namespace pvi
