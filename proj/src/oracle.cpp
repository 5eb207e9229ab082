#include "pvi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pvi/errors.hpp"
#include "pvi/numeric.hpp"

namespace pvi {

namespace {

constexpr int kMaxGaussHermiteNodes = 320;
constexpr double kPi = 3.14159265358979323846;

void require_small(int dim, const char* who) {
  if (dim > 2) {
    throw UnsupportedError(std::string(who) +
                           ": quadrature is limited to dimension <= 2");
  }
  if (dim < 1) throw InputError(std::string(who) + ": empty dimension");
}

void axis_rule(const QuadratureGrid& grid, int d, std::vector<double>& x,
               std::vector<double>& w) {
  const auto [lo, hi] = grid.ranges[static_cast<std::size_t>(d)];
  const int m = grid.nodes;
  x.assign(static_cast<std::size_t>(m), 0.0);
  w.assign(static_cast<std::size_t>(m), 0.0);
  if (grid.rule == QuadratureRule::Trapezoid) {
    const double h = (hi - lo) / (m - 1);
    for (int i = 0; i < m; ++i) {
      x[static_cast<std::size_t>(i)] = lo + h * i;
      w[static_cast<std::size_t>(i)] = (i == 0 || i == m - 1) ? 0.5 * h : h;
    }
    x.back() = hi;
    return;
  }
  std::vector<double> t;
  std::vector<double> wt;
  gauss_hermite(m, t, wt);
  const double centre = 0.5 * (lo + hi);
  const double scale = (hi - lo) / 20.0;
  const double jac = std::sqrt(2.0) * scale;
  for (int i = 0; i < m; ++i) {
    x[static_cast<std::size_t>(i)] = centre + jac * t[static_cast<std::size_t>(i)];
    w[static_cast<std::size_t>(i)] = jac * wt[static_cast<std::size_t>(i)];
  }
}

struct Pilot {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

Pilot pilot_pass(const Model& model, const QuadratureGrid& grid) {
  const GridPoints gp = expand(grid);
  std::vector<double> logs(gp.points.size());
  for (std::size_t i = 0; i < gp.points.size(); ++i) {
    logs[i] = std::log(gp.weights[i]) + model.log_joint(gp.points[i]);
  }
  const double top = log_sum_exp(logs);
  const int n = grid.dim();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < gp.points.size(); ++i) {
    const double p = std::exp(logs[i] - top);
    m1 += p * gp.points[i];
    m2 += p * gp.points[i].cwiseAbs2();
  }
  Pilot out;
  out.mean = m1;
  out.sd = (m2 - m1.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace

void QuadratureGrid::validate() const {
  require_small(dim(), "QuadratureGrid");
  if (nodes < 32) throw InputError("QuadratureGrid: need at least 32 nodes");
  if (rule == QuadratureRule::GaussHermite && nodes > kMaxGaussHermiteNodes) {
    throw InputError("QuadratureGrid: too many Gauss-Hermite nodes");
  }
  for (const auto& [lo, hi] : ranges) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw InputError("QuadratureGrid: invalid range");
    }
  }
}

QuadratureGrid QuadratureGrid::refined() const {
  QuadratureGrid out = *this;
  out.nodes = rule == QuadratureRule::Trapezoid ? 2 * nodes - 1 : 2 * nodes;
  if (rule == QuadratureRule::GaussHermite) {
    out.nodes = std::min(out.nodes, kMaxGaussHermiteNodes);
  }
  return out;
}

int default_nodes(int dim, QuadratureRule rule) {
  if (rule == QuadratureRule::GaussHermite) return kDefaultGaussHermiteNodes;
  return dim <= 1 ? kDefaultNodes1D : kDefaultNodes2D;
}

void gauss_hermite(int n, std::vector<double>& nodes,
                   std::vector<double>& weights) {
  if (n < 1) throw InputError("gauss_hermite: n must be positive");
  // Golub-Welsch for the starting nodes, then Newton on the orthonormal
  // Hermite functions; weights come from the same recurrence so the outer
  // ones keep full relative precision.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi, Eigen::EigenvaluesOnly);
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  const double psi0_scale = std::pow(kPi, -0.25);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()[i];
    double prev = 0.0;
    double cur = 0.0;
    for (int iter = 0; iter < 4; ++iter) {
      prev = 0.0;
      cur = psi0_scale * std::exp(-0.5 * x * x);
      for (int j = 0; j < n; ++j) {
        const double next = std::sqrt(2.0 / (j + 1)) * x * cur -
                            std::sqrt(static_cast<double>(j) / (j + 1)) * prev;
        prev = cur;
        cur = next;
      }
      // cur = psi_n(x), prev = psi_{n-1}(x)
      if (prev == 0.0) break;
      x -= cur / (std::sqrt(2.0 * n) * prev);
    }
    prev = 0.0;
    cur = psi0_scale * std::exp(-0.5 * x * x);
    for (int j = 0; j + 1 < n; ++j) {
      const double next = std::sqrt(2.0 / (j + 1)) * x * cur -
                          std::sqrt(static_cast<double>(j) / (j + 1)) * prev;
      prev = cur;
      cur = next;
    }
    nodes[static_cast<std::size_t>(i)] = x;
    // w_i * exp(x_i^2) = 1 / (n psi_{n-1}(x_i)^2)
    weights[static_cast<std::size_t>(i)] = 1.0 / (n * cur * cur);
  }
}

GridPoints expand(const QuadratureGrid& grid) {
  grid.validate();
  std::vector<double> x0;
  std::vector<double> w0;
  axis_rule(grid, 0, x0, w0);
  GridPoints gp;
  if (grid.dim() == 1) {
    gp.points.reserve(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) {
      gp.points.push_back(Eigen::VectorXd::Constant(1, x0[i]));
    }
    gp.weights = w0;
    return gp;
  }
  std::vector<double> x1;
  std::vector<double> w1;
  axis_rule(grid, 1, x1, w1);
  gp.points.reserve(x0.size() * x1.size());
  gp.weights.reserve(x0.size() * x1.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    for (std::size_t j = 0; j < x1.size(); ++j) {
      Eigen::VectorXd z(2);
      z << x0[i], x1[j];
      gp.points.push_back(std::move(z));
      gp.weights.push_back(w0[i] * w1[j]);
    }
  }
  return gp;
}

QuadratureGrid grid_for_q(const VariationalParams& params, QuadratureRule rule,
                          int nodes) {
  require_small(params.dim(), "grid_for_q");
  QuadratureGrid grid;
  grid.rule = rule;
  grid.nodes = nodes > 0 ? nodes : default_nodes(params.dim(), rule);
  const Eigen::VectorXd sigma = params.sigma();
  for (int i = 0; i < params.dim(); ++i) {
    grid.ranges.emplace_back(params.mu[i] - 10.0 * sigma[i],
                             params.mu[i] + 10.0 * sigma[i]);
  }
  return grid;
}

QuadratureGrid grid_for_model(const Model& model, QuadratureRule rule, int nodes,
                              double pilot_halfwidth) {
  require_small(model.dim(), "grid_for_model");
  const int n = model.dim();
  QuadratureGrid pilot;
  pilot.nodes = n == 1 ? 801 : 201;
  pilot.ranges.assign(static_cast<std::size_t>(n), {-pilot_halfwidth, pilot_halfwidth});
  // Second pass zooms in so narrow posteriors are resolved before the final
  // range is fixed.
  for (int pass = 0; pass < 2; ++pass) {
    const Pilot p = pilot_pass(model, pilot);
    for (int i = 0; i < n; ++i) {
      const auto [lo, hi] = pilot.ranges[static_cast<std::size_t>(i)];
      const double spacing = (hi - lo) / (pilot.nodes - 1);
      const double half = 15.0 * std::max(p.sd[i], spacing);
      pilot.ranges[static_cast<std::size_t>(i)] = {p.mean[i] - half, p.mean[i] + half};
    }
  }
  const Pilot p = pilot_pass(model, pilot);
  QuadratureGrid grid;
  grid.rule = rule;
  grid.nodes = nodes > 0 ? nodes : default_nodes(n, rule);
  for (int i = 0; i < n; ++i) {
    grid.ranges.emplace_back(p.mean[i] - 10.0 * p.sd[i], p.mean[i] + 10.0 * p.sd[i]);
  }
  return grid;
}

namespace {

double log_integral(const Model& model, const QuadratureGrid& grid) {
  const GridPoints gp = expand(grid);
  std::vector<double> logs(gp.points.size());
  for (std::size_t i = 0; i < gp.points.size(); ++i) {
    logs[i] = std::log(gp.weights[i]) + model.log_joint(gp.points[i]);
  }
  return log_sum_exp(logs);
}

}  // namespace

MarginalLikelihood marginal_likelihood(const Model& model,
                                       const QuadratureGrid& grid) {
  require_small(model.dim(), "marginal_likelihood");
  if (grid.dim() != model.dim()) {
    throw InputError("marginal_likelihood: grid and model dimensions differ");
  }
  MarginalLikelihood out;
  out.log_value = log_integral(model, grid);
  out.value = std::exp(out.log_value);
  out.error_estimate = std::abs(std::exp(log_integral(model, grid.refined())) - out.value);
  return out;
}

MarginalLikelihood marginal_likelihood(const Model& model) {
  require_small(model.dim(), "marginal_likelihood");
  return marginal_likelihood(model, grid_for_model(model));
}

PosteriorMoments posterior_moments(const Model& model, const QuadratureGrid& grid) {
  require_small(model.dim(), "posterior_moments");
  if (grid.dim() != model.dim()) {
    throw InputError("posterior_moments: grid and model dimensions differ");
  }
  const GridPoints gp = expand(grid);
  const std::size_t m = gp.points.size();
  std::vector<double> logs(m);
  for (std::size_t i = 0; i < m; ++i) {
    logs[i] = std::log(gp.weights[i]) + model.log_joint(gp.points[i]);
  }
  const double top = log_sum_exp(logs);
  const int n = model.dim();
  PosteriorMoments out;
  out.mean.resize(n);
  out.var.resize(n);
  std::vector<double> p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = std::exp(logs[i] - top);
  std::vector<double> terms(m);
  for (int d = 0; d < n; ++d) {
    for (std::size_t i = 0; i < m; ++i) terms[i] = p[i] * gp.points[i][d];
    out.mean[d] = pairwise_sum(terms);
    for (std::size_t i = 0; i < m; ++i) {
      const double c = gp.points[i][d] - out.mean[d];
      terms[i] = p[i] * c * c;
    }
    out.var[d] = pairwise_sum(terms);
  }
  return out;
}

PosteriorMoments posterior_moments(const Model& model) {
  require_small(model.dim(), "posterior_moments");
  return posterior_moments(model, grid_for_model(model));
}

// ---------------------------------------------------------------------------

EnergyTable::EnergyTable(const Model& model, const VariationalParams& params,
                         const QuadratureGrid& grid) {
  require_small(model.dim(), "EnergyTable");
  if (params.dim() != model.dim() || grid.dim() != model.dim()) {
    throw InputError("EnergyTable: dimension mismatch");
  }
  const GridPoints gp = expand(grid);
  energy_.reserve(gp.points.size());
  weight_.reserve(gp.points.size());
  for (std::size_t i = 0; i < gp.points.size(); ++i) {
    const double lq = log_q(params, gp.points[i]);
    const double w = gp.weights[i] * std::exp(lq);
    if (w == 0.0) continue;  // q underflowed; the point carries no mass
    energy_.push_back(lq - model.log_joint(gp.points[i]));
    weight_.push_back(w);
  }
  const double total = pairwise_sum(weight_);
  for (double& w : weight_) w /= total;
}

EnergyTable::EnergyTable(const Model& model, const VariationalParams& params)
    : EnergyTable(model, params, grid_for_q(params)) {}

double EnergyTable::expect(const std::function<double(double)>& g) const {
  std::vector<double> terms(energy_.size());
  for (std::size_t i = 0; i < energy_.size(); ++i) {
    terms[i] = weight_[i] * g(energy_[i]);
  }
  return pairwise_sum(terms);
}

double EnergyTable::mean_energy() const {
  return expect([](double v) { return v; });
}

double EnergyTable::power(double v0, int k) const {
  if (k < 0 || k > 21) throw InputError("EnergyTable::power: need 0 <= k <= 21");
  return expect([v0, k](double v) {
    long double acc = 1.0L;
    for (int i = 0; i < k; ++i) acc *= static_cast<long double>(v0 - v);
    return static_cast<double>(acc);
  });
}

double EnergyTable::surrogate(double v0, int order) const {
  return expect([v0, order](double v) { return truncated_exp(v0 - v, order); });
}

double EnergyTable::bound(double v0, int order) const {
  return std::exp(-v0) * surrogate(v0, order);
}

double EnergyTable::alpha_moment(double alpha, double v0) const {
  return expect([alpha, v0](double v) { return std::exp((1.0 - alpha) * (v0 - v)); });
}

std::array<double, 3> EnergyTable::central_moments() const {
  const double m = mean_energy();
  const double m2 = expect([m](double v) { return (v - m) * (v - m); });
  const double m3 = expect([m](double v) { return (v - m) * (v - m) * (v - m); });
  return {m, m2, m3};
}

double exact_expectation_power(const Model& model, const VariationalParams& params,
                               double v0, int k, const QuadratureGrid& grid) {
  return EnergyTable(model, params, grid).power(v0, k);
}

double exact_expectation_power(const Model& model, const VariationalParams& params,
                               double v0, int k) {
  return EnergyTable(model, params).power(v0, k);
}

double exact_elbo(const Model& model, const VariationalParams& params) {
  return EnergyTable(model, params).elbo();
}

double exact_surrogate(const Model& model, const VariationalParams& params,
                       double v0, int order) {
  return EnergyTable(model, params).surrogate(v0, order);
}

double exact_perturbative_bound(const Model& model, const VariationalParams& params,
                                double v0, int order) {
  return EnergyTable(model, params).bound(v0, order);
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace pvi
