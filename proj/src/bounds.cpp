#include "pvi/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pvi/errors.hpp"
#include "pvi/numeric.hpp"

namespace pvi {

namespace {

constexpr double kLogSpaceThreshold = 700.0;

void require_draws(const Draws& draws, const char* who) {
  if (draws.empty()) throw InputError(std::string(who) + ": need at least one draw");
}

void require_order(int order, const char* who) {
  if (order < 1) throw InputError(std::string(who) + ": order must be >= 1");
}

long double int_power(long double x, int k) {
  long double acc = 1.0L;
  for (int i = 0; i < k; ++i) acc *= x;
  return acc;
}

long double factorial(int k) {
  long double acc = 1.0L;
  for (int i = 2; i <= k; ++i) acc *= i;
  return acc;
}

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

BoundSpec BoundSpec::kl() { return BoundSpec{}; }

BoundSpec BoundSpec::perturbative(int order, double v0) {
  BoundSpec b;
  b.kind = BoundKind::Perturbative;
  b.order = order;
  b.v0 = v0;
  b.validate();
  return b;
}

BoundSpec BoundSpec::alpha_bound(double alpha, double v0) {
  BoundSpec b;
  b.kind = BoundKind::Alpha;
  b.alpha = alpha;
  b.v0 = v0;
  b.validate();
  return b;
}

void BoundSpec::validate() const {
  if (!std::isfinite(v0)) throw InputError("BoundSpec: V0 must be finite");
  if (kind == BoundKind::Perturbative && (order < 1 || order % 2 == 0)) {
    throw InputError("BoundSpec: perturbative order K must be odd and >= 1");
  }
  if (kind == BoundKind::Alpha &&
      (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha))) {
    throw InputError("BoundSpec: alpha must be positive and different from 1");
  }
}

std::string BoundSpec::label() const {
  switch (kind) {
    case BoundKind::KL:
      return "KLVI";
    case BoundKind::Perturbative:
      return "PBBVI(K=" + std::to_string(order) + ")";
    case BoundKind::Alpha:
      return "alpha-VI(alpha=" + format_number(alpha) + ")";
  }
  return "?";
}

nlohmann::json to_json(const BoundSpec& bound) {
  switch (bound.kind) {
    case BoundKind::KL:
      return {{"kind", "kl"}};
    case BoundKind::Perturbative:
      return {{"kind", "perturbative"}, {"order", bound.order}, {"v0", bound.v0}};
    case BoundKind::Alpha:
      return {{"kind", "alpha"}, {"alpha", bound.alpha}, {"v0", bound.v0}};
  }
  return {};
}

BoundSpec bound_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw ConfigError("bound entry needs a string 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  BoundSpec b;
  try {
    if (kind == "kl" || kind == "KL") {
      b.kind = BoundKind::KL;
    } else if (kind == "perturbative" || kind == "pbbvi") {
      b.kind = BoundKind::Perturbative;
      b.order = j.value("order", j.value("K", 3));
      b.v0 = j.value("v0", 0.0);
    } else if (kind == "alpha") {
      b.kind = BoundKind::Alpha;
      if (!j.contains("alpha")) throw ConfigError("alpha bound needs 'alpha'");
      b.alpha = j.at("alpha").get<double>();
      b.v0 = j.value("v0", 0.0);
    } else {
      throw ConfigError("unknown bound kind '" + kind + "'");
    }
    b.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad bound entry: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return b;
}

// ---------------------------------------------------------------------------

double interaction_energy(const Model& model, const VariationalParams& params,
                          const Eigen::VectorXd& z) {
  return log_q(params, z) - model.log_joint(z);
}

std::vector<double> energy_samples(const Model& model, const VariationalParams& params,
                                   const Draws& draws) {
  std::vector<double> v;
  v.reserve(draws.size());
  for (const auto& d : draws) {
    v.push_back(interaction_energy(model, params, reparameterize(params, d.eps)));
  }
  return v;
}

double elbo_estimate(const Model& model, const VariationalParams& params,
                     const Draws& draws) {
  require_draws(draws, "elbo_estimate");
  return -pairwise_mean(energy_samples(model, params, draws));
}

double f_perturbative(double xi, double v0, int order) {
  require_order(order, "f_perturbative");
  if (!(xi > 0.0)) throw DomainError("f_perturbative: xi must be positive");
  return std::exp(-v0) * truncated_exp(v0 + std::log(xi), order);
}

double f_perturbative_d1(double xi, double v0, int order) {
  require_order(order, "f_perturbative_d1");
  if (!(xi > 0.0)) throw DomainError("f_perturbative_d1: xi must be positive");
  return std::exp(-v0) * truncated_exp(v0 + std::log(xi), order - 1) / xi;
}

double f_perturbative_d2(double xi, double v0, int order) {
  require_order(order, "f_perturbative_d2");
  if (!(xi > 0.0)) throw DomainError("f_perturbative_d2: xi must be positive");
  const long double u = static_cast<long double>(v0) + std::log(xi);
  return static_cast<double>(-std::exp(-static_cast<long double>(v0)) *
                             int_power(u, order - 1) /
                             (factorial(order - 1) * xi * xi));
}

double surrogate_value(const Model& model, const VariationalParams& params,
                       double v0, int order, const Draws& draws) {
  require_draws(draws, "surrogate_value");
  require_order(order, "surrogate_value");
  std::vector<double> terms = energy_samples(model, params, draws);
  for (double& t : terms) t = truncated_exp(v0 - t, order);
  return pairwise_mean(terms);
}

BoundValue perturbative_bound_value(const Model& model, const VariationalParams& params,
                                    double v0, int order, const Draws& draws) {
  BoundValue out;
  out.v0 = v0;
  out.surrogate = surrogate_value(model, params, v0, order, draws);
  out.sign = out.surrogate < 0.0 ? -1 : 1;
  out.log_abs = -v0 + std::log(std::abs(out.surrogate));
  out.log_space = std::abs(v0) > kLogSpaceThreshold;
  out.value = out.log_space ? out.sign * std::exp(out.log_abs)
                            : std::exp(-v0) * out.surrogate;
  return out;
}

double log_alpha_bound_value(const Model& model, const VariationalParams& params,
                             double alpha, const Draws& draws) {
  require_draws(draws, "alpha_bound_value");
  BoundSpec::alpha_bound(alpha);
  std::vector<double> logs = energy_samples(model, params, draws);
  for (double& v : logs) v = -(1.0 - alpha) * v;
  return log_sum_exp(logs) - std::log(static_cast<double>(draws.size()));
}

double alpha_bound_value(const Model& model, const VariationalParams& params,
                         double alpha, const Draws& draws) {
  return std::exp(log_alpha_bound_value(model, params, alpha, draws));
}

double cumulant_diagnostic(const Model& model, const VariationalParams& params,
                           int order, const std::optional<QuadratureGrid>& grid) {
  if (order != 2 && order != 3) {
    throw InputError("cumulant_diagnostic: order must be 2 or 3");
  }
  if (model.dim() > 2) {
    throw UnsupportedError("cumulant_diagnostic: quadrature only, dimension <= 2");
  }
  const EnergyTable table = grid ? EnergyTable(model, params, *grid)
                                 : EnergyTable(model, params);
  const auto [m, m2, m3] = table.central_moments();
  double out = -m + 0.5 * m2;
  if (order == 3) out -= m3 / 6.0;
  return out;
}

// ---------------------------------------------------------------------------

Theorem1Report check_theorem1(double v0, int order, const std::vector<double>& grid,
                              double excess_tol, double slope_tol) {
  require_order(order, "check_theorem1");
  Theorem1Report r;
  r.max_second_derivative = -std::numeric_limits<double>::infinity();
  r.max_excess = -std::numeric_limits<double>::infinity();
  for (double xi : grid) {
    if (!(xi > 0.0)) throw DomainError("check_theorem1: grid must be positive");
    const double d2 = f_perturbative_d2(xi, v0, order);
    const double excess = f_perturbative(xi, v0, order) - xi;
    r.max_second_derivative = std::max(r.max_second_derivative, d2);
    r.max_excess = std::max(r.max_excess, excess);
    bool bad = false;
    if (d2 > 0.0) {
      r.concave = false;
      bad = true;
    }
    if (excess > excess_tol) {
      r.below_identity = false;
      bad = true;
    }
    if (bad) ++r.violations;
  }
  r.tangent_slope = f_perturbative_d1(std::exp(-v0), v0, order);
  r.tangent_slope_one = std::abs(r.tangent_slope - 1.0) <= slope_tol;
  return r;
}

double theorem2_h(double u, int order) {
  require_order(order, "theorem2_h");
  return truncated_exp(u, order - 1);
}

Theorem2Report check_theorem2_h(int order, const std::vector<double>& grid,
                                double tol) {
  require_order(order, "check_theorem2_h");
  if (grid.empty()) throw InputError("check_theorem2_h: empty grid");
  Theorem2Report r;
  std::size_t best = 0;
  r.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double h = theorem2_h(grid[i], order);
    if (!(h > 0.0)) r.positive = false;
    if (h < r.min_value) {
      r.min_value = h;
      best = i;
    }
  }
  double u = grid[best];
  if (order >= 3 && best > 0 && best + 1 < grid.size()) {
    // h' = sum_{k<=K-2} u^k/k! changes sign across the minimizer.
    double lo = grid[best - 1];
    double hi = grid[best + 1];
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (truncated_exp(mid, order - 2) > 0.0) hi = mid; else lo = mid;
    }
    u = 0.5 * (lo + hi);
  }
  r.argmin = u;
  r.value_at_argmin = theorem2_h(u, order);
  r.predicted = static_cast<double>(int_power(u, order - 1) / factorial(order - 1));
  r.min_matches = std::abs(r.value_at_argmin - r.predicted) <= tol;
  return r;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InputError("log_grid: bad arguments");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  return g;
}

std::vector<double> linear_grid(double lo, double hi, int n) {
  if (!(hi > lo) || n < 2) throw InputError("linear_grid: bad arguments");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return g;
}

}  // namespace pvi
