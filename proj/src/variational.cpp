#include "pvi/variational.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pvi/errors.hpp"
#include "pvi/numeric.hpp"
#include "pvi/rng.hpp"

namespace pvi {

namespace {

void require_match(const VariationalParams& p, const Eigen::VectorXd& v,
                   const char* who) {
  if (v.size() != p.dim()) {
    throw InputError(std::string(who) + ": dimension mismatch (params " +
                     std::to_string(p.dim()) + ", vector " +
                     std::to_string(v.size()) + ")");
  }
}

// Stream id reserved for parameter initialization so it never collides with
// the noise streams used by the optimizer.
constexpr std::uint64_t kInitStream = 0x1a17ULL;

}  // namespace

VariationalParams::VariationalParams(Eigen::VectorXd mu_, Eigen::VectorXd rho_)
    : mu(std::move(mu_)), rho(std::move(rho_)) {
  if (mu.size() != rho.size()) {
    throw InputError("VariationalParams: mu and rho differ in length");
  }
}

Eigen::VectorXd VariationalParams::flatten() const {
  Eigen::VectorXd flat(2 * dim());
  flat << mu, rho;
  return flat;
}

VariationalParams VariationalParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() % 2 != 0) {
    throw InputError("VariationalParams::unflatten: odd length");
  }
  const Eigen::Index n = flat.size() / 2;
  return VariationalParams(flat.head(n), flat.tail(n));
}

VariationalParams VariationalParams::random_init(int dim, std::uint64_t seed) {
  if (dim < 1) throw InputError("random_init: dim must be positive");
  return VariationalParams(0.1 * NoiseStream::normal_at(seed, kInitStream, 0, dim),
                           Eigen::VectorXd::Zero(dim));
}

VariationalParams VariationalParams::standard(int dim) {
  return VariationalParams(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim));
}

bool VariationalParams::all_finite() const {
  return mu.allFinite() && rho.allFinite();
}

Eigen::VectorXd reparameterize(const VariationalParams& params,
                               const Eigen::VectorXd& eps) {
  require_match(params, eps, "reparameterize");
  return params.mu + (params.rho.array().exp() * eps.array()).matrix();
}

double log_q(const VariationalParams& params, const Eigen::VectorXd& z) {
  require_match(params, z, "log_q");
  double acc = 0.0;
  for (int i = 0; i < params.dim(); ++i) {
    const double t = (z[i] - params.mu[i]) * std::exp(-params.rho[i]);
    acc += -0.5 * (kLog2Pi + t * t) - params.rho[i];
  }
  return acc;
}

Eigen::VectorXd grad_log_q_in_z(const VariationalParams& params,
                                const Eigen::VectorXd& z) {
  require_match(params, z, "grad_log_q_in_z");
  return -((z - params.mu).array() * (-2.0 * params.rho.array()).exp()).matrix();
}

Eigen::VectorXd grad_log_q_in_lambda(const VariationalParams& params,
                                     const Eigen::VectorXd& z) {
  require_match(params, z, "grad_log_q_in_lambda");
  const int n = params.dim();
  Eigen::VectorXd g(2 * n);
  for (int i = 0; i < n; ++i) {
    const double inv_sigma = std::exp(-params.rho[i]);
    const double t = (z[i] - params.mu[i]) * inv_sigma;
    g[i] = t * inv_sigma;
    g[n + i] = t * t - 1.0;
  }
  return g;
}

double entropy(const VariationalParams& params) {
  return params.rho.sum() + 0.5 * params.dim() * (kLog2Pi + 1.0);
}

nlohmann::json to_json(const VariationalParams& params) {
  return nlohmann::json{
      {"mu", std::vector<double>(params.mu.data(), params.mu.data() + params.dim())},
      {"rho", std::vector<double>(params.rho.data(), params.rho.data() + params.dim())}};
}

VariationalParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("mu") || !j.contains("rho")) {
    throw InputError("VariationalParams JSON needs arrays 'mu' and 'rho'");
  }
  const auto mu = j.at("mu").get<std::vector<double>>();
  const auto rho = j.at("rho").get<std::vector<double>>();
  if (mu.size() != rho.size()) {
    throw InputError("VariationalParams JSON: mu and rho differ in length");
  }
  return VariationalParams(
      Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size())),
      Eigen::Map<const Eigen::VectorXd>(rho.data(), static_cast<Eigen::Index>(rho.size())));
}

}  // namespace pvi
