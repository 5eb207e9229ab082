#include "pvi/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "pvi/numeric.hpp"
#include "pvi/rng.hpp"

namespace pvi {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Log of the Renyi-bound estimate (1/(1-alpha)) log mean exp((1-alpha) w).
double renyi_estimate(const std::vector<double>& w, double alpha) {
  std::vector<double> logs(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) logs[i] = (1.0 - alpha) * w[i];
  return (log_sum_exp(logs) - std::log(static_cast<double>(w.size()))) / (1.0 - alpha);
}

}  // namespace

Schedule Schedule::constant(double rho) {
  Schedule s;
  s.kind = Kind::Constant;
  s.rho = rho;
  s.validate();
  return s;
}

Schedule Schedule::robbins_monro(double a, double b) {
  Schedule s;
  s.kind = Kind::RobbinsMonro;
  s.a = a;
  s.b = b;
  s.validate();
  return s;
}

double Schedule::at(int t) const {
  return kind == Kind::Constant ? rho : a / (b + t);
}

void Schedule::validate() const {
  // A zero constant rate is allowed; it freezes the parameters.
  if (kind == Kind::Constant && !(rho >= 0.0 && std::isfinite(rho))) {
    throw InputError("Schedule: learning rate must be non-negative");
  }
  if (kind == Kind::RobbinsMonro && !(a > 0.0 && b > 0.0)) {
    throw InputError("Schedule: Robbins-Monro a and b must be positive");
  }
}

nlohmann::json to_json(const Schedule& s) {
  if (s.kind == Schedule::Kind::Constant) return {{"kind", "constant"}, {"rho", s.rho}};
  return {{"kind", "robbins_monro"}, {"a", s.a}, {"b", s.b}};
}

Schedule schedule_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant") return Schedule::constant(j.at("rho").get<double>());
    if (kind == "robbins_monro") {
      return Schedule::robbins_monro(j.at("a").get<double>(), j.at("b").get<double>());
    }
    throw ConfigError("unknown schedule kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad schedule: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

void FitConfig::validate() const {
  bound.validate();
  schedule.validate();
  if (samples_per_step < 1) throw InputError("FitConfig: samples_per_step must be >= 1");
  if (iterations < 1) throw InputError("FitConfig: iterations must be >= 1");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw InputError("FitConfig: tail_fraction must lie in (0, 1]");
  }
  if (!std::isfinite(initial_v0)) throw InputError("FitConfig: initial_v0 must be finite");
}

void FitTrace::write_csv(std::ostream& os) const {
  os << "iter,surrogate,v0,elbo,grad_norm\n";
  for (const auto& r : records) {
    os << r.iter << ',' << fmt(r.surrogate) << ',' << fmt(r.v0) << ',' << fmt(r.elbo)
       << ',' << fmt(r.grad_norm) << '\n';
  }
}

nlohmann::json FitTrace::summary() const {
  nlohmann::json j;
  j["iterations"] = records.size();
  j["final"] = {{"mu", to_vector(final_params.mu)},
                {"rho", to_vector(final_params.rho)},
                {"v0", final_v0}};
  if (!records.empty()) {
    const auto& last = records.back();
    j["last"] = {{"iter", last.iter},
                 {"surrogate", last.surrogate},
                 {"v0", last.v0},
                 {"elbo", last.elbo},
                 {"grad_norm", last.grad_norm}};
  }
  return j;
}

FitResult fit(const Model& model, const VariationalParams& init, const FitConfig& config) {
  config.validate();
  if (init.dim() != model.dim()) {
    throw InputError("fit: initial params and model dimensions differ");
  }
  const BoundKind kind = config.bound.kind;
  const int n = model.dim();
  const int tail_start =
      config.iterations - std::max(1, static_cast<int>(std::floor(config.tail_fraction *
                                                                  config.iterations)));

  VariationalParams params = init;
  double v0 = kind == BoundKind::Perturbative ? config.initial_v0 : 0.0;
  double reference = 0.0;  // Alpha: lagged normalizer
  bool have_reference = false;

  FitResult result;
  result.trace.records.reserve(static_cast<std::size_t>(config.iterations));
  Eigen::VectorXd sum_mu = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sum_rho = Eigen::VectorXd::Zero(n);
  double sum_v0 = 0.0;
  int tail_count = 0;

  NoiseStream stream(config.seed, config.stream);
  BoundSpec bound = config.bound;

  auto diverge = [&](const std::string& why, int t) {
    result.trace.final_params = params;
    result.trace.final_v0 = v0;
    throw DivergedError(bound.label() + " diverged at iteration " + std::to_string(t) +
                            ": " + why,
                        result.trace);
  };

  for (int t = 1; t <= config.iterations; ++t) {
    const Draws draws = stream.next_batch(config.samples_per_step, n);
    TraceRecord rec;
    rec.iter = t;
    if (kind == BoundKind::Perturbative) bound.v0 = v0;
    if (kind == BoundKind::Alpha) {
      const std::vector<double> w = [&] {
        std::vector<double> e = energy_samples(model, params, draws);
        for (double& x : e) x = -x;
        return e;
      }();
      const double renyi = renyi_estimate(w, bound.alpha);
      if (!have_reference) {
        reference = -renyi;
        have_reference = true;
      }
      bound.v0 = reference;
      rec.surrogate = renyi;
      // Next step normalizes with this step's estimate.
      reference = std::isfinite(renyi) ? -renyi : reference;
    }

    const GradientEstimate g =
        estimate_gradient(config.estimator, bound, model, params, draws);
    const double rate = config.schedule.at(t);
    rec.elbo = g.elbo;
    rec.grad_norm = g.grad_lambda.norm();
    if (kind == BoundKind::Perturbative) {
      rec.surrogate = g.objective;
      rec.v0 = v0;
    } else if (kind == BoundKind::KL) {
      rec.surrogate = g.objective;
    } else {
      rec.v0 = bound.v0;
    }
    result.trace.records.push_back(rec);

    if (!g.grad_lambda.allFinite() || !std::isfinite(g.objective)) {
      diverge("non-finite gradient estimate", t);
    }
    params.mu += rate * g.grad_lambda.head(n);
    params.rho += rate * g.grad_lambda.tail(n);
    if (kind == BoundKind::Perturbative) {
      v0 += rate * v0_update_direction(g.grad_v0, g.objective);
    }
    if (!params.all_finite() || !std::isfinite(v0)) diverge("non-finite parameter", t);
    if (std::abs(v0) > kMaxAbsV0) diverge("|V0| exceeded 1e4", t);

    if (t > tail_start) {
      sum_mu += params.mu;
      sum_rho += params.rho;
      sum_v0 += v0;
      ++tail_count;
    }
    if (config.snapshot && config.snapshot_every > 0 &&
        (t % config.snapshot_every == 0 || t == config.iterations)) {
      config.snapshot(t, params, v0);
    }
  }

  result.params = params;
  result.v0 = v0;
  result.averaged_params = VariationalParams(sum_mu / tail_count, sum_rho / tail_count);
  result.averaged_v0 = sum_v0 / tail_count;
  result.trace.final_params = params;
  result.trace.final_v0 = v0;
  return result;
}

std::vector<ComparisonEntry> fit_bimodal_comparison(const BimodalTarget& target,
                                                    const std::vector<BoundSpec>& bounds,
                                                    const FitConfig& config) {
  const BimodalModel model(target);
  const VariationalParams init = VariationalParams::random_init(1, config.seed);
  std::vector<ComparisonEntry> out;
  for (const auto& b : bounds) {
    ComparisonEntry e;
    e.bound = b;
    FitConfig cfg = config;
    cfg.bound = b;
    try {
      const FitResult r = fit(model, init, cfg);
      e.mean = r.averaged_params.mu[0];
      e.sigma = std::exp(r.averaged_params.rho[0]);
      e.v0 = r.averaged_v0;
      e.final_mean = r.params.mu[0];
      e.final_sigma = std::exp(r.params.rho[0]);
    } catch (const DivergedError& err) {
      e.diverged = true;
      e.message = err.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace pvi
