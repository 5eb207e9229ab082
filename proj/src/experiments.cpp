#include "pvi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "pvi/errors.hpp"
#include "pvi/numeric.hpp"
#include "pvi/rng.hpp"

namespace pvi {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kElboStream = 0xe1b0ULL;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// json -> T with the offending key in the message.
template <typename T>
T get(const nlohmann::json& j, const std::string& key, const T& fallback,
      const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + key + ": wrong type");
  }
}

EstimatorKind estimator_from_name(const std::string& s) {
  if (s == "reparam" || s == "reparameterization") return EstimatorKind::Reparameterization;
  if (s == "score" || s == "score_function") return EstimatorKind::ScoreFunction;
  throw ConfigError("unknown estimator '" + s + "'");
}

FitSettings parse_fit(const nlohmann::json& j, FitSettings base, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  base.samples = get<int>(j, "samples", base.samples, where + ".");
  base.iterations = get<int>(j, "iterations", base.iterations, where + ".");
  base.tail_fraction = get<double>(j, "tail_fraction", base.tail_fraction, where + ".");
  if (j.contains("schedule")) {
    try {
      base.schedule = schedule_from_json(j.at("schedule"));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ".schedule: " + e.what());
    }
  }
  if (j.contains("estimator")) {
    base.estimator = estimator_from_name(get<std::string>(j, "estimator", "", where + "."));
  }
  if (base.samples < 1) throw ConfigError(where + ".samples must be >= 1");
  if (base.iterations < 1) throw ConfigError(where + ".iterations must be >= 1");
  if (!(base.tail_fraction > 0.0 && base.tail_fraction <= 1.0)) {
    throw ConfigError(where + ".tail_fraction must lie in (0, 1]");
  }
  return base;
}

class CsvOut {
 public:
  CsvOut(const fs::path& path, const ExperimentConfig& cfg,
         const std::vector<std::string>& extra_meta = {})
      : path_(path), os_(path, std::ios::binary) {
    if (!os_) throw IoError("cannot write '" + path.string() + "'");
    os_ << "# experiment=" << experiment_name(cfg.kind) << '\n';
    os_ << "# seed=" << cfg.seed << '\n';
    os_ << "# config_hash=" << cfg.config_hash() << '\n';
    std::string labels;
    for (const auto& b : cfg.bounds) {
      if (!labels.empty()) labels += ';';
      labels += to_json(b.bound).dump();
    }
    os_ << "# bounds=" << labels << '\n';
    for (const auto& m : extra_meta) os_ << "# " << m << '\n';
  }
  std::ostream& stream() { return os_; }
  ~CsvOut() = default;

 private:
  fs::path path_;
  std::ofstream os_;
};

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::vector<std::string> labels_of(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& b : cfg.bounds) out.push_back(b.bound.label());
  return out;
}

nlohmann::json nan_to_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

void require_some_success(const std::vector<bool>& ok, const std::string& what) {
  if (!ok.empty() && std::none_of(ok.begin(), ok.end(), [](bool b) { return b; })) {
    throw AllDivergedError(what + ": every bound diverged");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Toy1D: return "toy1d";
    case ExperimentKind::GPRegression: return "gp-regression";
    case ExperimentKind::GPClassification: return "gp-classification";
    case ExperimentKind::GradVarSweep: return "grad-var-sweep";
    case ExperimentKind::Convergence: return "convergence";
  }
  return "?";
}

ExperimentKind experiment_from_name(const std::string& raw) {
  std::string name = raw;
  std::replace(name.begin(), name.end(), '_', '-');
  for (auto k : {ExperimentKind::Toy1D, ExperimentKind::GPRegression,
                 ExperimentKind::GPClassification, ExperimentKind::GradVarSweep,
                 ExperimentKind::Convergence}) {
    if (experiment_name(k) == name) return k;
  }
  throw ConfigError("unknown experiment '" + raw + "'");
}

FitConfig FitSettings::to_config(const BoundSpec& bound, std::uint64_t seed) const {
  FitConfig c;
  c.bound = bound;
  c.samples_per_step = samples;
  c.iterations = iterations;
  c.schedule = schedule;
  c.seed = seed;
  c.estimator = estimator;
  c.tail_fraction = tail_fraction;
  return c;
}

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  std::vector<std::uint64_t> s;
  for (int r = 0; r < repeats; ++r) s.push_back(seed + static_cast<std::uint64_t>(r));
  return s;
}

std::string ExperimentConfig::config_hash() const {
  // FNV-1a over the canonical dump plus the effective seed.
  const std::string text = raw.dump() + "#seed=" + std::to_string(seed);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.base_dir = base_dir;
  if (!j.contains("experiment")) throw ConfigError("config: missing 'experiment'");
  cfg.kind = experiment_from_name(get<std::string>(j, "experiment", "", "config."));
  cfg.seed = get<std::uint64_t>(j, "seed", 0, "config.");
  cfg.repeats = get<int>(j, "repeats", 1, "config.");
  if (cfg.repeats < 1) throw ConfigError("config.repeats must be >= 1");
  cfg.output_dir = get<std::string>(j, "output_dir", cfg.output_dir, "config.");
  if (j.contains("fit")) cfg.fit = parse_fit(j.at("fit"), cfg.fit, "config.fit");

  if (!j.contains("bounds") || !j.at("bounds").is_array() || j.at("bounds").empty()) {
    throw ConfigError("config.bounds: need a non-empty array");
  }
  for (std::size_t i = 0; i < j.at("bounds").size(); ++i) {
    const auto& b = j.at("bounds")[i];
    const std::string where = "config.bounds[" + std::to_string(i) + "]";
    BoundRun run;
    try {
      run.bound = bound_from_json(b);
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
    run.fit = b.contains("fit") ? parse_fit(b.at("fit"), cfg.fit, where + ".fit") : cfg.fit;
    cfg.bounds.push_back(run);
  }

  if (j.contains("warm_start")) {
    const auto& w = j.at("warm_start");
    cfg.warm_start.enabled = get<bool>(w, "enabled", true, "config.warm_start.");
    cfg.warm_start.fit = w.contains("fit") ? parse_fit(w.at("fit"), cfg.fit, "config.warm_start.fit")
                                           : cfg.fit;
    cfg.warm_start.elbo_draws = get<int>(w, "elbo_draws", 1000, "config.warm_start.");
    if (cfg.warm_start.elbo_draws < 1) throw ConfigError("config.warm_start.elbo_draws must be >= 1");
  }

  if (j.contains("target")) {
    const auto& t = j.at("target");
    cfg.target.c1 = get<double>(t, "c1", cfg.target.c1, "config.target.");
    cfg.target.c2 = get<double>(t, "c2", cfg.target.c2, "config.target.");
    cfg.target.component_std = get<double>(t, "std", cfg.target.component_std, "config.target.");
    cfg.target.w1 = get<double>(t, "w1", cfg.target.w1, "config.target.");
    cfg.target.w2 = get<double>(t, "w2", cfg.target.w2, "config.target.");
    try {
      cfg.target.validate();
    } catch (const InputError& e) {
      throw ConfigError(std::string("config.target: ") + e.what());
    }
  }
  if (j.contains("density_grid")) {
    const auto& g = j.at("density_grid");
    cfg.density_lo = get<double>(g, "lo", cfg.density_lo, "config.density_grid.");
    cfg.density_hi = get<double>(g, "hi", cfg.density_hi, "config.density_grid.");
    cfg.density_points = get<int>(g, "points", cfg.density_points, "config.density_grid.");
    if (!(cfg.density_hi > cfg.density_lo) || cfg.density_points < 2) {
      throw ConfigError("config.density_grid: need lo < hi and points >= 2");
    }
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    cfg.n_points = get<int>(d, "n", cfg.n_points, "config.data.");
    cfg.noise_std = get<double>(d, "noise_std", cfg.noise_std, "config.data.");
    cfg.design.lo = get<double>(d, "lo", cfg.design.lo, "config.data.");
    cfg.design.hi = get<double>(d, "hi", cfg.design.hi, "config.data.");
    cfg.x_spacing = get<double>(d, "x_spacing", cfg.x_spacing, "config.data.");
    const std::string design = get<std::string>(d, "design", "grid", "config.data.");
    if (design == "grid") {
      cfg.design.design = SinusoidOptions::Design::Grid;
    } else if (design == "random") {
      cfg.design.design = SinusoidOptions::Design::Random;
    } else {
      throw ConfigError("config.data.design must be 'grid' or 'random'");
    }
    if (cfg.n_points < 2) throw ConfigError("config.data.n must be >= 2");
    if (!(cfg.noise_std > 0.0)) throw ConfigError("config.data.noise_std must be positive");
    if (!(cfg.x_spacing > 0.0)) throw ConfigError("config.data.x_spacing must be positive");
  }
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    cfg.kernel.s = get<double>(k, "s", cfg.kernel.s, "config.kernel.");
    if (k.contains("l")) {
      cfg.kernel.l = get<double>(k, "l", cfg.kernel.l, "config.kernel.");
      cfg.length_from_data = false;
    }
    try {
      cfg.kernel.validate();
    } catch (const InputError& e) {
      throw ConfigError(std::string("config.kernel: ") + e.what());
    }
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    auto resolve = [&](const std::string& p) {
      if (p.empty()) return p;
      fs::path path(p);
      return (path.is_relative() ? base_dir / path : path).lexically_normal().string();
    };
    cfg.dataset_path = resolve(get<std::string>(d, "path", "", "config.dataset."));
    cfg.schema_path = resolve(get<std::string>(d, "schema", "", "config.dataset."));
    cfg.standardize = get<bool>(d, "standardize", true, "config.dataset.");
    cfg.split = get<std::vector<double>>(d, "split", cfg.split, "config.dataset.");
    try {
      SplitSpec{cfg.split, 0}.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.dataset.split: ") + e.what());
    }
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    cfg.dims = get<std::vector<int>>(s, "dims", cfg.dims, "config.sweep.");
    cfg.variance_samples = get<int>(s, "variance_samples", cfg.variance_samples, "config.sweep.");
    const std::string coords = get<std::string>(s, "coords", "mean", "config.sweep.");
    if (coords == "mean") {
      cfg.coords = VarianceCoords::Mean;
    } else if (coords == "all") {
      cfg.coords = VarianceCoords::All;
    } else {
      throw ConfigError("config.sweep.coords must be 'mean' or 'all'");
    }
    if (cfg.dims.empty()) throw ConfigError("config.sweep.dims: empty");
    for (int n : cfg.dims) {
      if (n < 2) throw ConfigError("config.sweep.dims: entries must be >= 2");
    }
    if (cfg.variance_samples < 100) throw ConfigError("config.sweep.variance_samples must be >= 100");
  }
  cfg.eval_every = get<int>(j, "eval_every", cfg.eval_every, "config.");
  if (cfg.eval_every < 1) throw ConfigError("config.eval_every must be >= 1");

  const bool needs_dataset = cfg.kind == ExperimentKind::GPClassification ||
                             cfg.kind == ExperimentKind::Convergence;
  if (needs_dataset) {
    if (cfg.dataset_path.empty() || cfg.schema_path.empty()) {
      throw ConfigError("config.dataset: 'path' and 'schema' are required for " +
                        experiment_name(cfg.kind));
    }
    for (const auto& p : {cfg.dataset_path, cfg.schema_path}) {
      if (!fs::exists(p)) throw ConfigError("config.dataset: file not found '" + p + "'");
    }
  }
  if (cfg.kind == ExperimentKind::Convergence && cfg.bounds.size() < 2) {
    throw ConfigError("config.bounds: convergence needs a reference bound and at least one more");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  try {
    return parse_experiment_config(j, fs::path(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("least_squares: need >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

FitResult fit_bound(const Model& model, const BoundRun& run, const WarmStart& warm,
                    std::uint64_t seed) {
  const VariationalParams init = VariationalParams::random_init(model.dim(), seed);
  FitConfig cfg = run.fit.to_config(run.bound, seed);
  if (!(warm.enabled && run.bound.kind == BoundKind::Perturbative)) {
    return fit(model, init, cfg);
  }
  const FitResult pre = fit(model, init, warm.fit.to_config(BoundSpec::kl(), seed));
  NoiseStream stream(seed, kElboStream);
  const double elbo = elbo_estimate(model, pre.averaged_params,
                                    stream.next_batch(warm.elbo_draws, model.dim()));
  cfg.initial_v0 = -elbo;
  return fit(model, pre.averaged_params, cfg);
}

double classification_error(const GPClassificationModel& model, const Eigen::VectorXd& f_mean,
                            const Dataset& test) {
  const Eigen::VectorXd f = model.predict_latent(test.features, f_mean);
  int wrong = 0;
  for (int i = 0; i < test.size(); ++i) {
    const bool positive = sigmoid(f[i]) > 0.5;
    if (positive != (test.labels[i] == 1.0)) ++wrong;
  }
  return static_cast<double>(wrong) / test.size();
}

double classification_loglik(const GPClassificationModel& model, const Eigen::VectorXd& f_mean,
                             const Dataset& test) {
  const Eigen::VectorXd f = model.predict_latent(test.features, f_mean);
  double acc = 0.0;
  for (int i = 0; i < test.size(); ++i) {
    acc += test.labels[i] == 1.0 ? log_sigmoid(f[i]) : log_sigmoid(-f[i]);
  }
  return acc / test.size();
}

// ---------------------------------------------------------------------------

Toy1DResult run_toy1d(const ExperimentConfig& cfg, const fs::path& out_dir) {
  Toy1DResult res;
  res.seeds = cfg.run_seeds();
  const BimodalModel model(cfg.target);
  std::vector<bool> ok;
  for (auto seed : res.seeds) {
    std::vector<ComparisonEntry> row;
    for (const auto& b : cfg.bounds) {
      auto entries = fit_bimodal_comparison(cfg.target, {b.bound}, b.fit.to_config(b.bound, seed));
      ok.push_back(!entries.front().diverged);
      row.push_back(entries.front());
    }
    res.runs.push_back(std::move(row));
  }
  require_some_success(ok, "toy1d");

  const std::size_t nb = cfg.bounds.size();
  std::vector<std::size_t> representative(nb, 0);
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> sig, mu;
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t s = 0; s < res.runs.size(); ++s) {
      const auto& e = res.runs[s][b];
      sig.push_back(e.diverged ? kNaN : e.sigma);
      mu.push_back(e.diverged ? kNaN : e.mean);
      if (!e.diverged) order.emplace_back(e.sigma, s);
    }
    res.median_sigma.push_back(median(sig));
    res.median_mean.push_back(median(mu));
    std::sort(order.begin(), order.end());
    if (!order.empty()) representative[b] = order[(order.size() - 1) / 2].second;
  }

  nlohmann::json summary;
  summary["experiment"] = "toy1d";
  summary["seeds"] = res.seeds;
  summary["target"] = {{"c1", cfg.target.c1}, {"c2", cfg.target.c2},
                       {"std", cfg.target.component_std}, {"w1", cfg.target.w1},
                       {"w2", cfg.target.w2}};
  for (std::size_t b = 0; b < nb; ++b) {
    summary["bounds"].push_back({{"bound", to_json(cfg.bounds[b].bound)},
                                 {"label", cfg.bounds[b].bound.label()},
                                 {"median_mean", nan_to_null(res.median_mean[b])},
                                 {"median_sigma", nan_to_null(res.median_sigma[b])}});
  }
  res.summary = summary;

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    {
      CsvOut csv(out_dir / "fitted_params.csv", cfg);
      auto& os = csv.stream();
      os << "seed,bound,mean,sigma,v0,final_mean,final_sigma,diverged\n";
      for (std::size_t s = 0; s < res.runs.size(); ++s) {
        for (const auto& e : res.runs[s]) {
          os << res.seeds[s] << ',' << e.bound.label() << ',' << fmt(e.mean) << ','
             << fmt(e.sigma) << ',' << fmt(e.v0) << ',' << fmt(e.final_mean) << ','
             << fmt(e.final_sigma) << ',' << (e.diverged ? 1 : 0) << '\n';
        }
      }
    }
    {
      CsvOut csv(out_dir / "densities.csv", cfg,
                 {"fitted curves use the median-sigma seed per bound"});
      auto& os = csv.stream();
      os << "z,target";
      for (const auto& l : labels_of(cfg)) os << ',' << l;
      os << '\n';
      for (int i = 0; i < cfg.density_points; ++i) {
        const double z = cfg.density_lo + (cfg.density_hi - cfg.density_lo) * i /
                                              (cfg.density_points - 1);
        os << fmt(z) << ',' << fmt(std::exp(bimodal_log_density(cfg.target, z)));
        for (std::size_t b = 0; b < nb; ++b) {
          const auto& e = res.runs[representative[b]][b];
          double d = kNaN;
          if (!e.diverged) {
            const double t = (z - e.mean) / e.sigma;
            d = std::exp(-0.5 * t * t) / (e.sigma * std::sqrt(2.0 * 3.14159265358979323846));
          }
          os << ',' << fmt(d);
        }
        os << '\n';
      }
    }
    write_json(out_dir / "summary.json", summary);
  }
  return res;
}

GPRegressionResult run_gp_regression(const ExperimentConfig& cfg, const fs::path& out_dir) {
  GPRegressionResult res;
  res.seeds = cfg.run_seeds();
  const std::size_t nb = cfg.bounds.size();
  std::vector<bool> ok;
  struct Curve {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
  };
  std::vector<Dataset> data;
  std::vector<std::vector<Curve>> curves;  // [seed][analytic + bounds]
  for (auto seed : res.seeds) {
    const Dataset ds = synth_sinusoid(cfg.n_points, seed, cfg.noise_std, cfg.design);
    const GPRegressionModel model(ds.features, ds.labels, cfg.kernel, cfg.noise_std);
    const auto post = model.analytic_posterior();
    res.analytic_avg_var.push_back(post.cov.diagonal().mean());
    std::vector<Curve> row{{post.mean, post.cov.diagonal().cwiseSqrt()}};
    std::vector<double> vars;
    for (const auto& b : cfg.bounds) {
      try {
        const FitResult r = fit_bound(model, b, cfg.warm_start, seed);
        const Eigen::VectorXd sd = r.averaged_params.sigma();
        vars.push_back(sd.cwiseAbs2().mean());
        row.push_back({r.averaged_params.mu, sd});
        ok.push_back(true);
      } catch (const DivergedError&) {
        vars.push_back(kNaN);
        row.push_back({});
        ok.push_back(false);
      }
    }
    res.method_avg_var.push_back(vars);
    curves.push_back(std::move(row));
    data.push_back(ds);
  }
  require_some_success(ok, "gp-regression");
  res.median_analytic = median(res.analytic_avg_var);
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> v;
    for (const auto& row : res.method_avg_var) v.push_back(row[b]);
    res.median_method.push_back(median(v));
  }

  nlohmann::json summary;
  summary["experiment"] = "gp-regression";
  summary["seeds"] = res.seeds;
  summary["analytic"] = {{"median_avg_var", res.median_analytic},
                         {"per_seed", res.analytic_avg_var}};
  for (std::size_t b = 0; b < nb; ++b) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& row : res.method_avg_var) per_seed.push_back(nan_to_null(row[b]));
    summary["bounds"].push_back({{"bound", to_json(cfg.bounds[b].bound)},
                                 {"label", cfg.bounds[b].bound.label()},
                                 {"median_avg_var", nan_to_null(res.median_method[b])},
                                 {"per_seed", per_seed}});
  }
  summary["reference_magnitudes"] = {{"analytic", 0.0415}, {"KLVI", 0.0176}, {"PBBVI", 0.0355}};
  res.summary = summary;

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    {
      CsvOut csv(out_dir / "posterior.csv", cfg, {"bands are mean +- 3 sd"});
      auto& os = csv.stream();
      os << "seed,x,y,method,mean,lower,upper\n";
      std::vector<std::string> names{"analytic"};
      for (const auto& l : labels_of(cfg)) names.push_back(l);
      for (std::size_t s = 0; s < res.seeds.size(); ++s) {
        for (std::size_t m = 0; m < names.size(); ++m) {
          const auto& c = curves[s][m];
          if (c.mean.size() == 0) continue;
          for (int i = 0; i < data[s].size(); ++i) {
            os << res.seeds[s] << ',' << fmt(data[s].features(i, 0)) << ','
               << fmt(data[s].labels[i]) << ',' << names[m] << ',' << fmt(c.mean[i]) << ','
               << fmt(c.mean[i] - 3.0 * c.sd[i]) << ',' << fmt(c.mean[i] + 3.0 * c.sd[i])
               << '\n';
          }
        }
      }
    }
    {
      CsvOut csv(out_dir / "avg_variance.csv", cfg);
      auto& os = csv.stream();
      os << "seed,method,avg_var\n";
      for (std::size_t s = 0; s < res.seeds.size(); ++s) {
        os << res.seeds[s] << ",analytic," << fmt(res.analytic_avg_var[s]) << '\n';
        for (std::size_t b = 0; b < nb; ++b) {
          os << res.seeds[s] << ',' << cfg.bounds[b].bound.label() << ','
             << fmt(res.method_avg_var[s][b]) << '\n';
        }
      }
    }
    write_json(out_dir / "summary.json", summary);
  }
  return res;
}

namespace {

Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset ds;
  try {
    ds = load_csv(cfg.dataset_path, CsvSchema::from_file(cfg.schema_path));
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return cfg.standardize ? standardize(ds) : ds;
}

KernelConfig kernel_for(const ExperimentConfig& cfg, const Dataset& ds) {
  KernelConfig k = cfg.kernel;
  if (cfg.length_from_data) k.l = kernel_length_default(ds);
  return k;
}

}  // namespace

GPClassificationResult run_gp_classification(const ExperimentConfig& cfg,
                                             const fs::path& out_dir) {
  GPClassificationResult res;
  res.seeds = cfg.run_seeds();
  const Dataset ds = load_dataset(cfg);
  const KernelConfig kernel = kernel_for(cfg, ds);
  const std::size_t nb = cfg.bounds.size();
  std::vector<bool> ok;
  for (auto seed : res.seeds) {
    const auto parts = split(ds, SplitSpec{cfg.split, seed});
    const Dataset& train = parts.front();
    const Dataset& test = parts.back();
    const GPClassificationModel model(train.features, train.labels, kernel);
    std::vector<double> err, ll;
    for (const auto& b : cfg.bounds) {
      try {
        const FitResult r = fit_bound(model, b, cfg.warm_start, seed);
        err.push_back(classification_error(model, r.averaged_params.mu, test));
        ll.push_back(classification_loglik(model, r.averaged_params.mu, test));
        ok.push_back(true);
      } catch (const DivergedError&) {
        err.push_back(kNaN);
        ll.push_back(kNaN);
        ok.push_back(false);
      }
    }
    res.test_error.push_back(err);
    res.test_loglik.push_back(ll);
  }
  require_some_success(ok, "gp-classification");
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> e, l;
    for (std::size_t s = 0; s < res.seeds.size(); ++s) {
      e.push_back(res.test_error[s][b]);
      l.push_back(res.test_loglik[s][b]);
    }
    res.median_error.push_back(median(e));
    res.median_loglik.push_back(median(l));
  }

  nlohmann::json summary;
  summary["experiment"] = "gp-classification";
  summary["dataset"] = fs::path(cfg.dataset_path).filename().string();
  summary["n"] = ds.size();
  summary["d"] = ds.dim();
  summary["kernel"] = {{"s", kernel.s}, {"l", kernel.l}};
  summary["seeds"] = res.seeds;
  for (std::size_t b = 0; b < nb; ++b) {
    summary["bounds"].push_back({{"bound", to_json(cfg.bounds[b].bound)},
                                 {"label", cfg.bounds[b].bound.label()},
                                 {"median_test_error", nan_to_null(res.median_error[b])},
                                 {"median_test_loglik", nan_to_null(res.median_loglik[b])}});
  }
  res.summary = summary;

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    CsvOut csv(out_dir / "results.csv", cfg,
               {"prediction = sigmoid of the posterior-mean latent, threshold 0.5"});
    auto& os = csv.stream();
    os << "split_seed,bound,test_error,test_loglik,diverged\n";
    for (std::size_t s = 0; s < res.seeds.size(); ++s) {
      for (std::size_t b = 0; b < nb; ++b) {
        os << res.seeds[s] << ',' << cfg.bounds[b].bound.label() << ','
           << fmt(res.test_error[s][b]) << ',' << fmt(res.test_loglik[s][b]) << ','
           << (std::isfinite(res.test_error[s][b]) ? 0 : 1) << '\n';
      }
    }
    write_json(out_dir / "summary.json", summary);
  }
  return res;
}

GradVarResult run_grad_var_sweep(const ExperimentConfig& cfg, const fs::path& out_dir) {
  GradVarResult res;
  res.dims = cfg.dims;
  // The bound fitted to find the shared optimum.
  BoundRun fitted{BoundSpec::perturbative(3), cfg.fit};
  if (cfg.raw.contains("sweep") && cfg.raw.at("sweep").contains("fit_bound")) {
    try {
      const auto& fb = cfg.raw.at("sweep").at("fit_bound");
      fitted.bound = bound_from_json(fb);
      if (fb.contains("fit")) fitted.fit = parse_fit(fb.at("fit"), cfg.fit, "fit");
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config.sweep.fit_bound: ") + e.what());
    }
  }
  const std::size_t nb = cfg.bounds.size();
  for (int n : cfg.dims) {
    SinusoidOptions design = cfg.design;
    design.design = SinusoidOptions::Design::Grid;
    design.lo = 0.0;
    design.hi = cfg.x_spacing * (n - 1);
    const Dataset ds = synth_sinusoid(n, cfg.seed, cfg.noise_std, design);
    const GPRegressionModel model(ds.features, ds.labels, cfg.kernel, cfg.noise_std);
    FitResult r;
    try {
      r = fit_bound(model, fitted, cfg.warm_start, cfg.seed);
    } catch (const DivergedError& e) {
      throw AllDivergedError(std::string("grad-var-sweep: optimum fit diverged at N=") +
                             std::to_string(n) + ": " + e.what());
    }
    const double v0 = fitted.bound.kind == BoundKind::Perturbative ? r.averaged_v0 : 0.0;
    res.v0_at_optimum.push_back(v0);
    std::vector<BoundSpec> specs;
    for (const auto& b : cfg.bounds) {
      BoundSpec s = b.bound;
      if (s.kind != BoundKind::KL) s.v0 = v0;
      specs.push_back(s);
    }
    VarianceOptions opt;
    opt.coords = cfg.coords;
    opt.seed = cfg.seed;
    res.variance.push_back(
        gradient_variance_profile(specs, model, r.averaged_params, cfg.variance_samples, opt));
  }
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> x, lx, ly;
    for (std::size_t i = 0; i < res.dims.size(); ++i) {
      x.push_back(res.dims[i]);
      lx.push_back(std::log(static_cast<double>(res.dims[i])));
      ly.push_back(std::log(res.variance[i][b]));
    }
    if (x.size() >= 2) {
      res.log_var_vs_n.push_back(least_squares(x, ly));
      res.log_var_vs_log_n.push_back(least_squares(lx, ly));
    } else {
      res.log_var_vs_n.push_back({});
      res.log_var_vs_log_n.push_back({});
    }
  }

  nlohmann::json summary;
  summary["experiment"] = "grad-var-sweep";
  summary["dims"] = res.dims;
  summary["fit_bound"] = to_json(fitted.bound);
  summary["coords"] = cfg.coords == VarianceCoords::Mean ? "mean" : "all";
  summary["alpha_gradient"] =
      "raw-bound reparameterization gradient rescaled by exp((1-alpha) V0*), V0* from the fit";
  summary["v0_at_optimum"] = res.v0_at_optimum;
  for (std::size_t b = 0; b < nb; ++b) {
    nlohmann::json var = nlohmann::json::array();
    for (const auto& row : res.variance) var.push_back(nan_to_null(row[b]));
    const auto& lin = res.log_var_vs_n[b];
    const auto& lg = res.log_var_vs_log_n[b];
    summary["bounds"].push_back(
        {{"bound", to_json(cfg.bounds[b].bound)},
         {"label", cfg.bounds[b].bound.label()},
         {"variance", var},
         {"log_var_vs_n", {{"slope", lin.slope}, {"intercept", lin.intercept}, {"r2", lin.r2}}},
         {"log_var_vs_log_n", {{"slope", lg.slope}, {"intercept", lg.intercept}, {"r2", lg.r2}}}});
  }
  res.summary = summary;

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    CsvOut csv(out_dir / "variance.csv", cfg,
               {"variance of the single-sample gradient, averaged over " +
                    std::string(cfg.coords == VarianceCoords::Mean ? "the N mean coordinates"
                                                                   : "all 2N coordinates"),
                "alpha gradients: raw bound rescaled by exp((1-alpha) V0*)"});
    auto& os = csv.stream();
    os << "n,bound,variance\n";
    for (std::size_t i = 0; i < res.dims.size(); ++i) {
      for (std::size_t b = 0; b < nb; ++b) {
        os << res.dims[i] << ',' << cfg.bounds[b].bound.label() << ',' << fmt(res.variance[i][b])
           << '\n';
      }
    }
    write_json(out_dir / "summary.json", summary);
  }
  return res;
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg, const fs::path& out_dir) {
  ConvergenceResult res;
  res.seeds = cfg.run_seeds();
  const Dataset ds = load_dataset(cfg);
  const KernelConfig kernel = kernel_for(cfg, ds);
  const std::size_t nb = cfg.bounds.size();
  std::vector<bool> ok;
  for (auto seed : res.seeds) {
    const auto parts = split(ds, SplitSpec{cfg.split, seed});
    const Dataset& train = parts.front();
    const Dataset& test = parts.back();
    const GPClassificationModel model(train.features, train.labels, kernel);
    const VariationalParams init = VariationalParams::random_init(model.dim(), seed);
    std::vector<ConvergenceTrace> row;
    for (const auto& b : cfg.bounds) {
      ConvergenceTrace tr;
      tr.iters.push_back(0);
      tr.test_loglik.push_back(classification_loglik(model, init.mu, test));
      FitConfig fc = b.fit.to_config(b.bound, seed);
      fc.snapshot_every = cfg.eval_every;
      fc.snapshot = [&](int t, const VariationalParams& p, double) {
        tr.iters.push_back(t);
        tr.test_loglik.push_back(classification_loglik(model, p.mu, test));
      };
      try {
        fit(model, init, fc);
        ok.push_back(true);
      } catch (const DivergedError&) {
        tr.diverged = true;
        ok.push_back(false);
      }
      row.push_back(std::move(tr));
    }
    const double ref = row.front().diverged ? kNaN : row.front().test_loglik.back();
    res.reference_final.push_back(ref);
    std::vector<int> reach;
    for (std::size_t b = 1; b < nb; ++b) {
      int hit = -1;
      if (std::isfinite(ref)) {
        for (std::size_t k = 0; k < row[b].iters.size(); ++k) {
          if (row[b].test_loglik[k] >= ref) {
            hit = row[b].iters[k];
            break;
          }
        }
      }
      reach.push_back(hit);
    }
    res.iterations_to_reference.push_back(reach);
    res.traces.push_back(std::move(row));
  }
  require_some_success(ok, "convergence");

  nlohmann::json summary;
  summary["experiment"] = "convergence";
  summary["dataset"] = fs::path(cfg.dataset_path).filename().string();
  summary["seeds"] = res.seeds;
  summary["reference"] = cfg.bounds.front().bound.label();
  summary["reference_final_loglik"] = nlohmann::json::array();
  for (double r : res.reference_final) summary["reference_final_loglik"].push_back(nan_to_null(r));
  for (std::size_t b = 1; b < nb; ++b) {
    std::vector<double> ratio;
    nlohmann::json reach = nlohmann::json::array();
    for (std::size_t s = 0; s < res.seeds.size(); ++s) {
      const int hit = res.iterations_to_reference[s][b - 1];
      const int total = res.traces[s].front().iters.back();
      reach.push_back(hit);
      ratio.push_back(hit < 0 || total <= 0 ? std::numeric_limits<double>::infinity()
                                            : static_cast<double>(hit) / total);
    }
    std::vector<double> sorted = ratio;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    summary["bounds"].push_back({{"bound", to_json(cfg.bounds[b].bound)},
                                 {"label", cfg.bounds[b].bound.label()},
                                 {"iterations_to_reference", reach},
                                 {"median_fraction_of_reference_iterations", nan_to_null(med)}});
  }
  res.summary = summary;

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    CsvOut csv(out_dir / "traces.csv", cfg,
               {"test log-likelihood per data point under the posterior-mean latent"});
    auto& os = csv.stream();
    os << "seed,bound,iter,test_loglik\n";
    for (std::size_t s = 0; s < res.seeds.size(); ++s) {
      for (std::size_t b = 0; b < nb; ++b) {
        const auto& tr = res.traces[s][b];
        for (std::size_t k = 0; k < tr.iters.size(); ++k) {
          os << res.seeds[s] << ',' << cfg.bounds[b].bound.label() << ',' << tr.iters[k] << ','
             << fmt(tr.test_loglik[k]) << '\n';
        }
      }
    }
    write_json(out_dir / "summary.json", summary);
  }
  return res;
}

nlohmann::json run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  switch (cfg.kind) {
    case ExperimentKind::Toy1D: return run_toy1d(cfg, out_dir).summary;
    case ExperimentKind::GPRegression: return run_gp_regression(cfg, out_dir).summary;
    case ExperimentKind::GPClassification: return run_gp_classification(cfg, out_dir).summary;
    case ExperimentKind::GradVarSweep: return run_grad_var_sweep(cfg, out_dir).summary;
    case ExperimentKind::Convergence: return run_convergence(cfg, out_dir).summary;
  }
  throw ConfigError("unknown experiment");
}

}  // namespace pvi
