#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvi/bounds.hpp"
#include "pvi/data.hpp"
#include "pvi/estimators.hpp"
#include "pvi/model.hpp"
#include "pvi/optimizer.hpp"

namespace pvi {

enum class ExperimentKind { Toy1D, GPRegression, GPClassification, GradVarSweep, Convergence };

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

struct FitSettings {
  int samples = 10;
  int iterations = 1000;
  Schedule schedule = Schedule::constant(0.01);
  EstimatorKind estimator = EstimatorKind::Reparameterization;
  double tail_fraction = 0.5;

  FitConfig to_config(const BoundSpec& bound, std::uint64_t seed) const;
};

struct BoundRun {
  BoundSpec bound;
  FitSettings fit;
};

// KLVI pre-fit used to initialize Perturbative runs (lambda from the KLVI
// tail average, V0 = -ELBO estimate).
struct WarmStart {
  bool enabled = false;
  FitSettings fit;
  int elbo_draws = 1000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Toy1D;
  std::uint64_t seed = 0;
  int repeats = 1;  // runs use seeds seed, seed+1, ...
  FitSettings fit;
  std::vector<BoundRun> bounds;
  WarmStart warm_start;
  std::string output_dir = "out";
  std::filesystem::path base_dir;  // relative dataset paths resolve here
  nlohmann::json raw;

  // toy1d
  BimodalTarget target;
  double density_lo = -6.0;
  double density_hi = 6.0;
  int density_points = 481;

  // gp_regression and grad_var_sweep data
  int n_points = 50;
  double noise_std = 0.2;
  SinusoidOptions design{0.0, 6.0, SinusoidOptions::Design::Grid};
  KernelConfig kernel;
  bool length_from_data = true;  // classification: l = sqrt(D)/2 unless given

  // gp_classification and convergence
  std::string dataset_path;
  std::string schema_path;
  bool standardize = true;
  std::vector<double> split{0.5, 0.5};

  // grad_var_sweep
  std::vector<int> dims{5, 10, 20, 40, 60, 80, 100};
  double x_spacing = 0.5;
  int variance_samples = 100000;
  VarianceCoords coords = VarianceCoords::Mean;

  // convergence
  int eval_every = 100;

  std::vector<std::uint64_t> run_seeds() const;
  std::string config_hash() const;
};

// Parses and validates; relative paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::string& path);

// Thrown when every configured bound diverged.
class AllDivergedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------

struct Toy1DResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<ComparisonEntry>> runs;  // [seed][bound]
  std::vector<double> median_sigma;                // per bound, diverged runs skipped
  std::vector<double> median_mean;
  nlohmann::json summary;
};

struct GPRegressionResult {
  std::vector<std::uint64_t> seeds;
  std::vector<double> analytic_avg_var;               // per seed
  std::vector<std::vector<double>> method_avg_var;    // [seed][bound], NaN if diverged
  double median_analytic = 0.0;
  std::vector<double> median_method;
  nlohmann::json summary;
};

struct GPClassificationResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<double>> test_error;    // [split][bound]
  std::vector<std::vector<double>> test_loglik;   // per data point
  std::vector<double> median_error;
  std::vector<double> median_loglik;
  nlohmann::json summary;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct GradVarResult {
  std::vector<int> dims;
  std::vector<std::vector<double>> variance;  // [dim][bound]
  std::vector<LineFit> log_var_vs_n;          // per bound
  std::vector<LineFit> log_var_vs_log_n;
  std::vector<double> v0_at_optimum;          // per dim
  nlohmann::json summary;
};

struct ConvergenceTrace {
  std::vector<int> iters;
  std::vector<double> test_loglik;
  bool diverged = false;
};

struct ConvergenceResult {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<ConvergenceTrace>> traces;  // [seed][bound]
  // First bound is the reference: per seed, the iteration at which each other
  // bound first reaches the reference's final test log-likelihood (-1 never).
  std::vector<std::vector<int>> iterations_to_reference;
  std::vector<double> reference_final;
  nlohmann::json summary;
};

// Each run_* writes its files into `out_dir` when it is non-empty.
Toy1DResult run_toy1d(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {});
GPRegressionResult run_gp_regression(const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir = {});
GPClassificationResult run_gp_classification(const ExperimentConfig& cfg,
                                             const std::filesystem::path& out_dir = {});
GradVarResult run_grad_var_sweep(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir = {});
ConvergenceResult run_convergence(const ExperimentConfig& cfg,
                                  const std::filesystem::path& out_dir = {});

// Dispatches on cfg.kind and returns the JSON summary.
nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

// Shared pieces, exposed for tests.
FitResult fit_bound(const Model& model, const BoundRun& run, const WarmStart& warm,
                    std::uint64_t seed);
double classification_error(const GPClassificationModel& model, const Eigen::VectorXd& f_mean,
                            const Dataset& test);
double classification_loglik(const GPClassificationModel& model, const Eigen::VectorXd& f_mean,
                             const Dataset& test);
double median(std::vector<double> values);

}  // namespace pvi
