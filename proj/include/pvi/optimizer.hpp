#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "pvi/bounds.hpp"
#include "pvi/errors.hpp"
#include "pvi/estimators.hpp"
#include "pvi/model.hpp"
#include "pvi/variational.hpp"

namespace pvi {

struct Schedule {
  enum class Kind { Constant, RobbinsMonro };
  Kind kind = Kind::Constant;
  double rho = 0.01;  // Constant
  double a = 1.0;     // RobbinsMonro: a / (b + t)
  double b = 1.0;

  static Schedule constant(double rho);
  static Schedule robbins_monro(double a, double b);

  double at(int t) const;  // t counts from 1
  void validate() const;
};

nlohmann::json to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

using SnapshotHook =
    std::function<void(int iter, const VariationalParams& params, double v0)>;

struct FitConfig {
  BoundSpec bound;
  int samples_per_step = 10;
  int iterations = 1000;
  Schedule schedule;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double initial_v0 = 0.0;  // perturbative fits start here
  EstimatorKind estimator = EstimatorKind::Reparameterization;
  // Fraction of final iterates averaged into FitResult::averaged_*.
  double tail_fraction = 0.5;
  SnapshotHook snapshot;
  int snapshot_every = 0;  // 0 disables the hook

  void validate() const;
};

struct TraceRecord {
  int iter = 0;
  double surrogate = 0.0;  // objective estimate driving the update
  double v0 = 0.0;
  double elbo = 0.0;
  double grad_norm = 0.0;
};

struct FitTrace {
  std::vector<TraceRecord> records;
  VariationalParams final_params;
  double final_v0 = 0.0;

  void write_csv(std::ostream& os) const;
  nlohmann::json summary() const;
};

struct FitResult {
  VariationalParams params;  // last iterate
  double v0 = 0.0;
  VariationalParams averaged_params;  // mean over the tail of the run
  double averaged_v0 = 0.0;
  FitTrace trace;
};

class DivergedError : public NumericalError {
 public:
  DivergedError(const std::string& what, FitTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const FitTrace& trace() const { return trace_; }

 private:
  FitTrace trace_;
};

inline constexpr double kMaxAbsV0 = 1e4;

// Joint lambda/V0 ascent for Perturbative bounds; plain SGD on lambda for KL and Alpha.
// For Alpha the per-sample weights exp((1-alpha)(w + c)) use c = minus the
// previous step's Renyi-bound estimate, so the direction approximates the
// normalized Renyi gradient without blowing up in high dimension.
FitResult fit(const Model& model, const VariationalParams& init, const FitConfig& config);

struct ComparisonEntry {
  BoundSpec bound;
  bool diverged = false;
  std::string message;
  double mean = 0.0;   // tail-averaged
  double sigma = 0.0;
  double v0 = 0.0;
  double final_mean = 0.0;  // last iterate
  double final_sigma = 0.0;
};

// Fits a univariate Gaussian to the mixture under each bound. Divergence is
// recorded per entry and the remaining bounds still run.
std::vector<ComparisonEntry> fit_bimodal_comparison(const BimodalTarget& target,
                                                    const std::vector<BoundSpec>& bounds,
                                                    const FitConfig& config);

}  // namespace pvi
