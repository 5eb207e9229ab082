#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace pvi {

struct Dataset {
  Eigen::MatrixXd features;  // N x D
  Eigen::VectorXd labels;    // {0,1} for classification, reals for regression
  std::vector<std::string> feature_names;
  std::string source;
  std::vector<std::size_t> rejected_rows;  // 1-based file line numbers
  std::vector<bool> constant_columns;      // set by standardize

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  Dataset subset(const std::vector<int>& rows) const;
};

struct CsvSchema {
  std::string label_column;
  std::string positive_label;
  char delimiter = ',';
  std::vector<std::string> ignore_columns;

  static CsvSchema from_json(const nlohmann::json& j);
  static CsvSchema from_file(const std::string& path);
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Zero mean, unit sample std per column; constant columns are left as they
// are and flagged.
Dataset standardize(const Dataset& ds);

struct SplitSpec {
  std::vector<double> fractions;  // 2 or 3 entries summing to 1
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<Dataset> split(const Dataset& ds, const SplitSpec& spec);

// Sizes for n rows by largest remainder; exposed for tests.
std::vector<int> split_sizes(int n, const std::vector<double>& fractions);

struct SinusoidOptions {
  // Random: x_i ~ U[lo, hi]. Grid: evenly spaced x, only the noise is random.
  enum class Design { Random, Grid };
  double lo = 0.0;
  double hi = 6.0;
  Design design = Design::Random;
};

// x per `options.design`, y = sin x + 0.5 sin 3x + N(0, noise_std^2).
Dataset synth_sinusoid(int n, std::uint64_t seed, double noise_std,
                       const SinusoidOptions& options = {});

double sinusoid_curve(double x);

double kernel_length_default(const Dataset& ds);

}  // namespace pvi
