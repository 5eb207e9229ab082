#include "pvi/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pvi/errors.hpp"
#include "pvi/rng.hpp"

namespace pvi {

namespace {

constexpr std::uint64_t kSplitStream = 0x5b117ULL;
constexpr std::uint64_t kSinusoidStream = 0x51deULL;

bool is_missing(const std::string& field) {
  return field.empty() || field == "?" || field == "NA" || field == "na" ||
         field == "N/A" || field == "NaN" || field == "nan";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits one record; quoted fields may contain the delimiter and "" escapes.
// A record never spans lines here (the shipped datasets have no embedded
// newlines), so an unterminated quote is a parse error.
std::vector<std::string> split_record(const std::string& line, char delim,
                                      std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && trim(cur).empty()) {
      quoted = true;
      was_quoted = true;
      cur.clear();
    } else if (c == delim) {
      fields.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", line_no, fields.size() + 1);
  fields.push_back(was_quoted ? cur : trim(cur));
  return fields;
}

double parse_number(const std::string& field, std::size_t line, std::size_t column) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError("cannot parse '" + field + "' as a number", line, column);
  }
  return v;
}

}  // namespace

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels[static_cast<Eigen::Index>(i)] = labels[rows[i]];
  }
  out.feature_names = feature_names;
  out.source = source;
  out.constant_columns = constant_columns;
  return out;
}

CsvSchema CsvSchema::from_json(const nlohmann::json& j) {
  CsvSchema s;
  try {
    s.label_column = j.at("label_column").get<std::string>();
    s.positive_label = j.value("positive_label", std::string());
    const std::string delim = j.value("delimiter", std::string(","));
    if (delim.size() != 1) throw SchemaError("schema delimiter must be one character");
    s.delimiter = delim[0];
    if (j.contains("ignore_columns")) {
      s.ignore_columns = j.at("ignore_columns").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad schema: ") + e.what());
  }
  return s;
}

CsvSchema CsvSchema::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file '" + path + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("schema '" + path + "': " + e.what());
  }
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_record(line, schema.delimiter, line_no);
      break;
    }
  }
  if (header.empty()) throw ParseError("missing header row", line_no, 1);

  int label_idx = -1;
  std::vector<int> feature_idx;
  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) {
      label_idx = static_cast<int>(c);
    } else if (std::find(schema.ignore_columns.begin(), schema.ignore_columns.end(),
                         header[c]) == schema.ignore_columns.end()) {
      feature_idx.push_back(static_cast<int>(c));
      ds.feature_names.push_back(header[c]);
    }
  }
  if (label_idx < 0) {
    throw SchemaError("label column '" + schema.label_column + "' not in header of '" +
                      path + "'");
  }
  if (feature_idx.empty()) throw SchemaError("no feature columns in '" + path + "'");

  const bool classification = !schema.positive_label.empty();
  std::string negative_label;
  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_record(line, schema.delimiter, line_no);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no, std::min(fields.size(), header.size()) + 1);
    }
    const bool missing =
        is_missing(fields[static_cast<std::size_t>(label_idx)]) ||
        std::any_of(feature_idx.begin(), feature_idx.end(),
                    [&](int c) { return is_missing(fields[static_cast<std::size_t>(c)]); });
    if (missing) {
      ds.rejected_rows.push_back(line_no);
      continue;
    }
    std::vector<double> row;
    row.reserve(feature_idx.size());
    for (int c : feature_idx) {
      row.push_back(parse_number(fields[static_cast<std::size_t>(c)], line_no,
                                 static_cast<std::size_t>(c) + 1));
    }
    const std::string& lab = fields[static_cast<std::size_t>(label_idx)];
    double y = 0.0;
    if (classification) {
      if (lab == schema.positive_label) {
        y = 1.0;
      } else if (negative_label.empty() || lab == negative_label) {
        negative_label = lab;
      } else {
        throw SchemaError("unknown label '" + lab + "' at line " + std::to_string(line_no) +
                          " (labels seen: '" + schema.positive_label + "', '" +
                          negative_label + "')");
      }
    } else {
      y = parse_number(lab, line_no, static_cast<std::size_t>(label_idx) + 1);
    }
    rows.push_back(std::move(row));
    labels.push_back(y);
  }
  if (rows.size() < 2) throw InputError("dataset '" + path + "' has fewer than 2 rows");

  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(feature_idx.size()));
  ds.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    ds.labels[static_cast<Eigen::Index>(i)] = labels[i];
  }
  ds.source = path;
  ds.constant_columns.assign(feature_idx.size(), false);
  return ds;
}

Dataset standardize(const Dataset& ds) {
  if (ds.size() < 2) throw InputError("standardize: need at least 2 rows");
  Dataset out = ds;
  out.constant_columns.assign(static_cast<std::size_t>(ds.dim()), false);
  const double n = ds.size();
  for (int c = 0; c < ds.dim(); ++c) {
    const auto col = ds.features.col(c);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / (n - 1.0);
    if (!(var > 0.0)) {
      out.constant_columns[static_cast<std::size_t>(c)] = true;
      continue;
    }
    out.features.col(c) = ((col.array() - mean) / std::sqrt(var)).matrix();
  }
  return out;
}

void SplitSpec::validate() const {
  if (fractions.size() < 2 || fractions.size() > 3) {
    throw ConfigError("split: need 2 or 3 fractions");
  }
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split: fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");
}

std::vector<int> split_sizes(int n, const std::vector<double>& fractions) {
  std::vector<int> sizes(fractions.size());
  std::vector<std::pair<double, std::size_t>> rema;
  int used = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * n;
    sizes[i] = static_cast<int>(std::floor(exact));
    used += sizes[i];
    rema.emplace_back(exact - sizes[i], i);
  }
  // Largest remainder first; ties go to the earlier split.
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++sizes[rema[k % rema.size()].second];
  return sizes;
}

std::vector<Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  const int n = ds.size();
  const std::vector<int> sizes = split_sizes(n, spec.fractions);
  for (int s : sizes) {
    if (s == 0) throw ConfigError("split: a split would be empty");
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  NoiseStream rng(spec.seed, kSplitStream);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(std::floor(rng.next_uniform() * (i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<Dataset> out;
  int offset = 0;
  for (int s : sizes) {
    std::vector<int> rows(perm.begin() + offset, perm.begin() + offset + s);
    out.push_back(ds.subset(rows));
    offset += s;
  }
  return out;
}

double sinusoid_curve(double x) { return std::sin(x) + 0.5 * std::sin(3.0 * x); }

Dataset synth_sinusoid(int n, std::uint64_t seed, double noise_std,
                       const SinusoidOptions& options) {
  if (n < 2) throw InputError("synth_sinusoid: need n >= 2");
  if (!(noise_std >= 0.0)) throw InputError("synth_sinusoid: noise_std must be >= 0");
  if (!(options.hi > options.lo)) throw InputError("synth_sinusoid: empty interval");
  Dataset ds;
  ds.features.resize(n, 1);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u =
        options.design == SinusoidOptions::Design::Grid
            ? static_cast<double>(i) / (n - 1)
            : NoiseStream::uniform_at(seed, kSinusoidStream, static_cast<std::uint64_t>(i), 0);
    const double x = options.lo + (options.hi - options.lo) * u;
    const double eps = NoiseStream::normal_at(seed, kSinusoidStream + 1,
                                              static_cast<std::uint64_t>(i), 1)[0];
    ds.features(i, 0) = x;
    ds.labels[i] = sinusoid_curve(x) + noise_std * eps;
  }
  ds.feature_names = {"x"};
  ds.source = "synth_sinusoid(seed=" + std::to_string(seed) + ")";
  ds.constant_columns = {false};
  return ds;
}

double kernel_length_default(const Dataset& ds) {
  if (ds.dim() < 1) throw InputError("kernel_length_default: need D >= 1");
  return std::sqrt(static_cast<double>(ds.dim())) / 2.0;
}

}  // namespace pvi
