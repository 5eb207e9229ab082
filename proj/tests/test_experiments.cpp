#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "pvi/errors.hpp"
#include "pvi/experiments.hpp"

using namespace pvi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pvi_test_experiments" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const nlohmann::json& j) {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PVIBENCH_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json small_toy() {
  return {{"experiment", "toy1d"},
          {"seed", 3},
          {"repeats", 2},
          {"fit", {{"samples", 5}, {"iterations", 300}, {"schedule", {{"kind", "constant"}, {"rho", 0.01}}}}},
          {"bounds", {{{"kind", "kl"}}, {{"kind", "perturbative"}, {"order", 3}}, {{"kind", "alpha"}, {"alpha", 0.2}}}},
          {"density_grid", {{"lo", -5}, {"hi", 5}, {"points", 21}}}};
}

std::string data_dir() { return PVI_DATA_DIR; }

}  // namespace

TEST_CASE("median and least squares") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(median({1.0, std::nan(""), 5.0}) == 3.0);
  CHECK(std::isnan(median({})));
  const auto f = least_squares({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("config parsing") {
  const auto cfg = parse_experiment_config(small_toy(), ".");
  CHECK(cfg.kind == ExperimentKind::Toy1D);
  CHECK(cfg.bounds.size() == 3);
  CHECK(cfg.bounds[1].bound.order == 3);
  CHECK(cfg.bounds[1].fit.iterations == 300);
  CHECK(cfg.run_seeds() == std::vector<std::uint64_t>{3, 4});
  CHECK(cfg.config_hash().size() == 16);

  auto other = small_toy();
  other["seed"] = 4;
  CHECK(parse_experiment_config(other, ".").config_hash() != cfg.config_hash());

  auto bad = small_toy();
  bad["bounds"][1]["order"] = 2;
  try {
    parse_experiment_config(bad, ".");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bounds[1]") != std::string::npos);
  }
  bad = small_toy();
  bad["fit"]["samples"] = 0;
  CHECK_THROWS_AS(parse_experiment_config(bad, "."), ConfigError);
  bad = small_toy();
  bad["experiment"] = "vae";
  CHECK_THROWS_AS(parse_experiment_config(bad, "."), ConfigError);
  bad = small_toy();
  bad["fit"]["iterations"] = "many";
  CHECK_THROWS_AS(parse_experiment_config(bad, "."), ConfigError);

  nlohmann::json cls = {{"experiment", "gp-classification"},
                        {"bounds", {{{"kind", "kl"}}}},
                        {"dataset", {{"path", "missing.csv"}, {"schema", "missing.schema.json"}}}};
  CHECK_THROWS_AS(parse_experiment_config(cls, "."), ConfigError);
  cls["dataset"] = {{"path", "crabs.csv"}, {"schema", "crabs.schema.json"}};
  CHECK_NOTHROW(parse_experiment_config(cls, data_dir()));
  cls["dataset"]["split"] = {0.5, 0.6};
  CHECK_THROWS_AS(parse_experiment_config(cls, data_dir()), ConfigError);
  CHECK(experiment_from_name("gp_regression") == ExperimentKind::GPRegression);
}

TEST_CASE("toy experiment writes plot-ready files") {
  const auto dir = scratch("toy");
  const auto cfg = parse_experiment_config(small_toy(), ".");
  const auto res = run_toy1d(cfg, dir);
  CHECK(res.runs.size() == 2);
  CHECK(res.runs[0].size() == 3);
  const std::string params = slurp(dir / "fitted_params.csv");
  CHECK(params.rfind("# experiment=toy1d\n# seed=3\n# config_hash=" + cfg.config_hash(), 0) == 0);
  CHECK(params.find("seed,bound,mean,sigma,v0,final_mean,final_sigma,diverged\n") != std::string::npos);
  const std::string dens = slurp(dir / "densities.csv");
  CHECK(dens.find("z,target,KLVI,PBBVI(K=3),alpha-VI(alpha=0.2)\n") != std::string::npos);
  CHECK(fs::exists(dir / "summary.json"));
}

TEST_CASE("small regression and sweep runs") {
  nlohmann::json gpr = {{"experiment", "gp-regression"},
                        {"seed", 0},
                        {"repeats", 1},
                        {"fit", {{"samples", 1}, {"iterations", 2000}, {"schedule", {{"kind", "constant"}, {"rho", 1e-3}}}}},
                        {"bounds",
                         {{{"kind", "kl"}},
                          {{"kind", "perturbative"},
                           {"order", 3},
                           {"fit", {{"samples", 20}, {"iterations", 200}, {"schedule", {{"kind", "constant"}, {"rho", 1e-5}}}}}}}},
                        {"warm_start", {{"enabled", true}}},
                        {"data", {{"n", 8}, {"design", "grid"}}}};
  const auto dir = scratch("gpr");
  const auto res = run_gp_regression(parse_experiment_config(gpr, "."), dir);
  REQUIRE(res.method_avg_var.size() == 1);
  CHECK(res.method_avg_var[0][0] > 0.0);
  CHECK(res.median_analytic > 0.0);
  CHECK(slurp(dir / "posterior.csv").find("seed,x,y,method,mean,lower,upper\n") != std::string::npos);

  nlohmann::json sweep = {{"experiment", "grad-var-sweep"},
                          {"fit", {{"samples", 1}, {"iterations", 1000}, {"schedule", {{"kind", "constant"}, {"rho", 1e-3}}}}},
                          {"warm_start", {{"enabled", true}}},
                          {"bounds", {{{"kind", "alpha"}, {"alpha", 2.0}}, {{"kind", "perturbative"}, {"order", 3}}}},
                          {"sweep",
                           {{"dims", {3, 6}},
                            {"variance_samples", 2000},
                            {"fit_bound",
                             {{"kind", "perturbative"},
                              {"order", 3},
                              {"fit", {{"samples", 10}, {"iterations", 200}, {"schedule", {{"kind", "constant"}, {"rho", 1e-4}}}}}}}}}};
  const auto sdir = scratch("sweep");
  const auto sres = run_grad_var_sweep(parse_experiment_config(sweep, "."), sdir);
  CHECK(sres.variance.size() == 2);
  CHECK(sres.variance[1][0] > 0.0);
  const std::string text = slurp(sdir / "variance.csv");
  CHECK(text.find("n,bound,variance\n3,alpha-VI(alpha=2),") != std::string::npos);
  CHECK(text.find("# alpha gradients:") != std::string::npos);
}

TEST_CASE("small classification and convergence runs") {
  nlohmann::json cls = {{"experiment", "gp-classification"},
                        {"repeats", 1},
                        {"fit", {{"samples", 2}, {"iterations", 200}, {"schedule", {{"kind", "constant"}, {"rho", 1e-3}}}}},
                        {"bounds", {{{"kind", "kl"}}}},
                        {"dataset", {{"path", "crabs.csv"}, {"schema", "crabs.schema.json"}}}};
  const auto dir = scratch("cls");
  const auto res = run_gp_classification(parse_experiment_config(cls, data_dir()), dir);
  CHECK(res.test_error[0][0] >= 0.0);
  CHECK(res.test_error[0][0] <= 1.0);
  CHECK(fs::exists(dir / "results.csv"));

  nlohmann::json conv = {{"experiment", "convergence"},
                         {"repeats", 1},
                         {"fit", {{"samples", 2}, {"iterations", 100}, {"schedule", {{"kind", "constant"}, {"rho", 1e-5}}}}},
                         {"bounds", {{{"kind", "alpha"}, {"alpha", 0.5}}, {{"kind", "perturbative"}, {"order", 3}}}},
                         {"eval_every", 25},
                         {"dataset", {{"path", "sonar.csv"}, {"schema", "sonar.schema.json"}, {"split", {0.34, 0.33, 0.33}}}}};
  const auto cdir = scratch("conv");
  const auto cres = run_convergence(parse_experiment_config(conv, data_dir()), cdir);
  REQUIRE(cres.traces.size() == 1);
  CHECK(cres.traces[0][0].iters == std::vector<int>{0, 25, 50, 75, 100});
  CHECK(slurp(cdir / "traces.csv").find("seed,bound,iter,test_loglik\n") != std::string::npos);
}

TEST_CASE("every bound diverging is reported") {
  auto j = small_toy();
  j["fit"]["schedule"]["rho"] = 400.0;
  j["bounds"] = {{{"kind", "perturbative"}, {"order", 3}}};
  CHECK_THROWS_AS(run_toy1d(parse_experiment_config(j, "."), scratch("div")), AllDivergedError);
}

TEST_CASE("cli smoke, determinism and exit codes") {
  const auto dir = scratch("cli");
  const auto cfg = write_config(dir, "toy.json", small_toy());
  REQUIRE(run_cli("run toy1d --config " + cfg.string() + " --out " + (dir / "a").string()) == 0);
  CHECK(fs::exists(dir / "a" / "fitted_params.csv"));
  CHECK(fs::exists(dir / "a" / "densities.csv"));
  REQUIRE(run_cli("toy1d --config " + cfg.string() + " --out " + (dir / "b").string()) == 0);
  for (const char* f : {"fitted_params.csv", "densities.csv", "summary.json"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  // --seed overrides the config and lands in the metadata.
  REQUIRE(run_cli("toy1d --config " + cfg.string() + " --seed 9 --out " + (dir / "c").string()) == 0);
  CHECK(slurp(dir / "c" / "fitted_params.csv").find("# seed=9\n") != std::string::npos);

  // Config errors.
  CHECK(run_cli("toy1d --config " + (dir / "nope.json").string()) == 1);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(run_cli("toy1d --config " + (dir / "broken.json").string()) == 1);
  CHECK(run_cli("gp-regression --config " + cfg.string()) == 1);
  CHECK(run_cli("toy1d") == 1);

  // Every bound diverges.
  auto div = small_toy();
  div["fit"]["schedule"]["rho"] = 400.0;
  div["bounds"] = {{{"kind", "perturbative"}, {"order", 3}}};
  const auto dcfg = write_config(dir, "div.json", div);
  CHECK(run_cli("toy1d --config " + dcfg.string() + " --out " + (dir / "d").string()) == 2);

  // Output location is not writable: a regular file sits where the directory should go.
  std::ofstream(dir / "blocker") << "x";
  CHECK(run_cli("toy1d --config " + cfg.string() + " --out " + (dir / "blocker" / "sub").string()) == 3);
}
