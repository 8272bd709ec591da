// Command-line front end: single tests, level/power/benchmark grids and
// synthetic data generation.

#include "nysmmd/data_io.hpp"
#include "nysmmd/experiment.hpp"
#include "nysmmd/permutation_test.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace nysmmd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRejected = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TestArgs {
  std::string x_path;
  std::string y_path;
  bool header = false;
  double alpha = 0.05;
  Index permutations = 199;
  std::string method = "nystrom-uniform";
  Index landmarks = 64;
  std::uint64_t seed = 0;
  std::optional<double> bandwidth;
  std::optional<double> lambda;
  std::string source = "pooled";
  bool keep_statistics = false;
};

struct GridArgs {
  std::string spec_path;
  std::vector<std::string> methods;
  std::vector<std::string> landmarks;
  std::vector<Index> sizes;
  std::optional<double> rho1;
  std::vector<double> rho2;
  std::optional<Index> d;
  std::optional<double> alpha;
  std::optional<Index> permutations;
  std::optional<Index> reps;
  std::optional<std::uint64_t> seed;
  std::string output;
  bool paired = false;
};

struct GenArgs {
  Index d = 3;
  double rho = 0.5;
  Index n = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

LandmarkSource parse_source(const std::string& s) {
  if (s == "pooled") return LandmarkSource::pooled;
  if (s == "split") return LandmarkSource::split;
  throw UsageError("--source must be pooled or split");
}

int run_single(const TestArgs& a) {
  const Dataset x = load_csv(a.x_path, a.header);
  const Dataset y = load_csv(a.y_path, a.header);
  TestConfig cfg;
  cfg.alpha = a.alpha;
  cfg.permutations = a.permutations;
  cfg.seed = a.seed;
  cfg.bandwidth = a.bandwidth;
  cfg.keep_statistics = a.keep_statistics;
  MapSpec map;
  try {
    map.method = parse_method(a.method);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  map.ell = a.landmarks;
  map.lambda = a.lambda;
  map.source = parse_source(a.source);
  if (const auto warning = config_warning(cfg)) {
    std::cerr << "warning: " << *warning << '\n';
  }
  const TestOutcome outcome = run_test(x, y, cfg, map);
  std::cout << outcome_to_json(outcome, map.method).dump(2) << '\n';
  return outcome.reject ? kExitRejected : kExitOk;
}

ExperimentSpec grid_spec(const GridArgs& a) {
  ExperimentSpec spec;
  if (!a.spec_path.empty()) {
    std::ifstream in(a.spec_path);
    if (!in) {
      throw UsageError("cannot open spec file " + a.spec_path);
    }
    try {
      spec = nlohmann::json::parse(in).get<ExperimentSpec>();
    } catch (const std::exception& e) {
      throw UsageError("invalid spec " + a.spec_path + ": " + e.what());
    }
  }
  try {
    if (!a.methods.empty()) {
      spec.methods.clear();
      for (const auto& m : a.methods) spec.methods.push_back(parse_method(m));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!a.landmarks.empty()) {
    spec.landmarks.clear();
    for (const auto& l : a.landmarks) {
      if (l == "sqrt") {
        spec.landmarks.push_back(LandmarkRule{0, true});
      } else {
        try {
          spec.landmarks.push_back(LandmarkRule{std::stoll(l), false});
        } catch (const std::exception&) {
          throw UsageError("--landmarks takes integers or 'sqrt', got '" + l + "'");
        }
      }
    }
  }
  if (!a.sizes.empty()) spec.sample_sizes = a.sizes;
  if (a.rho1) spec.scenario.rho1 = *a.rho1;
  if (!a.rho2.empty()) spec.scenario.rho2 = a.rho2;
  if (a.d) spec.scenario.d = *a.d;
  if (a.alpha) spec.alpha = *a.alpha;
  if (a.permutations) spec.permutations = *a.permutations;
  if (a.reps) spec.repetitions = *a.reps;
  if (a.seed) spec.seed = *a.seed;
  if (!a.output.empty()) spec.output = a.output;
  if (a.paired) spec.paired = true;
  try {
    validate(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

int run_grid(const GridArgs& a, Regime regime) {
  const ExperimentSpec spec = grid_spec(a);
  const auto rows = estimate_rate(spec, regime);
  if (spec.output.empty() || spec.output == "-") {
    write_results_csv(std::cout, rows);
  } else {
    std::ofstream out(spec.output);
    if (!out) {
      throw std::runtime_error("cannot write " + spec.output);
    }
    write_results_csv(out, rows);
  }
  for (const auto& r : rows) {
    if (r.error) {
      std::cerr << "cell " << to_string(r.method) << " ell=" << r.ell << " n=" << r.n_x
                << " param=" << r.param << " failed: " << *r.error << '\n';
    }
  }
  return kExitOk;
}

int run_gen(const GenArgs& a) {
  const Dataset d = sample_correlated_gaussians(a.d, a.rho, a.n, a.seed);
  if (a.out.empty() || a.out == "-") {
    write_csv(std::cout, d);
  } else {
    write_csv(a.out, d);
  }
  return kExitOk;
}

void add_grid_options(CLI::App* cmd, GridArgs& a) {
  cmd->add_option("--spec", a.spec_path, "JSON experiment spec; flags override its fields");
  cmd->add_option("--method", a.methods, "exact, nystrom-uniform, nystrom-akrls, nystrom-krls, rff");
  cmd->add_option("--landmarks", a.landmarks, "feature counts, or 'sqrt' for ceil(sqrt(n_x + n_y))");
  cmd->add_option("--n", a.sizes, "sample size per group");
  cmd->add_option("--rho1", a.rho1, "correlation of the first sample");
  cmd->add_option("--rho2", a.rho2, "correlation(s) of the second sample");
  cmd->add_option("--d", a.d, "dimension");
  cmd->add_option("--alpha", a.alpha, "test level");
  cmd->add_option("--permutations", a.permutations, "number of permutations");
  cmd->add_option("--reps", a.reps, "repetitions per grid cell");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--output", a.output, "results CSV path ('-' for stdout)");
  cmd->add_flag("--paired", a.paired, "share data draws across methods within a repetition");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nystrom-approximated MMD permutation two-sample tests"};
  app.require_subcommand(1);

  TestArgs test_args;
  CLI::App* test = app.add_subcommand("test", "run one test on two CSV files");
  test->add_option("--x", test_args.x_path, "first sample (CSV)")->required();
  test->add_option("--y", test_args.y_path, "second sample (CSV)")->required();
  test->add_flag("--header", test_args.header, "skip the first row of each file");
  test->add_option("--alpha", test_args.alpha, "test level")->capture_default_str();
  test->add_option("--permutations", test_args.permutations)->capture_default_str();
  test->add_option("--method", test_args.method)->capture_default_str();
  test->add_option("--landmarks", test_args.landmarks, "feature count ell")->capture_default_str();
  test->add_option("--seed", test_args.seed)->capture_default_str();
  test->add_option("--bandwidth", test_args.bandwidth, "fixed bandwidth (default: median heuristic)");
  test->add_option("--lambda", test_args.lambda, "leverage-score regularization");
  test->add_option("--source", test_args.source, "landmark source: pooled or split")->capture_default_str();
  test->add_flag("--keep-statistics", test_args.keep_statistics, "include all permuted statistics");

  GridArgs level_args, power_args, bench_args;
  CLI::App* level = app.add_subcommand("level", "type-I error study (both samples from the null)");
  add_grid_options(level, level_args);
  CLI::App* power = app.add_subcommand("power", "power study over the alternative grid");
  add_grid_options(power, power_args);
  CLI::App* bench = app.add_subcommand("bench", "power and mean wall-clock time per full test");
  add_grid_options(bench, bench_args);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "write correlated Gaussian samples as CSV");
  gen->add_option("--d", gen_args.d)->capture_default_str();
  gen->add_option("--rho", gen_args.rho)->capture_default_str();
  gen->add_option("--n", gen_args.n)->capture_default_str();
  gen->add_option("--seed", gen_args.seed)->capture_default_str();
  gen->add_option("--out", gen_args.out, "output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (test->parsed()) return run_single(test_args);
    if (level->parsed()) return run_grid(level_args, Regime::null);
    if (power->parsed()) return run_grid(power_args, Regime::alternative);
    if (bench->parsed()) return run_grid(bench_args, Regime::alternative);
    if (gen->parsed()) return run_gen(gen_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
