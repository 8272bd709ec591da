#include "nysmmd/experiment.hpp"

#include "nysmmd/data_io.hpp"
#include "nysmmd/random.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nysmmd {

using nlohmann::json;

Interval wilson_interval(Index successes, Index trials, double confidence) {
  if (trials < 1) {
    throw std::invalid_argument("wilson_interval: need at least one trial");
  }
  if (successes < 0 || successes > trials) {
    throw std::invalid_argument("wilson_interval: successes must lie in [0, trials]");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("wilson_interval: confidence must lie in (0, 1)");
  }
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
  const auto n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = p + z2 / (2.0 * n);
  const double spread = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  const double denom = 1.0 + z2 / n;
  Interval out{(center - spread) / denom, (center + spread) / denom};
  // Exact at the boundaries; round-off would otherwise leave 1e-17 residue.
  if (successes == 0) {
    out.low = 0.0;
  }
  if (successes == trials) {
    out.high = 1.0;
  }
  out.low = std::clamp(out.low, 0.0, p);
  out.high = std::clamp(out.high, p, 1.0);
  return out;
}

Index LandmarkRule::resolve(Index n_x, Index n_y) const {
  if (sqrt_pooled) {
    return static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n_x + n_y)) - 1e-12));
  }
  return fixed;
}

const std::vector<double>& Scenario::parameters() const {
  return kind == Kind::correlated_gaussian ? rho2 : alpha_mix;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json rule_to_json(const LandmarkRule& r) {
  return r.sqrt_pooled ? json("sqrt") : json(r.fixed);
}

LandmarkRule rule_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "sqrt") {
      throw std::invalid_argument("landmarks: string entries must be \"sqrt\"");
    }
    return LandmarkRule{0, true};
  }
  return LandmarkRule{j.get<Index>(), false};
}

std::string_view source_name(LandmarkSource s) {
  return s == LandmarkSource::pooled ? "pooled" : "split";
}

}  // namespace

void to_json(json& j, const ExperimentSpec& spec) {
  json scenario;
  if (spec.scenario.kind == Scenario::Kind::correlated_gaussian) {
    scenario = {{"type", "correlated_gaussian"},
                {"d", spec.scenario.d},
                {"rho1", spec.scenario.rho1},
                {"rho2", spec.scenario.rho2}};
  } else {
    scenario = {{"type", "csv_mixture"},
                {"background", spec.scenario.background_path},
                {"signal", spec.scenario.signal_path},
                {"has_header", spec.scenario.has_header},
                {"alpha_mix", spec.scenario.alpha_mix}};
  }
  json methods = json::array();
  for (const Method m : spec.methods) {
    methods.push_back(std::string(to_string(m)));
  }
  json landmarks = json::array();
  for (const auto& r : spec.landmarks) {
    landmarks.push_back(rule_to_json(r));
  }
  j = json{{"scenario", scenario},
           {"methods", methods},
           {"landmarks", landmarks},
           {"sample_sizes", spec.sample_sizes},
           {"alpha", spec.alpha},
           {"permutations", spec.permutations},
           {"repetitions", spec.repetitions},
           {"seed", spec.seed},
           {"output", spec.output},
           {"landmark_source", std::string(source_name(spec.landmark_source))},
           {"akrls",
            {{"budget", spec.akrls.budget},
             {"fallback_threshold", spec.akrls.fallback_threshold},
             {"z", spec.akrls.z},
             {"delta", spec.akrls.delta}}},
           {"paired", spec.paired}};
  if (spec.lambda) {
    j["lambda"] = *spec.lambda;
  }
  if (spec.bandwidth) {
    j["bandwidth"] = *spec.bandwidth;
  }
}

void from_json(const json& j, ExperimentSpec& spec) {
  spec = ExperimentSpec{};
  const json& sc = j.at("scenario");
  const std::string type = sc.at("type").get<std::string>();
  if (type == "correlated_gaussian") {
    spec.scenario.kind = Scenario::Kind::correlated_gaussian;
    spec.scenario.d = sc.value("d", Index{3});
    spec.scenario.rho1 = sc.value("rho1", 0.5);
    spec.scenario.rho2 = sc.at("rho2").get<std::vector<double>>();
  } else if (type == "csv_mixture") {
    spec.scenario.kind = Scenario::Kind::csv_mixture;
    spec.scenario.background_path = sc.at("background").get<std::string>();
    spec.scenario.signal_path = sc.at("signal").get<std::string>();
    spec.scenario.has_header = sc.value("has_header", false);
    spec.scenario.alpha_mix = sc.at("alpha_mix").get<std::vector<double>>();
  } else {
    throw std::invalid_argument("scenario.type must be correlated_gaussian or csv_mixture");
  }
  spec.methods.clear();
  for (const auto& m : j.at("methods")) {
    spec.methods.push_back(parse_method(m.get<std::string>()));
  }
  spec.landmarks.clear();
  for (const auto& r : j.at("landmarks")) {
    spec.landmarks.push_back(rule_from_json(r));
  }
  spec.sample_sizes = j.at("sample_sizes").get<std::vector<Index>>();
  spec.alpha = j.value("alpha", 0.05);
  spec.permutations = j.value("permutations", Index{199});
  spec.repetitions = j.value("repetitions", Index{400});
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.output = j.value("output", std::string{});
  if (j.contains("lambda")) {
    spec.lambda = j.at("lambda").get<double>();
  }
  if (j.contains("bandwidth")) {
    spec.bandwidth = j.at("bandwidth").get<double>();
  }
  const std::string source = j.value("landmark_source", std::string("pooled"));
  if (source != "pooled" && source != "split") {
    throw std::invalid_argument("landmark_source must be pooled or split");
  }
  spec.landmark_source = source == "pooled" ? LandmarkSource::pooled : LandmarkSource::split;
  if (j.contains("akrls")) {
    const json& a = j.at("akrls");
    spec.akrls.budget = a.value("budget", spec.akrls.budget);
    spec.akrls.fallback_threshold = a.value("fallback_threshold", spec.akrls.fallback_threshold);
    spec.akrls.z = a.value("z", spec.akrls.z);
    spec.akrls.delta = a.value("delta", spec.akrls.delta);
  }
  spec.paired = j.value("paired", false);
}

void validate(const ExperimentSpec& spec) {
  if (spec.methods.empty() || spec.landmarks.empty() || spec.sample_sizes.empty() ||
      spec.scenario.parameters().empty()) {
    throw std::invalid_argument("experiment grids must be nonempty");
  }
  if (spec.repetitions < 1) {
    throw std::invalid_argument("repetitions must be at least 1");
  }
  if (spec.permutations < 1) {
    throw std::invalid_argument("permutations must be at least 1");
  }
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  for (const Index n : spec.sample_sizes) {
    if (n < 1) {
      throw std::invalid_argument("sample sizes must be positive");
    }
  }
  for (const auto& r : spec.landmarks) {
    if (!r.sqrt_pooled && r.fixed < 1) {
      throw std::invalid_argument("landmark counts must be positive or \"sqrt\"");
    }
  }
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct Pools {
  std::optional<Dataset> background;
  std::optional<Dataset> signal;
};

Pools load_pools(const ExperimentSpec& spec) {
  Pools pools;
  if (spec.scenario.kind == Scenario::Kind::csv_mixture) {
    pools.background = load_csv(spec.scenario.background_path, spec.scenario.has_header);
    pools.signal = load_csv(spec.scenario.signal_path, spec.scenario.has_header);
  }
  return pools;
}

std::pair<Dataset, Dataset> draw(const ExperimentSpec& spec, const Pools& pools, Regime regime,
                                 Index n, double param, std::uint64_t seed) {
  const Scenario& sc = spec.scenario;
  if (sc.kind == Scenario::Kind::correlated_gaussian) {
    const double rho_y = regime == Regime::null ? sc.rho1 : param;
    return {sample_correlated_gaussians(sc.d, sc.rho1, n, derive_seed(seed, Stream::sample_x)),
            sample_correlated_gaussians(sc.d, rho_y, n, derive_seed(seed, Stream::sample_y))};
  }
  const Dataset& bg = *pools.background;
  if (bg.size() <= n) {
    throw std::invalid_argument("background pool of " + std::to_string(bg.size()) +
                                " rows is too small for n = " + std::to_string(n));
  }
  Engine engine = make_engine(seed, Stream::sample_x);
  std::vector<Index> order(static_cast<std::size_t>(bg.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), engine);
  const std::span<const Index> all(order);
  Dataset x = bg.select(all.first(static_cast<std::size_t>(n)));
  Dataset rest = bg.select(all.subspan(static_cast<std::size_t>(n)));
  const double mix = regime == Regime::null ? 0.0 : param;
  Dataset y = sample_mixture(rest, *pools.signal, mix, n, derive_seed(seed, Stream::sample_y));
  return {std::move(x), std::move(y)};
}

}  // namespace

std::pair<Dataset, Dataset> draw_samples(const ExperimentSpec& spec, Regime regime, Index n,
                                         double param, std::uint64_t seed) {
  return draw(spec, load_pools(spec), regime, n, param, seed);
}

std::vector<RateEstimate> estimate_rate(const ExperimentSpec& spec, Regime regime) {
  validate(spec);
  const Pools pools = load_pools(spec);
  const auto& params = spec.scenario.parameters();

  std::vector<RateEstimate> out;
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    for (std::size_t li = 0; li < spec.landmarks.size(); ++li) {
      for (std::size_t ni = 0; ni < spec.sample_sizes.size(); ++ni) {
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
          const Method method = spec.methods[mi];
          const Index n = spec.sample_sizes[ni];
          const double param = params[pi];
          RateEstimate cell;
          cell.method = method;
          cell.n_x = n;
          cell.n_y = n;
          cell.param = param;
          cell.ell = method == Method::exact ? 2 * n : spec.landmarks[li].resolve(n, n);
          if (method == Method::rff && spec.landmarks[li].sqrt_pooled && cell.ell % 2 != 0) {
            ++cell.ell;  // cos/sin pairs
          }
          cell.trials = spec.repetitions;

          MapSpec map;
          map.method = method;
          map.ell = cell.ell;
          map.lambda = spec.lambda;
          map.source = spec.landmark_source;
          map.akrls = spec.akrls;

          const std::uint64_t data_key = (ni << 20) ^ pi;
          const std::uint64_t cell_key = (((mi << 16) ^ li) << 24) ^ data_key;
          const std::uint64_t cell_seed = derive_seed(spec.seed, cell_key);
          const std::uint64_t paired_seed = derive_seed(spec.seed, data_key | (1ULL << 62));

          Index successes = 0;
          double runtime = 0.0;
          std::string error;
          const Index reps = spec.repetitions;
#pragma omp parallel for schedule(dynamic) reduction(+ : successes, runtime)
          for (Index r = 0; r < reps; ++r) {
            const auto rep = static_cast<std::uint64_t>(r);
            const std::uint64_t rep_seed = derive_seed(cell_seed, rep);
            const std::uint64_t data_seed = spec.paired ? derive_seed(paired_seed, rep)
                                                        : derive_seed(rep_seed, Stream::repetition);
            try {
              const auto [x, y] = draw(spec, pools, regime, n, param, data_seed);
              TestConfig cfg;
              cfg.alpha = spec.alpha;
              cfg.permutations = spec.permutations;
              cfg.seed = rep_seed;
              cfg.bandwidth = spec.bandwidth;
              const auto t0 = std::chrono::steady_clock::now();
              const TestOutcome outcome = run_test(x, y, cfg, map);
              const auto t1 = std::chrono::steady_clock::now();
              successes += outcome.reject ? 1 : 0;
              runtime += std::chrono::duration<double>(t1 - t0).count();
            } catch (const std::exception& e) {
#pragma omp critical(nysmmd_rate_error)
              if (error.empty()) {
                error = e.what();
              }
            }
          }
          if (!error.empty()) {
            cell.error = error;
          } else {
            cell.successes = successes;
            cell.rate = static_cast<double>(successes) / static_cast<double>(reps);
            const Interval ci = wilson_interval(successes, reps);
            cell.wilson_low = ci.low;
            cell.wilson_high = ci.high;
            cell.mean_runtime_s = runtime / static_cast<double>(reps);
          }
          out.push_back(std::move(cell));
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("results: cannot parse '" + s + "'");
  }
  return v;
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<RateEstimate>& rows,
                       bool include_runtime) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    if (r.error) {
      out << "# error," << to_string(r.method) << ',' << r.ell << ',' << r.n_x << ',' << r.n_y
          << ',' << fmt(r.param) << ": " << *r.error << '\n';
      continue;
    }
    out << to_string(r.method) << ',' << r.ell << ',' << r.n_x << ',' << r.n_y << ','
        << fmt(r.param) << ',' << fmt(r.rate) << ',' << fmt(r.wilson_low) << ','
        << fmt(r.wilson_high) << ',' << (include_runtime ? fmt(r.mean_runtime_s) : "0") << ','
        << r.trials << '\n';
  }
}

std::vector<RateEstimate> read_results_csv(std::istream& in) {
  std::vector<RateEstimate> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') {
      continue;
    }
    if (!header_seen) {
      if (line != kResultsHeader) {
        throw std::invalid_argument("results: unexpected header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      f.push_back(cell);
    }
    if (f.size() != 10) {
      throw std::invalid_argument("results: expected 10 fields in '" + line + "'");
    }
    RateEstimate r;
    r.method = parse_method(f[0]);
    r.ell = std::stoll(f[1]);
    r.n_x = std::stoll(f[2]);
    r.n_y = std::stoll(f[3]);
    r.param = parse_double(f[4]);
    r.rate = parse_double(f[5]);
    r.wilson_low = parse_double(f[6]);
    r.wilson_high = parse_double(f[7]);
    r.mean_runtime_s = parse_double(f[8]);
    r.trials = std::stoll(f[9]);
    r.successes = static_cast<Index>(std::llround(r.rate * static_cast<double>(r.trials)));
    rows.push_back(r);
  }
  return rows;
}

json outcome_to_json(const TestOutcome& o, Method method) {
  json j = {{"method", std::string(to_string(method))},
            {"reject", o.reject},
            {"statistic", o.statistic},
            {"threshold", o.threshold},
            {"b_alpha", o.b_alpha},
            {"randomized", o.randomized},
            {"rejection_probability_used", nullptr},
            {"count_greater", o.count_greater},
            {"count_equal", o.count_equal},
            {"bandwidth", o.bandwidth},
            {"features", o.features}};
  if (o.rejection_probability_used) {
    j["rejection_probability_used"] = *o.rejection_probability_used;
  }
  if (!o.all_statistics.empty()) {
    j["all_statistics"] = o.all_statistics;
  }
  return j;
}

}  // namespace nysmmd
