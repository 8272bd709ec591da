#pragma once

#include "nysmmd/permutation_test.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nysmmd {

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for k successes in n trials.
Interval wilson_interval(Index successes, Index trials, double confidence = 0.95);

/// Feature count rule: a fixed ell, or ceil(sqrt(n_x + n_y)) (rounded up to
/// even for random Fourier features).
struct LandmarkRule {
  Index fixed = 0;
  bool sqrt_pooled = false;

  Index resolve(Index n_x, Index n_y) const;
  friend bool operator==(const LandmarkRule&, const LandmarkRule&) = default;
};

struct Scenario {
  enum class Kind { correlated_gaussian, csv_mixture };
  Kind kind = Kind::correlated_gaussian;
  // correlated_gaussian
  Index d = 3;
  double rho1 = 0.5;
  std::vector<double> rho2{0.66};
  // csv_mixture
  std::string background_path;
  std::string signal_path;
  bool has_header = false;
  std::vector<double> alpha_mix{0.2};

  /// Alternative-hypothesis parameter grid (rho2 or alpha_mix).
  const std::vector<double>& parameters() const;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct ExperimentSpec {
  Scenario scenario;
  std::vector<Method> methods{Method::nystrom_uniform};
  std::vector<LandmarkRule> landmarks{LandmarkRule{0, true}};
  std::vector<Index> sample_sizes{500};
  double alpha = 0.05;
  Index permutations = 199;
  Index repetitions = 400;
  std::uint64_t seed = 0;
  std::string output;
  // Optional knobs.
  std::optional<double> lambda;
  std::optional<double> bandwidth;
  LandmarkSource landmark_source = LandmarkSource::pooled;
  AkrlsOptions akrls;
  /// Same data draws for every method within a repetition.
  bool paired = false;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

void to_json(nlohmann::json& j, const ExperimentSpec& spec);
void from_json(const nlohmann::json& j, ExperimentSpec& spec);
/// Throws std::invalid_argument on an empty grid or a non-positive count.
void validate(const ExperimentSpec& spec);

enum class Regime { null, alternative };

struct RateEstimate {
  Method method = Method::nystrom_uniform;
  Index ell = 0;
  Index n_x = 0;
  Index n_y = 0;
  double param = 0.0;
  Index successes = 0;
  Index trials = 0;
  double rate = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 1.0;
  double mean_runtime_s = 0.0;
  /// Set when the cell failed; the other fields are then meaningless.
  std::optional<std::string> error;
};

/// One RateEstimate per (method, landmarks, sample size, parameter) cell.
/// Each repetition draws fresh data and a fresh feature map from a seed
/// derived from (master seed, cell, repetition); the result does not depend
/// on scheduling. Under the null both samples come from the first
/// distribution and `param` still labels the cell.
std::vector<RateEstimate> estimate_rate(const ExperimentSpec& spec, Regime regime);

/// Draws one (x, y) pair for a cell. Exposed for tests.
std::pair<Dataset, Dataset> draw_samples(const ExperimentSpec& spec, Regime regime, Index n,
                                         double param, std::uint64_t seed);

inline constexpr const char* kResultsHeader =
    "method,ell,n_x,n_y,param,rate,wilson_low,wilson_high,mean_runtime_s,reps";

/// CSV with kResultsHeader. Failed cells are written as '#' comment lines.
void write_results_csv(std::ostream& out, const std::vector<RateEstimate>& rows,
                       bool include_runtime = true);
std::vector<RateEstimate> read_results_csv(std::istream& in);

nlohmann::json outcome_to_json(const TestOutcome& outcome, Method method);

}  // namespace nysmmd
