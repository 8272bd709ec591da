#pragma once

#include "nysmmd/dataset.hpp"
#include "nysmmd/kernel.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace nysmmd {

enum class ScoreKind { exact, approximate };

/// Kernel ridge leverage scores diag(K (K + lambda n I)^{-1}) or a
/// multiplicative approximation of them.
struct LeverageScores {
  Vector scores;
  double lambda = 0.0;
  ScoreKind kind = ScoreKind::exact;
  // Nominal (z, lambda0, delta) guarantee; only meaningful for approximate scores.
  double z = 1.0;
  double lambda0 = 0.0;
  double delta = 0.0;
};

/// Regularization 16 log(4 / delta) / n used when the caller gives none.
double default_lambda(Index n, double delta = 0.05);

LeverageScores exact_krls(const Matrix& gram, double lambda);

/// Tr(K (K + lambda n I)^{-1}).
double effective_dimension(const Matrix& gram, double lambda);

struct AkrlsOptions {
  /// Expected number of dictionary columns kept per recursion level.
  std::size_t budget = 256;
  /// Datasets of at most this size get exact scores.
  std::size_t fallback_threshold = 256;
  double z = 4.0;
  double delta = 0.05;
  friend bool operator==(const AkrlsOptions&, const AkrlsOptions&) = default;
};

inline constexpr std::size_t kMinAkrlsBudget = 16;

/// Recursive half-sampling approximation of the ridge leverage scores of
/// gram(k, w) at ridge lambda * n. Deterministic given seed.
LeverageScores approx_krls(const Dataset& w, const GaussianKernel& k, double lambda,
                           std::uint64_t seed, const AkrlsOptions& options = {});

enum class Sampler { uniform, akrls, exact_krls };

std::string_view to_string(Sampler s);

struct LandmarkSet {
  std::vector<Index> indices;
  Dataset points;
  Sampler sampler = Sampler::uniform;

  Index size() const noexcept { return static_cast<Index>(indices.size()); }
};

/// ell i.i.d. draws with replacement, P(i) = scores[i] / sum(scores).
/// Draw t uses the t-th value of a counter stream, so the result does not
/// depend on how draws are scheduled.
LandmarkSet sample_landmarks(const Dataset& w, const LeverageScores& scores, Index ell,
                             std::uint64_t seed);
LandmarkSet sample_landmarks_uniform(const Dataset& w, Index ell, std::uint64_t seed);

}  // namespace nysmmd
