#include "nysmmd/leverage.hpp"

#include "nysmmd/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nysmmd {

namespace {

void check_gram(const Matrix& gram, double lambda, const char* who) {
  if (gram.rows() != gram.cols() || gram.rows() == 0) {
    throw std::invalid_argument(std::string(who) + ": Gram matrix must be square and non-empty");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument(std::string(who) + ": lambda must be positive");
  }
  if (!gram.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite Gram entries");
  }
  const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(who) + ": Gram matrix is not symmetric");
  }
}

// Ridge leverage scores of a symmetric PSD matrix at an absolute ridge:
// diag(K (K + ridge I)^{-1}) = sum_k V_ik^2 s_k / (s_k + ridge).
Vector ridge_scores(const Matrix& gram, double ridge) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  const Vector shrink = eig.eigenvalues().unaryExpr(
      [ridge](double s) { return std::max(s, 0.0) / (std::max(s, 0.0) + ridge); });
  return eig.eigenvectors().cwiseAbs2() * shrink;
}

class RecursiveScorer {
 public:
  RecursiveScorer(const Dataset& w, const GaussianKernel& k, double ridge, std::uint64_t seed,
                  const AkrlsOptions& opts)
      : w_(w), k_(k), ridge_(ridge), seed_(derive_seed(seed, Stream::leverage)), opts_(opts) {}

  // Approximate scores of the points `ids` with respect to their own Gram
  // matrix at the fixed ridge.
  Vector scores(const std::vector<Index>& ids, int depth) {
    const auto m = ids.size();
    if (m <= opts_.budget) {
      return ridge_scores(gram(k_, w_.select(ids)), ridge_);
    }

    // Uniform half, recursively scored.
    std::vector<Index> order(m);
    std::iota(order.begin(), order.end(), Index{0});
    Engine engine(derive_seed(seed_, static_cast<std::uint64_t>(depth)));
    std::shuffle(order.begin(), order.end(), engine);
    const std::size_t half_size = (m + 1) / 2;
    std::vector<Index> half(half_size);
    for (std::size_t t = 0; t < half_size; ++t) {
      half[t] = ids[static_cast<std::size_t>(order[t])];
    }
    const Vector half_scores = scores(half, depth + 1);

    // Dictionary: Bernoulli sampling from the half, probabilities scaled to
    // the budget. Weights make it an unbiased sketch of the full set.
    const double total = half_scores.sum();
    const double oversample = static_cast<double>(opts_.budget) / std::max(total, 1e-300);
    const double expansion = static_cast<double>(m) / static_cast<double>(half_size);
    const std::uint64_t draw_seed = derive_seed(seed_, 0x100 + static_cast<std::uint64_t>(depth));
    std::vector<Index> dict;
    std::vector<double> weights;
    for (std::size_t t = 0; t < half_size; ++t) {
      const double p = std::min(1.0, oversample * half_scores[static_cast<Index>(t)]);
      if (p > 0.0 && counter_uniform(draw_seed, t) < p) {
        dict.push_back(half[t]);
        weights.push_back(std::sqrt(expansion / p));
      }
    }
    if (dict.empty()) {
      Index best = 0;
      half_scores.maxCoeff(&best);
      dict.push_back(half[static_cast<std::size_t>(best)]);
      weights.push_back(std::sqrt(expansion));
    }

    // l_i = (K_ii - c_i' (S'KS + ridge I)^{-1} c_i) / ridge with c_i = S'K e_i.
    const Eigen::Map<const Vector> wvec(weights.data(), static_cast<Index>(weights.size()));
    const Dataset dict_points = w_.select(dict);
    const Matrix sks = wvec.asDiagonal() * gram(k_, dict_points) * wvec.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sks);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("eigendecomposition failed");
    }
    const Vector inv_sqrt = eig.eigenvalues().unaryExpr(
        [this](double s) { return 1.0 / std::sqrt(std::max(s, 0.0) + ridge_); });
    const Matrix cross = wvec.asDiagonal() * gram(k_, dict_points, w_.select(ids));
    const Matrix whitened = inv_sqrt.asDiagonal() * (eig.eigenvectors().transpose() * cross);
    const Vector explained = whitened.colwise().squaredNorm().transpose();
    Vector out(static_cast<Index>(m));
    for (Index i = 0; i < out.size(); ++i) {
      out[i] = std::clamp((1.0 - explained[i]) / ridge_, 0.0, 1.0);
    }
    return out;
  }

 private:
  const Dataset& w_;
  const GaussianKernel& k_;
  double ridge_;
  std::uint64_t seed_;
  const AkrlsOptions& opts_;
};

}  // namespace

double default_lambda(Index n, double delta) {
  if (n < 1 || !(delta > 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("default_lambda: need n >= 1 and delta in (0, 1]");
  }
  return 16.0 * std::log(4.0 / delta) / static_cast<double>(n);
}

LeverageScores exact_krls(const Matrix& gram, double lambda) {
  check_gram(gram, lambda, "exact_krls");
  const double ridge = lambda * static_cast<double>(gram.rows());
  LeverageScores out;
  out.scores = ridge_scores(gram, ridge);
  out.lambda = lambda;
  out.kind = ScoreKind::exact;
  out.lambda0 = lambda;
  return out;
}

double effective_dimension(const Matrix& gram, double lambda) {
  check_gram(gram, lambda, "effective_dimension");
  const double ridge = lambda * static_cast<double>(gram.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  double trace = 0.0;
  for (const double s : eig.eigenvalues()) {
    const double pos = std::max(s, 0.0);
    trace += pos / (pos + ridge);
  }
  return trace;
}

LeverageScores approx_krls(const Dataset& w, const GaussianKernel& k, double lambda,
                           std::uint64_t seed, const AkrlsOptions& options) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("approx_krls: lambda must be positive");
  }
  if (options.budget < kMinAkrlsBudget) {
    throw std::invalid_argument("approx_krls: budget " + std::to_string(options.budget) +
                                " is below the minimal recursion base size " +
                                std::to_string(kMinAkrlsBudget));
  }
  const auto n = static_cast<std::size_t>(w.size());
  if (n <= options.fallback_threshold) {
    return exact_krls(gram(k, w), lambda);
  }

  std::vector<Index> all(n);
  std::iota(all.begin(), all.end(), Index{0});
  RecursiveScorer scorer(w, k, lambda * static_cast<double>(n), seed, options);
  LeverageScores out;
  out.scores = scorer.scores(all, 0);
  out.lambda = lambda;
  out.kind = ScoreKind::approximate;
  out.z = options.z;
  out.lambda0 = lambda;
  out.delta = options.delta;
  return out;
}

std::string_view to_string(Sampler s) {
  switch (s) {
    case Sampler::uniform:
      return "uniform";
    case Sampler::akrls:
      return "akrls";
    case Sampler::exact_krls:
      return "exact_krls";
  }
  return "unknown";
}

LandmarkSet sample_landmarks(const Dataset& w, const LeverageScores& scores, Index ell,
                             std::uint64_t seed) {
  if (ell < 1) {
    throw std::invalid_argument("sample_landmarks: ell must be at least 1");
  }
  if (scores.scores.size() != w.size()) {
    throw std::invalid_argument("sample_landmarks: one score per point required");
  }
  if ((scores.scores.array() < 0.0).any() || !scores.scores.allFinite()) {
    throw std::invalid_argument("sample_landmarks: scores must be finite and nonnegative");
  }
  std::vector<double> cumulative(static_cast<std::size_t>(w.size()));
  std::partial_sum(scores.scores.begin(), scores.scores.end(), cumulative.begin());
  const double total = cumulative.back();
  if (!(total > 0.0)) {
    throw std::invalid_argument("sample_landmarks: all scores are zero");
  }

  const std::uint64_t stream = derive_seed(seed, Stream::landmarks);
  LandmarkSet out;
  out.sampler = scores.kind == ScoreKind::exact ? Sampler::exact_krls : Sampler::akrls;
  out.indices.resize(static_cast<std::size_t>(ell));
  for (Index t = 0; t < ell; ++t) {
    const double target = counter_uniform(stream, static_cast<std::uint64_t>(t)) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    // Zero-weight points occupy empty intervals and are never selected.
    if (it == cumulative.end()) {
      it = std::lower_bound(cumulative.begin(), cumulative.end(), total);
    }
    out.indices[static_cast<std::size_t>(t)] = static_cast<Index>(it - cumulative.begin());
  }
  out.points = w.select(out.indices);
  return out;
}

LandmarkSet sample_landmarks_uniform(const Dataset& w, Index ell, std::uint64_t seed) {
  if (ell < 1) {
    throw std::invalid_argument("sample_landmarks: ell must be at least 1");
  }
  const std::uint64_t stream = derive_seed(seed, Stream::landmarks);
  const auto n = static_cast<double>(w.size());
  LandmarkSet out;
  out.sampler = Sampler::uniform;
  out.indices.resize(static_cast<std::size_t>(ell));
  for (Index t = 0; t < ell; ++t) {
    const auto i = static_cast<Index>(counter_uniform(stream, static_cast<std::uint64_t>(t)) * n);
    out.indices[static_cast<std::size_t>(t)] = std::min(i, w.size() - 1);
  }
  out.points = w.select(out.indices);
  return out;
}

}  // namespace nysmmd
