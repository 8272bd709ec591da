#include "doctest.h"
#include "oracles.hpp"

#include "nysmmd/data_io.hpp"
#include "nysmmd/kernel.hpp"
#include "nysmmd/leverage.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numeric>
#include <random>

using namespace nysmmd;

TEST_CASE("exact_krls closed forms") {
  SUBCASE("identity Gram") {
    const Index n = 7;
    const double lambda = 0.3;
    const auto s = exact_krls(Matrix::Identity(n, n), lambda);
    for (Index i = 0; i < n; ++i) {
      CHECK(s.scores[i] == doctest::Approx(1.0 / (1.0 + lambda * n)).epsilon(1e-14));
    }
    CHECK(s.kind == ScoreKind::exact);
    CHECK(s.lambda == lambda);
  }
  SUBCASE("huge ridge") {
    std::mt19937_64 rng(1);
    const Dataset w = oracle::random_dataset(10, 2, rng);
    const Matrix k = gram(GaussianKernel(1.0), w);
    const auto s = exact_krls(k, 1e12 / 10.0);
    CHECK(s.scores.maxCoeff() <= 1e-11);
    CHECK(s.scores.minCoeff() >= 0.0);
  }
}

TEST_CASE("exact_krls matches the dense-solve oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix k = oracle::random_psd(6, rng);
    const auto s = exact_krls(k, 0.1);
    const Vector expected = oracle::krls_by_solve(k, 0.1);
    for (Index i = 0; i < 6; ++i) {
      CHECK(std::abs(s.scores[i] - expected[i]) <= 1e-10);
    }
    CHECK((s.scores.array() >= 0.0).all());
    CHECK((s.scores.array() < 1.0).all());
  }
}

TEST_CASE("exact_krls input validation") {
  Matrix k = Matrix::Identity(3, 3);
  k(0, 1) = 0.5;
  CHECK_THROWS_AS(exact_krls(k, 0.1), std::invalid_argument);
  Matrix bad = Matrix::Identity(3, 3);
  bad(2, 2) = std::nan("");
  CHECK_THROWS_AS(exact_krls(bad, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(exact_krls(Matrix::Identity(3, 3), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(effective_dimension(k, 0.1), std::invalid_argument);
}

TEST_CASE("effective dimension") {
  SUBCASE("identity") {
    CHECK(effective_dimension(Matrix::Identity(9, 9), 0.2) ==
          doctest::Approx(9.0 / (1.0 + 0.2 * 9)).epsilon(1e-14));
  }
  SUBCASE("vanishing ridge approaches the rank") {
    std::mt19937_64 rng(8);
    const Matrix k = oracle::random_psd(8, rng);
    CHECK(effective_dimension(k, 1e-14) == doctest::Approx(8.0).epsilon(1e-6));
  }
  SUBCASE("equals the sum of the scores") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix k = oracle::random_psd(8, rng);
      CHECK(std::abs(effective_dimension(k, 0.05) - exact_krls(k, 0.05).scores.sum()) <= 1e-10);
    }
  }
}

TEST_CASE("scores and effective dimension shrink as lambda grows") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset w = oracle::random_dataset(30, 3, rng);
    const Matrix k = gram(GaussianKernel(1.0), w);
    Vector previous = exact_krls(k, 1e-4).scores;
    double previous_dim = effective_dimension(k, 1e-4);
    for (const double lambda : {1e-3, 1e-2, 0.1, 1.0}) {
      const Vector current = exact_krls(k, lambda).scores;
      CHECK(((current - previous).array() <= 1e-10).all());
      const double dim = effective_dimension(k, lambda);
      CHECK(dim < previous_dim);
      previous = current;
      previous_dim = dim;
    }
  }
}

TEST_CASE("approx_krls") {
  SUBCASE("small inputs fall back to the exact scores bit for bit") {
    std::mt19937_64 rng(12);
    const Dataset w = oracle::random_dataset(100, 3, rng);
    const GaussianKernel k(1.1);
    AkrlsOptions opts;
    opts.fallback_threshold = 100;
    const auto approx = approx_krls(w, k, 0.01, 5, opts);
    const auto exact = exact_krls(gram(k, w), 0.01);
    CHECK(approx.scores == exact.scores);
  }

  SUBCASE("recursive path stays within factor 4 of the exact scores") {
    const Index n = 512;
    const double lambda = 1.0 / n;
    AkrlsOptions opts;
    opts.fallback_threshold = 64;
    opts.budget = 128;
    int within = 0;
    const int runs = 10;
    for (int s = 0; s < runs; ++s) {
      const Dataset w = sample_correlated_gaussians(3, 0.5, n, 700 + s);
      const GaussianKernel k(median_heuristic(w, 2000, s));
      const auto approx = approx_krls(w, k, lambda, s, opts);
      CHECK(approx.kind == ScoreKind::approximate);
      CHECK(approx.z == 4.0);
      const Vector ratio = approx.scores.cwiseQuotient(exact_krls(gram(k, w), lambda).scores);
      within += (ratio.minCoeff() >= 0.25 && ratio.maxCoeff() <= 4.0) ? 1 : 0;
    }
    CHECK(within >= 9);
  }

  SUBCASE("deterministic given seed") {
    const Dataset w = sample_correlated_gaussians(3, 0.2, 400, 3);
    AkrlsOptions opts;
    opts.fallback_threshold = 32;
    opts.budget = 64;
    const GaussianKernel k(1.0);
    CHECK(approx_krls(w, k, 0.01, 9, opts).scores == approx_krls(w, k, 0.01, 9, opts).scores);
  }

  SUBCASE("budget below the recursion base") {
    const Dataset w = sample_correlated_gaussians(3, 0.2, 50, 3);
    AkrlsOptions opts;
    opts.budget = kMinAkrlsBudget - 1;
    CHECK_THROWS_AS(approx_krls(w, GaussianKernel(1.0), 0.01, 1, opts), std::invalid_argument);
  }
}

TEST_CASE("default lambda") {
  CHECK(default_lambda(100) == doctest::Approx(16.0 * std::log(80.0) / 100.0));
  CHECK_THROWS(default_lambda(0));
}

TEST_CASE("sample_landmarks degenerate distributions") {
  std::mt19937_64 rng(13);
  SUBCASE("single point") {
    const Dataset w = oracle::random_dataset(1, 2, rng);
    LeverageScores s{Vector::Ones(1), 0.1};
    const auto lm = sample_landmarks(w, s, 25, 3);
    CHECK(std::all_of(lm.indices.begin(), lm.indices.end(), [](Index i) { return i == 0; }));
    const auto uni = sample_landmarks_uniform(w, 25, 3);
    CHECK(std::all_of(uni.indices.begin(), uni.indices.end(), [](Index i) { return i == 0; }));
  }
  SUBCASE("one-hot scores") {
    const Dataset w = oracle::random_dataset(8, 2, rng);
    LeverageScores s{Vector::Zero(8), 0.1};
    s.scores[3] = 0.2;
    const auto lm = sample_landmarks(w, s, 100, 4);
    CHECK(std::all_of(lm.indices.begin(), lm.indices.end(), [](Index i) { return i == 3; }));
    CHECK(lm.points.row(0) == w.row(3));
  }
  SUBCASE("all-zero scores") {
    const Dataset w = oracle::random_dataset(4, 2, rng);
    LeverageScores s{Vector::Zero(4), 0.1};
    CHECK_THROWS_AS(sample_landmarks(w, s, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_landmarks_uniform(w, 0, 1), std::invalid_argument);
  }
  SUBCASE("rescaling scores leaves the draws unchanged") {
    const Dataset w = oracle::random_dataset(20, 2, rng);
    LeverageScores s{Vector::LinSpaced(20, 0.01, 0.9), 0.1};
    LeverageScores scaled = s;
    scaled.scores *= 8.0;
    CHECK(sample_landmarks(w, s, 200, 6).indices == sample_landmarks(w, scaled, 200, 6).indices);
  }
}

TEST_CASE("uniform landmark frequencies concentrate") {
  std::mt19937_64 rng(14);
  const Dataset w = oracle::random_dataset(10, 1, rng);
  const Index ell = 100000;
  const auto lm = sample_landmarks_uniform(w, ell, 77);
  std::vector<Index> counts(10, 0);
  for (const Index i : lm.indices) ++counts[static_cast<std::size_t>(i)];
  const double sigma = std::sqrt(ell * 0.1 * 0.9);
  for (const Index c : counts) {
    CHECK(std::abs(static_cast<double>(c) - 0.1 * ell) <= 3.0 * sigma);
  }
}

TEST_CASE("landmark sampling commutes with relabeling in distribution") {
  // Count which original point gets drawn when sampling from W and from a
  // relabeled copy of W; a homogeneity chi-square must not reject.
  std::mt19937_64 rng(15);
  const Index n = 5;
  const Dataset w = oracle::random_dataset(n, 2, rng);
  const std::vector<Index> perm{3, 0, 4, 1, 2};
  const Dataset permuted = w.select(perm);
  const GaussianKernel k(0.8);
  const auto scores_w = exact_krls(gram(k, w), 0.05);
  const auto scores_p = exact_krls(gram(k, permuted), 0.05);

  const int seeds = 4000;
  std::vector<Index> direct(n, 0), relabeled(n, 0);
  for (int s = 0; s < seeds; ++s) {
    ++direct[static_cast<std::size_t>(sample_landmarks(w, scores_w, 1, s).indices[0])];
    const Index j = sample_landmarks(permuted, scores_p, 1, 100000 + s).indices[0];
    ++relabeled[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
  }
  double stat = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double total = static_cast<double>(direct[i] + relabeled[i]);
    if (total == 0.0) continue;
    const double e = total / 2.0;
    stat += (direct[i] - e) * (direct[i] - e) / e + (relabeled[i] - e) * (relabeled[i] - e) / e;
  }
  const boost::math::chi_squared dist(static_cast<double>(n - 1));
  CHECK(stat < boost::math::quantile(dist, 0.999));
}
