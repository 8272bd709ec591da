#include "doctest.h"
#include "oracles.hpp"

#include "nysmmd/data_io.hpp"
#include "nysmmd/feature_map.hpp"
#include "nysmmd/kernel.hpp"
#include "nysmmd/statistics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace nysmmd;

namespace {

LandmarkSet all_points(const Dataset& w) {
  LandmarkSet s;
  s.indices.resize(static_cast<std::size_t>(w.size()));
  std::iota(s.indices.begin(), s.indices.end(), Index{0});
  s.points = w;
  return s;
}

Dataset shuffled(const Dataset& d, std::mt19937_64& rng) {
  std::vector<Index> order(static_cast<std::size_t>(d.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  return d.select(order);
}

// Splits the pooled rows by label and recomputes the statistic from scratch.
double relabeled_statistic(const PooledData& data, const std::vector<std::uint8_t>& labels,
                           const FeatureMap& map) {
  std::vector<Index> xs, ys;
  for (Index i = 0; i < data.size(); ++i) {
    (labels[static_cast<std::size_t>(i)] ? xs : ys).push_back(i);
  }
  return feature_mmd(data.pooled().select(xs), data.pooled().select(ys), map);
}

}  // namespace

TEST_CASE("exact_mmd") {
  std::mt19937_64 rng(31);
  const double h = 0.9;
  const GaussianKernel k(h);

  SUBCASE("same multiset") {
    const Dataset x = oracle::random_dataset(9, 2, rng);
    // The radicand cancels to round-off; the square root lifts 1e-16 to 1e-8.
    CHECK(exact_mmd(x, shuffled(x, rng), k) <= 1e-7);
    CHECK(exact_mmd(x, x, k) <= 1e-7);
  }
  SUBCASE("one point each") {
    const Dataset x = oracle::random_dataset(1, 3, rng);
    const Dataset y = oracle::random_dataset(1, 3, rng);
    const double kxy = oracle::gaussian(x, 0, y, 0, h);
    CHECK(exact_mmd(x, y, k) == doctest::Approx(std::sqrt(2.0 - 2.0 * kxy)).epsilon(1e-13));
  }
  SUBCASE("double-loop oracle") {
    for (int t = 0; t < 20; ++t) {
      const Dataset x = oracle::random_dataset(7, 3, rng);
      const Dataset y = oracle::random_dataset(5, 3, rng, 1.4);
      CHECK(std::abs(exact_mmd(x, y, k) - oracle::mmd(x, y, h)) <= 1e-12);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(exact_mmd(oracle::random_dataset(3, 2, rng), oracle::random_dataset(3, 3, rng), k),
                    std::invalid_argument);
  }
}

TEST_CASE("feature_mmd") {
  std::mt19937_64 rng(32);

  SUBCASE("same multiset") {
    const Dataset x = oracle::random_dataset(11, 3, rng);
    const NystromMap map = build_nystrom(all_points(oracle::random_dataset(5, 3, rng)), GaussianKernel(1.0));
    CHECK(feature_mmd(x, shuffled(x, rng), map) <= 1e-14);
  }
  SUBCASE("full-coverage landmarks give the exact statistic") {
    for (int t = 0; t < 10; ++t) {
      const Dataset x = oracle::random_dataset(40 + t, 3, rng);
      const Dataset y = oracle::random_dataset(35, 3, rng, 1.3);
      const PooledData pooled(x, y);
      const double h = median_heuristic(pooled.pooled(), 2000, t);
      const NystromMap map = build_nystrom(all_points(pooled.pooled()), GaussianKernel(h));
      CHECK(std::abs(feature_mmd(x, y, map) - exact_mmd(x, y, GaussianKernel(h))) <= 1e-8);
    }
  }
  SUBCASE("single landmark") {
    const Dataset x = oracle::random_dataset(6, 2, rng);
    const Dataset y = oracle::random_dataset(4, 2, rng);
    const Dataset z = oracle::random_dataset(1, 2, rng);
    const double h = 1.1;
    const NystromMap map = build_nystrom(all_points(z), GaussianKernel(h));
    double mx = 0.0, my = 0.0;
    for (Index i = 0; i < 6; ++i) mx += oracle::gaussian(z, 0, x, i, h) / 6.0;
    for (Index j = 0; j < 4; ++j) my += oracle::gaussian(z, 0, y, j, h) / 4.0;
    CHECK(feature_mmd(x, y, map) == doctest::Approx(std::abs(mx - my)).epsilon(1e-12));
  }
  SUBCASE("a projection never exceeds the exact statistic") {
    for (int t = 0; t < 20; ++t) {
      const Dataset x = oracle::random_dataset(30, 2, rng);
      const Dataset y = oracle::random_dataset(25, 2, rng, 1.2);
      const PooledData pooled(x, y);
      const GaussianKernel k(1.0);
      const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 8, t), k);
      CHECK(feature_mmd(x, y, map) <= exact_mmd(x, y, k) + 1e-8);
    }
  }
}

TEST_CASE("permutation labels") {
  const auto id = permutation_labels(3, 8, 1, 0);
  CHECK(std::vector<std::uint8_t>(id.begin(), id.end()) ==
        std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0, 0, 0});
  for (Index p = 1; p < 50; ++p) {
    const auto labels = permutation_labels(3, 8, 1, p);
    CHECK(std::count(labels.begin(), labels.end(), 1) == 3);
  }
  CHECK(permutation_labels(3, 8, 1, 4) == permutation_labels(3, 8, 1, 4));
  CHECK_THROWS(permutation_labels(0, 8, 1, 1));
  CHECK_THROWS(permutation_labels(8, 8, 1, 1));
}

TEST_CASE("permutation labels are uniform over subsets") {
  // n = 5, n_x = 2: ten subsets, each with probability 1/10.
  std::vector<Index> counts(32, 0);
  const int draws = 20000;
  for (int p = 1; p <= draws; ++p) {
    const auto labels = permutation_labels(2, 5, 77, p);
    int code = 0;
    for (int i = 0; i < 5; ++i) code |= labels[static_cast<std::size_t>(i)] << i;
    ++counts[static_cast<std::size_t>(code)];
  }
  std::vector<Index> observed;
  for (int code = 0; code < 32; ++code) {
    if (__builtin_popcount(code) == 2) observed.push_back(counts[static_cast<std::size_t>(code)]);
    else CHECK(counts[static_cast<std::size_t>(code)] == 0);
  }
  REQUIRE(observed.size() == 10);
  const double stat = oracle::chi_square_statistic(observed, draws / 10.0);
  CHECK(stat < boost::math::quantile(boost::math::chi_squared(9.0), 0.999));
}

TEST_CASE("permuted statistics") {
  std::mt19937_64 rng(33);
  const Dataset x = oracle::random_dataset(300, 3, rng);
  const Dataset y = oracle::random_dataset(280, 3, rng, 1.2);
  const PooledData pooled(x, y);
  const GaussianKernel k(median_heuristic(pooled.pooled(), 2000, 1));
  const NystromMap nys = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 24, 5), k);
  const RffMap rff = build_rff(3, 24, k, 5);
  const Index P = 30;

  for (const FeatureMap* map : {static_cast<const FeatureMap*>(&nys), static_cast<const FeatureMap*>(&rff)}) {
    const auto stats = permuted_statistics(pooled, *map, P, 99);
    REQUIRE(stats.size() == static_cast<std::size_t>(P + 1));
    CHECK(std::abs(stats[0] - feature_mmd(x, y, *map)) <= 1e-12);

    for (Index p = 1; p <= P; ++p) {
      const double expected = relabeled_statistic(pooled, permutation_labels(300, 580, 99, p), *map);
      CHECK(std::abs(stats[static_cast<std::size_t>(p)] - expected) <= 1e-12);
    }

    const auto reference = permuted_statistics_serial(pooled, *map, P, 99);
    for (Index p = 0; p <= P; ++p) {
      CHECK(std::abs(stats[static_cast<std::size_t>(p)] - reference[static_cast<std::size_t>(p)]) <= 1e-10);
    }
    CHECK(stats == permuted_statistics(pooled, *map, P, 99));
  }
}

TEST_CASE("permuted statistics do not depend on the thread count") {
  std::mt19937_64 rng(34);
  const PooledData pooled(oracle::random_dataset(700, 2, rng), oracle::random_dataset(650, 2, rng));
  const GaussianKernel k(1.0);
  const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 16, 1), k);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = permuted_statistics(pooled, map, 40, 3);
  omp_set_num_threads(4);
  const auto four = permuted_statistics(pooled, map, 40, 3);
  omp_set_num_threads(saved);
  CHECK(one == four);
}

TEST_CASE("permuted statistics with identical points are all zero") {
  const RowMatrix same = RowMatrix::Constant(20, 3, 0.25);
  const PooledData pooled(Dataset(same.topRows(12)), Dataset(same.bottomRows(8)));
  const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 4, 1), GaussianKernel(1.0));
  for (const double s : permuted_statistics(pooled, map, 25, 8)) {
    CHECK(s <= 1e-15);
  }
  CHECK_THROWS_AS(permuted_statistics(pooled, map, 0, 8), std::invalid_argument);
}

TEST_CASE("exact permuted statistics") {
  std::mt19937_64 rng(35);
  const Dataset x = oracle::random_dataset(20, 2, rng);
  const Dataset y = oracle::random_dataset(15, 2, rng, 1.5);
  const PooledData pooled(x, y);
  const GaussianKernel k(1.0);
  const auto stats = exact_permuted_statistics(pooled, k, 10, 4);
  CHECK(std::abs(stats[0] - exact_mmd(x, y, k)) <= 1e-12);
  for (Index p = 1; p <= 10; ++p) {
    const auto labels = permutation_labels(20, 35, 4, p);
    std::vector<Index> xs, ys;
    for (Index i = 0; i < 35; ++i) (labels[static_cast<std::size_t>(i)] ? xs : ys).push_back(i);
    const double expected = oracle::mmd(pooled.pooled().select(xs), pooled.pooled().select(ys), 1.0);
    CHECK(std::abs(stats[static_cast<std::size_t>(p)] - expected) <= 1e-10);
  }
}

TEST_CASE("U-statistic decomposition") {
  std::mt19937_64 rng(36);

  SUBCASE("one repeated point") {
    const RowMatrix same = RowMatrix::Constant(7, 2, -0.5);
    const PooledData pooled(Dataset(same.topRows(4)), Dataset(same.bottomRows(3)));
    const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 2, 1), GaussianKernel(1.0));
    std::vector<Index> sigma(7);
    std::iota(sigma.begin(), sigma.end(), Index{0});
    const auto parts = ustat_decomposition(pooled, sigma, map);
    CHECK(std::abs(parts.squared_statistic()) <= 1e-14);
  }

  SUBCASE("brute force on random instances") {
    for (int t = 0; t < 20; ++t) {
      const PooledData pooled(oracle::random_dataset(4, 2, rng), oracle::random_dataset(3, 2, rng, 1.5));
      const GaussianKernel k(1.0);
      const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 5, t), k);
      std::vector<Index> sigma(7);
      std::iota(sigma.begin(), sigma.end(), Index{0});
      std::shuffle(sigma.begin(), sigma.end(), rng);

      const auto parts = ustat_decomposition(pooled, sigma, map);
      const auto brute = oracle::ustat_brute_force(map.apply(pooled.pooled()), sigma, 4);
      CHECK(std::abs(parts.u - brute.u) <= 1e-12);
      CHECK(std::abs(parts.r - brute.r) <= 1e-12);
      CHECK(parts.weight == doctest::Approx(3.0 * 2.0 / 12.0));

      const std::span<const Index> s(sigma);
      const double psi = feature_mmd(pooled.pooled().select(s.first(4)), pooled.pooled().select(s.subspan(4)), map);
      CHECK(std::abs(psi * psi - parts.squared_statistic()) <= 1e-10);
      CHECK(std::abs(parts.r) <= (1.0 / 4 + 1.0 / 3) * 4.0);
    }
  }

  SUBCASE("too few points") {
    const PooledData pooled(oracle::random_dataset(1, 2, rng), oracle::random_dataset(3, 2, rng));
    const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 2, 1), GaussianKernel(1.0));
    std::vector<Index> sigma{0, 1, 2, 3};
    CHECK_THROWS_AS(ustat_decomposition(pooled, sigma, map), std::invalid_argument);
  }

  SUBCASE("sigma must be a permutation") {
    const PooledData pooled(oracle::random_dataset(2, 2, rng), oracle::random_dataset(2, 2, rng));
    const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 2, 1), GaussianKernel(1.0));
    std::vector<Index> sigma{0, 1, 1, 3};
    CHECK_THROWS_AS(ustat_decomposition(pooled, sigma, map), std::invalid_argument);
  }
}

TEST_CASE("more landmarks approximate the exact statistic better on average") {
  const Dataset x = sample_correlated_gaussians(3, 0.5, 256, 1);
  const Dataset y = sample_correlated_gaussians(3, 0.7, 256, 2);
  const PooledData pooled(x, y);
  const GaussianKernel k(median_heuristic(pooled.pooled(), 2000, 0));
  const double exact = exact_mmd(x, y, k);
  std::vector<double> mean_error;
  for (const Index ell : {Index{4}, Index{16}, Index{64}, pooled.size()}) {
    double err = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
      const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), ell, s), k);
      err += std::abs(exact - feature_mmd(x, y, map)) / seeds;
    }
    mean_error.push_back(err);
  }
  for (std::size_t i = 1; i < mean_error.size(); ++i) {
    CHECK(mean_error[i] <= mean_error[i - 1]);
  }
}

TEST_CASE("observed statistic has a uniform rank under the null") {
  const Index P = 19;
  const int reps = 2000;
  std::vector<Index> rank_counts(P + 1, 0);
  for (int r = 0; r < reps; ++r) {
    const Dataset x = sample_correlated_gaussians(2, 0.0, 10, 2 * r + 1);
    const Dataset y = sample_correlated_gaussians(2, 0.0, 10, 2 * r + 2);
    const PooledData pooled(x, y);
    const NystromMap map = build_nystrom(sample_landmarks_uniform(pooled.pooled(), 4, r), GaussianKernel(1.0));
    const auto stats = permuted_statistics(pooled, map, P, 1000 + r);
    const auto rank = std::count_if(stats.begin() + 1, stats.end(), [&](double s) { return s < stats[0]; });
    ++rank_counts[static_cast<std::size_t>(rank)];
  }
  const double stat = oracle::chi_square_statistic(rank_counts, static_cast<double>(reps) / (P + 1));
  CHECK(stat < boost::math::quantile(boost::math::chi_squared(static_cast<double>(P)), 0.999));
}
