#pragma once

#include "nysmmd/dataset.hpp"
#include "nysmmd/feature_map.hpp"
#include "nysmmd/kernel.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace nysmmd {

/// Plug-in MMD between the empirical measures of x and y. Quadratic time.
double exact_mmd(const Dataset& x, const Dataset& y, const GaussianKernel& k);

/// |mean phi(x_i) - mean phi(y_j)| in feature space, one pass over the data.
double feature_mmd(const Dataset& x, const Dataset& y, const FeatureMap& map);

/// Group labels induced by permutation p of the pooled data: entry i is 1
/// when pooled row i is assigned to the first sample. p = 0 is the identity
/// split. For p >= 1 the labels are a uniformly random n_x-subset drawn by
/// sequential selection sampling, distributed exactly like the first n_x
/// positions of a uniform shuffle.
std::vector<std::uint8_t> permutation_labels(Index n_x, Index n, std::uint64_t seed, Index p);

/// Statistics for the identity split (index 0) and P random relabelings.
/// Features of each pooled point are computed once, in fixed-size blocks;
/// working memory is O((P + 1) ell) and does not grow with n. Permutations
/// are processed in parallel with one accumulator each, so the output does
/// not depend on the thread count.
std::vector<double> permuted_statistics(const PooledData& data, const FeatureMap& map,
                                        Index permutations, std::uint64_t seed);

/// Reference for permuted_statistics: materializes the n x ell feature matrix
/// and every weight vector, then sums in reverse point order.
std::vector<double> permuted_statistics_serial(const PooledData& data, const FeatureMap& map,
                                               Index permutations, std::uint64_t seed);

/// Same relabelings evaluated with the exact kernel through w' K w on the
/// pooled Gram matrix.
std::vector<double> exact_permuted_statistics(const PooledData& data, const GaussianKernel& k,
                                              Index permutations, std::uint64_t seed);

struct UstatParts {
  double u = 0.0;
  double r = 0.0;
  /// (n_x - 1)(n_y - 1) / (n_x n_y), the weight of u in the squared statistic.
  double weight = 0.0;

  double squared_statistic() const noexcept { return weight * u + r; }
};

/// Splits the squared statistic of the relabeled data (first sample =
/// pooled rows sigma[0..n_x), second = the rest) into the degenerate
/// U-statistic over distinct index pairs and the remainder collecting
/// coincident pairs. Requires n_x, n_y >= 2.
UstatParts ustat_decomposition(const PooledData& data, std::span<const Index> sigma,
                               const FeatureMap& map);

}  // namespace nysmmd
