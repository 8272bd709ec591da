#pragma once

#include "nysmmd/dataset.hpp"

#include <cstddef>
#include <cstdint>

namespace nysmmd {

/// k(x, y) = exp(-|x - y|^2 / (2 h^2)).
class GaussianKernel {
 public:
  explicit GaussianKernel(double bandwidth);

  double bandwidth() const noexcept { return bandwidth_; }
  /// Coefficient of the squared distance in the exponent, 1 / (2 h^2).
  double gamma() const noexcept { return gamma_; }

  double from_squared_distance(double sq) const noexcept;

 private:
  double bandwidth_;
  double gamma_;
};

double kernel_eval(const GaussianKernel& k, Eigen::Ref<const Vector> x,
                   Eigen::Ref<const Vector> y);

// Gram matrices. The parallel versions use the |x|^2 + |y|^2 - 2 x.y expansion
// (clamped at zero) so the work is dominated by one matrix product; the
// serial versions evaluate each entry directly and are kept as references.

Matrix gram(const GaussianKernel& k, const Dataset& a, const Dataset& b);
/// Symmetric Gram of one dataset. Each off-diagonal entry is computed once
/// and mirrored; the diagonal is exactly 1.
Matrix gram(const GaussianKernel& k, const Dataset& a);

Matrix gram_rows(const GaussianKernel& k, Eigen::Ref<const RowMatrix> a,
                 Eigen::Ref<const RowMatrix> b);

Matrix gram_serial(const GaussianKernel& k, const Dataset& a, const Dataset& b);

inline constexpr std::size_t kDefaultMedianSubset = 2000;

/// Median pairwise Euclidean distance of min(n, subset_size) points drawn
/// without replacement. Even pair counts take the midpoint of the two
/// central order statistics. Throws DegenerateDataError when the median is 0.
double median_heuristic(const Dataset& w, std::size_t subset_size, std::uint64_t seed);

}  // namespace nysmmd
