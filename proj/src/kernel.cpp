#include "nysmmd/kernel.hpp"

#include "nysmmd/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace nysmmd {

GaussianKernel::GaussianKernel(double bandwidth)
    : bandwidth_(bandwidth), gamma_(1.0 / (2.0 * bandwidth * bandwidth)) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth) || !std::isfinite(gamma_)) {
    throw std::invalid_argument("bandwidth must be positive and finite, got " +
                                std::to_string(bandwidth));
  }
}

double GaussianKernel::from_squared_distance(double sq) const noexcept {
  return std::exp(-gamma_ * sq);
}

double kernel_eval(const GaussianKernel& k, Eigen::Ref<const Vector> x,
                   Eigen::Ref<const Vector> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw std::invalid_argument("kernel_eval: non-finite input");
  }
  return k.from_squared_distance((x - y).squaredNorm());
}

Matrix gram_rows(const GaussianKernel& k, Eigen::Ref<const RowMatrix> a,
                 Eigen::Ref<const RowMatrix> b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("gram: dimension mismatch");
  }
  const Vector a_sq = a.rowwise().squaredNorm();
  const Vector b_sq = b.rowwise().squaredNorm();
  Matrix out = a * b.transpose();
  const Index cols = out.cols();
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < out.rows(); ++i) {
      const double sq = std::max(0.0, a_sq[i] + b_sq[j] - 2.0 * out(i, j));
      out(i, j) = k.from_squared_distance(sq);
    }
  }
  return out;
}

Matrix gram(const GaussianKernel& k, const Dataset& a, const Dataset& b) {
  require_same_dim(a, b, "gram");
  return gram_rows(k, a.points(), b.points());
}

Matrix gram(const GaussianKernel& k, const Dataset& a) {
  const RowMatrix& p = a.points();
  const Index n = p.rows();
  const Vector sq = p.rowwise().squaredNorm();
  Matrix out(n, n);
  out.triangularView<Eigen::Lower>() = p * p.transpose();
#pragma omp parallel for schedule(dynamic, 16)
  for (Index j = 0; j < n; ++j) {
    out(j, j) = 1.0;
    for (Index i = j + 1; i < n; ++i) {
      const double d2 = std::max(0.0, sq[i] + sq[j] - 2.0 * out(i, j));
      const double v = k.from_squared_distance(d2);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Matrix gram_serial(const GaussianKernel& k, const Dataset& a, const Dataset& b) {
  require_same_dim(a, b, "gram_serial");
  Matrix out(a.size(), b.size());
  for (Index i = 0; i < a.size(); ++i) {
    for (Index j = 0; j < b.size(); ++j) {
      out(i, j) = k.from_squared_distance((a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return out;
}

double median_heuristic(const Dataset& w, std::size_t subset_size, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(w.size());
  if (n < 2) {
    throw DegenerateDataError("median heuristic needs at least two points");
  }
  const std::size_t m = std::min(n, std::max<std::size_t>(subset_size, 2));

  std::vector<Index> chosen(n);
  std::iota(chosen.begin(), chosen.end(), Index{0});
  if (m < n) {
    // Partial Fisher-Yates: the first m slots form a uniform subset.
    Engine engine(derive_seed(seed, Stream::bandwidth));
    for (std::size_t t = 0; t < m; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, n - 1);
      std::swap(chosen[t], chosen[pick(engine)]);
    }
    chosen.resize(m);
  }

  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      dist.push_back((w.row(chosen[a]) - w.row(chosen[b])).norm());
    }
  }

  const std::size_t half = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(half), dist.end());
  double median = dist[half];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(half));
    median = 0.5 * (lower + median);
  }
  if (!(median > 0.0)) {
    const bool all_zero = std::all_of(dist.begin(), dist.end(), [](double v) { return v == 0.0; });
    throw DegenerateDataError(all_zero ? "all pairwise distances are zero; bandwidth undefined"
                                       : "median pairwise distance is zero (mostly duplicated "
                                         "points); pass an explicit bandwidth");
  }
  return median;
}

}  // namespace nysmmd
