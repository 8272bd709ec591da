#pragma once

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <string>

namespace nysmmd {

using Index = Eigen::Index;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when data makes a statistic undefined (e.g. all points identical
/// for the bandwidth heuristic).
class DegenerateDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n x d block of observations, one point per row. Construction rejects
/// empty shapes and non-finite entries, so every downstream routine can
/// assume clean input.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(RowMatrix points);

  Index size() const noexcept { return points_.rows(); }
  Index dim() const noexcept { return points_.cols(); }
  bool empty() const noexcept { return points_.rows() == 0; }

  const RowMatrix& points() const noexcept { return points_; }
  auto row(Index i) const { return points_.row(i); }

  /// Rows at the given indices, repeats allowed.
  Dataset select(std::span<const Index> indices) const;
  Dataset slice(Index begin, Index count) const;

  static Dataset stack(const Dataset& top, const Dataset& bottom);

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.points_.rows() == b.points_.rows() && a.points_.cols() == b.points_.cols() &&
           a.points_ == b.points_;
  }

 private:
  RowMatrix points_;
};

void require_same_dim(const Dataset& a, const Dataset& b, const std::string& context);

/// X stacked above Y; permutations act on the rows of the pooled matrix.
class PooledData {
 public:
  PooledData(const Dataset& x, const Dataset& y);

  const Dataset& pooled() const noexcept { return pooled_; }
  Index n_x() const noexcept { return n_x_; }
  Index n_y() const noexcept { return pooled_.size() - n_x_; }
  Index size() const noexcept { return pooled_.size(); }
  Index dim() const noexcept { return pooled_.dim(); }

  Dataset x() const { return pooled_.slice(0, n_x_); }
  Dataset y() const { return pooled_.slice(n_x_, n_y()); }

 private:
  Dataset pooled_;
  Index n_x_ = 0;
};

}  // namespace nysmmd
