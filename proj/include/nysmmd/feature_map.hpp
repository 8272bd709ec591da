#pragma once

#include "nysmmd/dataset.hpp"
#include "nysmmd/kernel.hpp"
#include "nysmmd/leverage.hpp"

#include <cstdint>
#include <memory>

namespace nysmmd {

/// Maps a d-dimensional point to an ell-dimensional feature vector whose
/// inner products approximate the kernel. Immutable after construction.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;

  virtual Index dimension() const noexcept = 0;
  virtual Index input_dim() const noexcept = 0;

  /// Features of each row of `points` into the matching row of `out`.
  virtual void apply_rows(Eigen::Ref<const RowMatrix> points,
                          Eigen::Ref<RowMatrix> out) const = 0;

  Vector apply(Eigen::Ref<const Vector> x) const;
  RowMatrix apply(const Dataset& points) const;

 protected:
  void check_input(Index rows, Index cols, Index out_rows, Index out_cols) const;
};

inline constexpr double kDefaultRankTolerance = 1e-10;

/// phi(x) = (K_l^+)^{1/2} [k(z_1, x), ..., k(z_l, x)]: coordinates of the
/// projection of k(x, .) onto span{k(z_i, .)}.
class NystromMap final : public FeatureMap {
 public:
  NystromMap(LandmarkSet landmarks, GaussianKernel kernel, Matrix transform, Index rank,
             double rank_tolerance);

  Index dimension() const noexcept override { return landmarks_.size(); }
  Index input_dim() const noexcept override { return landmarks_.points.dim(); }
  void apply_rows(Eigen::Ref<const RowMatrix> points,
                  Eigen::Ref<RowMatrix> out) const override;

  const LandmarkSet& landmarks() const noexcept { return landmarks_; }
  const GaussianKernel& kernel() const noexcept { return kernel_; }
  const Matrix& transform() const noexcept { return transform_; }
  /// Number of eigenvalues of K_l kept by the pseudo-inverse.
  Index rank() const noexcept { return rank_; }
  double rank_tolerance() const noexcept { return rank_tolerance_; }

 private:
  LandmarkSet landmarks_;
  GaussianKernel kernel_;
  Matrix transform_;
  Index rank_;
  double rank_tolerance_;
};

NystromMap build_nystrom(LandmarkSet landmarks, const GaussianKernel& k,
                         double rank_tolerance = kDefaultRankTolerance);

/// sqrt(2 / ell) [cos(w_1.x), sin(w_1.x), ..., cos(w_{ell/2}.x), sin(w_{ell/2}.x)]
/// with w_i ~ N(0, h^{-2} I).
class RffMap final : public FeatureMap {
 public:
  RffMap(RowMatrix frequencies, double scale);

  Index dimension() const noexcept override { return 2 * frequencies_.rows(); }
  Index input_dim() const noexcept override { return frequencies_.cols(); }
  void apply_rows(Eigen::Ref<const RowMatrix> points,
                  Eigen::Ref<RowMatrix> out) const override;

  const RowMatrix& frequencies() const noexcept { return frequencies_; }
  double scale() const noexcept { return scale_; }

 private:
  RowMatrix frequencies_;
  double scale_;
};

RffMap build_rff(Index dim, Index ell, const GaussianKernel& k, std::uint64_t seed);

}  // namespace nysmmd
