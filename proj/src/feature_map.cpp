#include "nysmmd/feature_map.hpp"

#include "nysmmd/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace nysmmd {

void FeatureMap::check_input(Index rows, Index cols, Index out_rows, Index out_cols) const {
  if (cols != input_dim()) {
    throw std::invalid_argument("feature map expects dimension " + std::to_string(input_dim()) +
                                ", got " + std::to_string(cols));
  }
  if (out_rows != rows || out_cols != dimension()) {
    throw std::invalid_argument("feature map output block has the wrong shape");
  }
}

Vector FeatureMap::apply(Eigen::Ref<const Vector> x) const {
  if (!x.allFinite()) {
    throw std::invalid_argument("feature map: non-finite input");
  }
  RowMatrix point = x.transpose();
  RowMatrix out(1, dimension());
  apply_rows(point, out);
  return out.row(0).transpose();
}

RowMatrix FeatureMap::apply(const Dataset& points) const {
  RowMatrix out(points.size(), dimension());
  apply_rows(points.points(), out);
  return out;
}

NystromMap::NystromMap(LandmarkSet landmarks, GaussianKernel kernel, Matrix transform, Index rank,
                       double rank_tolerance)
    : landmarks_(std::move(landmarks)),
      kernel_(kernel),
      transform_(std::move(transform)),
      rank_(rank),
      rank_tolerance_(rank_tolerance) {}

void NystromMap::apply_rows(Eigen::Ref<const RowMatrix> points, Eigen::Ref<RowMatrix> out) const {
  check_input(points.rows(), points.cols(), out.rows(), out.cols());
  // transform is symmetric, so k_Z(x)' T is the row form of T k_Z(x).
  out.noalias() = gram_rows(kernel_, points, landmarks_.points.points()) * transform_;
}

NystromMap build_nystrom(LandmarkSet landmarks, const GaussianKernel& k, double rank_tolerance) {
  if (landmarks.size() < 1 || landmarks.points.size() != landmarks.size()) {
    throw std::invalid_argument("build_nystrom: need at least one landmark");
  }
  if (!(rank_tolerance >= 0.0)) {
    throw std::invalid_argument("build_nystrom: rank tolerance must be nonnegative");
  }
  const Matrix k_ll = gram(k, landmarks.points);
  if (!k_ll.allFinite()) {
    throw std::runtime_error("build_nystrom: non-finite landmark Gram entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k_ll);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("build_nystrom: eigendecomposition failed");
  }
  const Vector& values = eig.eigenvalues();
  const double cutoff = rank_tolerance * values.maxCoeff();
  Vector inv_sqrt = Vector::Zero(values.size());
  Index rank = 0;
  for (Index i = 0; i < values.size(); ++i) {
    if (values[i] > cutoff && values[i] > 0.0) {
      inv_sqrt[i] = 1.0 / std::sqrt(values[i]);
      ++rank;
    }
  }
  const Matrix& v = eig.eigenvectors();
  Matrix transform = v * inv_sqrt.asDiagonal() * v.transpose();
  // Symmetrize away round-off so the row-form apply is exact.
  transform = 0.5 * (transform + transform.transpose()).eval();
  return NystromMap(std::move(landmarks), k, std::move(transform), rank, rank_tolerance);
}

RffMap::RffMap(RowMatrix frequencies, double scale)
    : frequencies_(std::move(frequencies)), scale_(scale) {}

void RffMap::apply_rows(Eigen::Ref<const RowMatrix> points, Eigen::Ref<RowMatrix> out) const {
  check_input(points.rows(), points.cols(), out.rows(), out.cols());
  const Matrix phase = points * frequencies_.transpose();
  for (Index i = 0; i < phase.rows(); ++i) {
    for (Index f = 0; f < phase.cols(); ++f) {
      out(i, 2 * f) = scale_ * std::cos(phase(i, f));
      out(i, 2 * f + 1) = scale_ * std::sin(phase(i, f));
    }
  }
}

RffMap build_rff(Index dim, Index ell, const GaussianKernel& k, std::uint64_t seed) {
  if (dim < 1) {
    throw std::invalid_argument("build_rff: dimension must be positive");
  }
  if (ell < 2 || ell % 2 != 0) {
    throw std::invalid_argument("build_rff: feature count must be even and at least 2, got " +
                                std::to_string(ell));
  }
  Engine engine = make_engine(seed, Stream::fourier);
  std::normal_distribution<double> normal(0.0, 1.0 / k.bandwidth());
  RowMatrix freq(ell / 2, dim);
  for (Index i = 0; i < freq.rows(); ++i) {
    for (Index j = 0; j < dim; ++j) {
      freq(i, j) = normal(engine);
    }
  }
  return RffMap(std::move(freq), std::sqrt(2.0 / static_cast<double>(ell)));
}

}  // namespace nysmmd
