#include "nysmmd/dataset.hpp"

#include <cmath>

namespace nysmmd {

Dataset::Dataset(RowMatrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw std::invalid_argument("dataset needs at least one point and one dimension, got " +
                                std::to_string(points_.rows()) + "x" +
                                std::to_string(points_.cols()));
  }
  for (Index i = 0; i < points_.rows(); ++i) {
    for (Index j = 0; j < points_.cols(); ++j) {
      if (!std::isfinite(points_(i, j))) {
        throw std::invalid_argument("non-finite value at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
      }
    }
  }
}

Dataset Dataset::select(std::span<const Index> indices) const {
  RowMatrix out(static_cast<Index>(indices.size()), dim());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    const Index i = indices[t];
    if (i < 0 || i >= size()) {
      throw std::out_of_range("row index " + std::to_string(i) + " out of range");
    }
    out.row(static_cast<Index>(t)) = points_.row(i);
  }
  return Dataset(std::move(out));
}

Dataset Dataset::slice(Index begin, Index count) const {
  if (begin < 0 || count < 1 || begin + count > size()) {
    throw std::out_of_range("invalid slice");
  }
  return Dataset(points_.middleRows(begin, count));
}

Dataset Dataset::stack(const Dataset& top, const Dataset& bottom) {
  require_same_dim(top, bottom, "stack");
  RowMatrix out(top.size() + bottom.size(), top.dim());
  out.topRows(top.size()) = top.points_;
  out.bottomRows(bottom.size()) = bottom.points_;
  return Dataset(std::move(out));
}

void require_same_dim(const Dataset& a, const Dataset& b, const std::string& context) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument(context + ": empty dataset");
  }
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(context + ": dimension mismatch (" + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()) + ")");
  }
}

PooledData::PooledData(const Dataset& x, const Dataset& y)
    : pooled_(Dataset::stack(x, y)), n_x_(x.size()) {}

}  // namespace nysmmd
