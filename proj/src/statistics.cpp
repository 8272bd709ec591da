#include "nysmmd/statistics.hpp"

#include "nysmmd/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nysmmd {

namespace {

constexpr Index kFeatureBlock = 256;

void check_map(const Dataset& data, const FeatureMap& map, const char* who) {
  if (data.dim() != map.input_dim()) {
    throw std::invalid_argument(std::string(who) + ": data dimension " +
                                std::to_string(data.dim()) + " does not match the feature map (" +
                                std::to_string(map.input_dim()) + ")");
  }
}

void check_permutations(Index permutations) {
  if (permutations < 1) {
    throw std::invalid_argument("need at least one permutation");
  }
}

// Per-permutation state for streaming selection sampling.
struct Relabeler {
  std::uint64_t stream = 0;
  Index remaining_x = 0;
};

using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Features are shifted by the first point's feature before summing. The
// statistic is unchanged, but identical points then contribute exact zeros,
// so ties between permutations survive rounding.
RowVector reference_feature(const Dataset& d, const FeatureMap& map) {
  RowMatrix f(1, map.dimension());
  map.apply_rows(d.points().topRows(1), f);
  return f.row(0);
}

}  // namespace

double exact_mmd(const Dataset& x, const Dataset& y, const GaussianKernel& k) {
  require_same_dim(x, y, "exact_mmd");
  const double xx = gram(k, x).mean();
  const double xy = gram(k, x, y).mean();
  const double yy = gram(k, y).mean();
  return std::sqrt(std::max(0.0, xx - 2.0 * xy + yy));
}

double feature_mmd(const Dataset& x, const Dataset& y, const FeatureMap& map) {
  require_same_dim(x, y, "feature_mmd");
  check_map(x, map, "feature_mmd");
  Vector diff = Vector::Zero(map.dimension());
  RowMatrix block(kFeatureBlock, map.dimension());
  const RowVector ref = reference_feature(x, map);
  const auto accumulate = [&](const Dataset& d, double weight) {
    for (Index start = 0; start < d.size(); start += kFeatureBlock) {
      const Index rows = std::min(kFeatureBlock, d.size() - start);
      map.apply_rows(d.points().middleRows(start, rows), block.topRows(rows));
      block.topRows(rows).rowwise() -= ref;
      diff += weight * block.topRows(rows).colwise().sum().transpose();
    }
  };
  accumulate(x, 1.0 / static_cast<double>(x.size()));
  accumulate(y, -1.0 / static_cast<double>(y.size()));
  return diff.norm();
}

std::vector<std::uint8_t> permutation_labels(Index n_x, Index n, std::uint64_t seed, Index p) {
  if (n_x < 1 || n_x >= n || p < 0) {
    throw std::invalid_argument("permutation_labels: need 1 <= n_x < n and p >= 0");
  }
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(n), 0);
  if (p == 0) {
    std::fill_n(labels.begin(), n_x, std::uint8_t{1});
    return labels;
  }
  const std::uint64_t stream =
      derive_seed(derive_seed(seed, Stream::permutations), static_cast<std::uint64_t>(p));
  Index remaining = n_x;
  for (Index i = 0; i < n; ++i) {
    const double u = counter_uniform(stream, static_cast<std::uint64_t>(i));
    if (u * static_cast<double>(n - i) < static_cast<double>(remaining)) {
      labels[static_cast<std::size_t>(i)] = 1;
      --remaining;
    }
  }
  return labels;
}

std::vector<double> permuted_statistics(const PooledData& data, const FeatureMap& map,
                                        Index permutations, std::uint64_t seed) {
  check_permutations(permutations);
  check_map(data.pooled(), map, "permuted_statistics");
  const Index n = data.size();
  const Index n_x = data.n_x();
  const Index count = permutations + 1;
  const Index ell = map.dimension();
  const double w_x = 1.0 / static_cast<double>(n_x);
  const double w_y = -1.0 / static_cast<double>(data.n_y());

  RowMatrix acc = RowMatrix::Zero(count, ell);
  std::vector<Relabeler> relabel(static_cast<std::size_t>(count));
  const std::uint64_t perm_seed = derive_seed(seed, Stream::permutations);
  for (Index p = 1; p < count; ++p) {
    relabel[static_cast<std::size_t>(p)] = {derive_seed(perm_seed, static_cast<std::uint64_t>(p)),
                                            n_x};
  }

  RowMatrix features(kFeatureBlock, ell);
  const RowVector ref = reference_feature(data.pooled(), map);
  const RowMatrix& pts = data.pooled().points();
  for (Index start = 0; start < n; start += kFeatureBlock) {
    const Index rows = std::min(kFeatureBlock, n - start);
    map.apply_rows(pts.middleRows(start, rows), features.topRows(rows));
    features.topRows(rows).rowwise() -= ref;

#pragma omp parallel for schedule(static)
    for (Index p = 0; p < count; ++p) {
      auto v = acc.row(p);
      if (p == 0) {
        for (Index r = 0; r < rows; ++r) {
          v += (start + r < n_x ? w_x : w_y) * features.row(r);
        }
        continue;
      }
      Relabeler& state = relabel[static_cast<std::size_t>(p)];
      for (Index r = 0; r < rows; ++r) {
        const Index i = start + r;
        const double u = counter_uniform(state.stream, static_cast<std::uint64_t>(i));
        const bool to_x =
            u * static_cast<double>(n - i) < static_cast<double>(state.remaining_x);
        if (to_x) {
          --state.remaining_x;
        }
        v += (to_x ? w_x : w_y) * features.row(r);
      }
    }
  }

  std::vector<double> stats(static_cast<std::size_t>(count));
  for (Index p = 0; p < count; ++p) {
    stats[static_cast<std::size_t>(p)] = acc.row(p).norm();
  }
  return stats;
}

std::vector<double> permuted_statistics_serial(const PooledData& data, const FeatureMap& map,
                                               Index permutations, std::uint64_t seed) {
  check_permutations(permutations);
  check_map(data.pooled(), map, "permuted_statistics_serial");
  RowMatrix features = map.apply(data.pooled());
  features.rowwise() -= RowVector(features.row(0));
  const Index n = data.size();
  const double w_x = 1.0 / static_cast<double>(data.n_x());
  const double w_y = -1.0 / static_cast<double>(data.n_y());

  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(permutations + 1));
  for (Index p = 0; p <= permutations; ++p) {
    const auto labels = permutation_labels(data.n_x(), n, seed, p);
    Vector v = Vector::Zero(map.dimension());
    for (Index i = n - 1; i >= 0; --i) {
      v += (labels[static_cast<std::size_t>(i)] ? w_x : w_y) * features.row(i).transpose();
    }
    stats.push_back(v.norm());
  }
  return stats;
}

std::vector<double> exact_permuted_statistics(const PooledData& data, const GaussianKernel& k,
                                              Index permutations, std::uint64_t seed) {
  check_permutations(permutations);
  const Matrix kernel = gram(k, data.pooled());
  const Index n = data.size();
  const double w_x = 1.0 / static_cast<double>(data.n_x());
  const double w_y = -1.0 / static_cast<double>(data.n_y());

  std::vector<double> stats(static_cast<std::size_t>(permutations + 1));
#pragma omp parallel for schedule(dynamic)
  for (Index p = 0; p <= permutations; ++p) {
    const auto labels = permutation_labels(data.n_x(), n, seed, p);
    Vector w(n);
    for (Index i = 0; i < n; ++i) {
      w[i] = labels[static_cast<std::size_t>(i)] ? w_x : w_y;
    }
    const double quad = w.dot(kernel.selfadjointView<Eigen::Lower>() * w);
    stats[static_cast<std::size_t>(p)] = std::sqrt(std::max(0.0, quad));
  }
  return stats;
}

UstatParts ustat_decomposition(const PooledData& data, std::span<const Index> sigma,
                               const FeatureMap& map) {
  const Index n = data.size();
  const Index n_x = data.n_x();
  const Index n_y = data.n_y();
  if (n_x < 2 || n_y < 2) {
    throw std::invalid_argument("ustat_decomposition: both samples need at least two points");
  }
  if (static_cast<Index>(sigma.size()) != n) {
    throw std::invalid_argument("ustat_decomposition: permutation has the wrong length");
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  for (const Index s : sigma) {
    if (s < 0 || s >= n || seen[static_cast<std::size_t>(s)]) {
      throw std::invalid_argument("ustat_decomposition: sigma is not a permutation");
    }
    seen[static_cast<std::size_t>(s)] = 1;
  }
  check_map(data.pooled(), map, "ustat_decomposition");

  const RowMatrix features = map.apply(data.pooled());
  Vector sum_x = Vector::Zero(map.dimension());
  Vector sum_y = Vector::Zero(map.dimension());
  double diag_x = 0.0;  // sum_i k(x_i, x_i)
  double diag_y = 0.0;
  for (Index t = 0; t < n; ++t) {
    const auto f = features.row(sigma[static_cast<std::size_t>(t)]).transpose();
    if (t < n_x) {
      sum_x += f;
      diag_x += f.squaredNorm();
    } else {
      sum_y += f;
      diag_y += f.squaredNorm();
    }
  }
  const double s_xy = sum_x.dot(sum_y);
  const double off_xx = sum_x.squaredNorm() - diag_x;  // sum over i != i'
  const double off_yy = sum_y.squaredNorm() - diag_y;

  const auto nx = static_cast<double>(n_x);
  const auto ny = static_cast<double>(n_y);

  // Sum of h over i != i', j != j', expanded term by term.
  const double u_sum = ny * (ny - 1.0) * off_xx - 2.0 * (nx - 1.0) * (ny - 1.0) * s_xy +
                       nx * (nx - 1.0) * off_yy;
  // i = i', j != j'
  const double r_same_x = ny * (ny - 1.0) * diag_x - 2.0 * (ny - 1.0) * s_xy + nx * off_yy;
  // i != i', j = j'
  const double r_same_y = ny * off_xx - 2.0 * (nx - 1.0) * s_xy + nx * (nx - 1.0) * diag_y;
  // i = i', j = j'
  const double r_both = ny * diag_x - 2.0 * s_xy + nx * diag_y;

  UstatParts out;
  out.u = u_sum / (nx * (nx - 1.0) * ny * (ny - 1.0));
  out.r = (r_same_x + r_same_y + r_both) / (nx * nx * ny * ny);
  out.weight = (nx - 1.0) * (ny - 1.0) / (nx * ny);
  return out;
}

}  // namespace nysmmd
