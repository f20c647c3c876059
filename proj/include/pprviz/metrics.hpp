#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pprviz/errors.hpp"

namespace pprviz {

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

/// sum_{i<j} 1/|X_i - X_j|^2; +inf if two points coincide.
template <typename Derived>
typename Derived::Scalar node_distribution(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() < 2) throw UsageError("node distribution needs at least 2 points");
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      const Scalar d2 = (x.row(i) - x.row(j)).squaredNorm();
      if (d2 == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
      sum += Scalar(1) / d2;
    }
  }
  return sum;
}

/// Coefficient of variation (population std / mean) of a set of lengths.
template <typename Scalar>
std::optional<Scalar> length_cv(std::span<const Scalar> lengths) {
  if (lengths.empty()) return std::nullopt;
  Scalar mean = 0;
  for (Scalar l : lengths) mean += l;
  mean /= static_cast<Scalar>(lengths.size());
  if (!(mean > Scalar(0))) return std::nullopt;
  Scalar var = 0;
  for (Scalar l : lengths) var += (l - mean) * (l - mean);
  var /= static_cast<Scalar>(lengths.size());
  return std::sqrt(var) / mean;
}

/// ULCV of a layout over the given edges (row index pairs).
template <typename Derived>
std::optional<typename Derived::Scalar> ulcv(const Eigen::MatrixBase<Derived>& x, std::span<const IndexPair> edges) {
  using Scalar = typename Derived::Scalar;
  std::vector<Scalar> lengths;
  lengths.reserve(edges.size());
  for (const auto& [a, b] : edges) lengths.push_back((x.row(a) - x.row(b)).norm());
  return length_cv<Scalar>(lengths);
}

/// Largest alpha for which the ULCV bound is proven: 1/2 - sqrt(1/4 - 1/(2e)).
double ulcv_alpha_limit();
double nd_upper_bound(std::uint64_t n, std::uint64_t m);
/// nullopt when alpha exceeds ulcv_alpha_limit().
std::optional<double> ulcv_upper_bound(double alpha);

struct MetricReport {
  std::optional<double> nd;  // layout ND (may be +inf); nullopt below 2 points
  std::optional<double> ulcv;
  double nd_bound = 0;
  std::optional<double> ulcv_bound;
  // Metrics with |X_i - X_j| replaced by delta_ij, the bound hypothesis.
  std::optional<double> delta_nd;
  std::optional<double> delta_ulcv;
  std::optional<bool> nd_within;
  std::optional<bool> ulcv_within;
};

/// Fills the delta-based fields and the bound comparisons. `edges` index
/// rows of `delta`; n and m are the underlying graph's sizes.
MetricReport check_quality_bounds(const Eigen::MatrixXd& delta, std::span<const IndexPair> edges, std::uint64_t n,
                                  std::uint64_t m, double alpha);

}  // namespace pprviz
