#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "pprviz/errors.hpp"

namespace pprviz {

/// Symmetric clamped distance matrix over the children of one supernode.
template <typename Scalar>
struct PDistMatrix {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> values;
  std::uint64_t n_context = 0;

  Eigen::Index size() const { return values.rows(); }
};
using PDistMatrixd = PDistMatrix<double>;

/// Upper clamp 2 ln n, never below the lower clamp 2.
template <typename Scalar>
Scalar pdist_upper(std::uint64_t n) {
  return std::max(Scalar(2), Scalar(2) * std::log(static_cast<Scalar>(n)));
}

/// min(max(1 - ln z, 2), 2 ln n); z = 0 gives the upper clamp.
template <typename Scalar>
Scalar dppr_to_pdist(Scalar z, std::uint64_t n) {
  if (z < Scalar(0) || std::isnan(z)) throw UsageError("DPPR sum must be non-negative");
  const Scalar upper = pdist_upper<Scalar>(n);
  if (z == Scalar(0)) return upper;
  return std::min(std::max(Scalar(1) - std::log(z), Scalar(2)), upper);
}

template <typename Derived>
PDistMatrix<typename Derived::Scalar> build_pdist_matrix(const Eigen::MatrixBase<Derived>& dppr, std::uint64_t n) {
  using Scalar = typename Derived::Scalar;
  if (dppr.rows() != dppr.cols()) throw UsageError("DPPR matrix must be square");
  PDistMatrix<Scalar> out;
  out.n_context = n;
  const Eigen::Index c = dppr.rows();
  out.values.setZero(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = i + 1; j < c; ++j) {
      out.values(i, j) = out.values(j, i) = dppr_to_pdist<Scalar>(dppr(i, j) + dppr(j, i), n);
    }
  }
  return out;
}

/// (epsilon, delta) giving a (theta, sigma)-approximate PDist.
template <typename Scalar>
std::pair<Scalar, Scalar> pdist_accuracy_params(Scalar theta, Scalar sigma) {
  const Scalar epsilon = Scalar(1) - std::exp(Scalar(-2) * theta);
  const Scalar delta = std::exp(Scalar(1) - sigma) / Scalar(2);
  return {epsilon, delta};
}

}  // namespace pprviz
