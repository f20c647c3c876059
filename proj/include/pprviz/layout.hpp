#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pprviz/errors.hpp"
#include "pprviz/pdist.hpp"

namespace pprviz {

template <typename Scalar>
using Coords = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

template <typename Scalar>
struct Layout {
  Coords<Scalar> coords;
  Scalar stress = 0;
  int iterations = 0;
  std::vector<Scalar> loss_history;  // loss after init, then after each iteration
};

struct MajorizationOptions {
  int max_iters = 200;
  double rel_tol = 1e-7;
  std::uint64_t seed = 42;
};

/// sum_{i<j} (1 - |X_i - X_j| / delta_ij)^2
template <typename DerivedD, typename DerivedX>
typename DerivedD::Scalar stress_loss(const Eigen::MatrixBase<DerivedD>& delta, const Eigen::MatrixBase<DerivedX>& x) {
  using Scalar = typename DerivedD::Scalar;
  if (delta.rows() != x.rows() || delta.cols() != delta.rows()) throw UsageError("layout and distance shapes differ");
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      const Scalar t = Scalar(1) - (x.row(i) - x.row(j)).norm() / delta(i, j);
      sum += t * t;
    }
  }
  return sum;
}

/// L^w with weights delta^-2.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> weighted_laplacian(
    const Eigen::MatrixBase<Derived>& delta) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index c = delta.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> L = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      if (i != j) L(i, j) = Scalar(-1) / (delta(i, j) * delta(i, j));
    }
    L(i, i) = -L.row(i).sum();
  }
  return L;
}

/// L^Y: -1/(delta_ij |Y_i - Y_j|) off the diagonal, 0 for coincident pairs.
template <typename DerivedD, typename DerivedY>
Eigen::Matrix<typename DerivedD::Scalar, Eigen::Dynamic, Eigen::Dynamic> stress_laplacian(
    const Eigen::MatrixBase<DerivedD>& delta, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedD::Scalar;
  const Eigen::Index c = delta.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> L = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      if (i == j) continue;
      const Scalar d = (y.row(i) - y.row(j)).norm();
      if (d > Scalar(0)) L(i, j) = Scalar(-1) / (delta(i, j) * d);
    }
    L(i, i) = -L.row(i).sum();
  }
  return L;
}

/// Seeded uniform start in [0, 2 ln n)^2; coincident pairs nudged apart.
template <typename Scalar>
Coords<Scalar> initial_coords(Eigen::Index c, std::uint64_t n_context, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Scalar side = Scalar(2) * std::log(static_cast<Scalar>(std::max<std::uint64_t>(n_context, 2)));
  Coords<Scalar> x(c, 2);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (int k = 0; k < 2; ++k) x(i, k) = side * static_cast<Scalar>(static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = i + 1; j < c; ++j) {
      if (x.row(i) == x.row(j)) x(j, 0) += Scalar(1e-9);
    }
  }
  return x;
}

/// Minimizes stress_loss by repeated solves of L^w X = L^Y Y with X_0
/// fixed at the origin.
template <typename Scalar>
Layout<Scalar> stress_majorization(const PDistMatrix<Scalar>& delta, const MajorizationOptions& opts = {}) {
  const Eigen::Index c = delta.size();
  if (c == 0) throw UsageError("cannot lay out zero nodes");
  Layout<Scalar> out;
  if (c == 1) {
    out.coords = Coords<Scalar>::Zero(1, 2);
    out.loss_history.push_back(0);
    return out;
  }
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix& D = delta.values;
  const Matrix Lw = weighted_laplacian(D);
  const Eigen::LLT<Matrix> solver(Lw.bottomRightCorner(c - 1, c - 1));
  if (solver.info() != Eigen::Success) throw InvariantError("weighted Laplacian is not positive definite");

  Coords<Scalar> y = initial_coords<Scalar>(c, delta.n_context, opts.seed);
  y.rowwise() -= y.row(0);
  Scalar loss = stress_loss(D, y);
  out.loss_history.push_back(loss);
  for (int it = 0; it < opts.max_iters && loss > Scalar(0); ++it) {
    const Matrix rhs = stress_laplacian(D, y) * y;
    Coords<Scalar> x = Coords<Scalar>::Zero(c, 2);
    x.bottomRows(c - 1) = solver.solve(rhs.bottomRows(c - 1));
    const Scalar next = stress_loss(D, x);
    y = std::move(x);
    out.loss_history.push_back(next);
    ++out.iterations;
    const Scalar prev = loss;
    loss = next;
    if ((prev - next) / prev < static_cast<Scalar>(opts.rel_tol)) break;
  }
  out.coords = std::move(y);
  out.stress = loss;
  return out;
}

/// Centroid to the origin, then scale so the largest |coordinate| is 1.
template <typename Derived>
Coords<typename Derived::Scalar> normalize_layout(const Eigen::MatrixBase<Derived>& coords) {
  using Scalar = typename Derived::Scalar;
  Coords<Scalar> x = coords;
  if (x.rows() == 0) return x;
  x.rowwise() -= x.colwise().mean();
  const Scalar extent = x.cwiseAbs().maxCoeff();
  if (extent > Scalar(0)) x /= extent;
  return x;
}

}  // namespace pprviz
