#include <doctest.h>

#include <cmath>
#include <random>

#include "pprviz/errors.hpp"
#include "pprviz/layout.hpp"

using namespace pprviz;

namespace {

PDistMatrixd from_values(Eigen::MatrixXd v, std::uint64_t n = 100) { return {std::move(v), n}; }

void check_monotone(const Layout<double>& l) {
  for (std::size_t i = 1; i < l.loss_history.size(); ++i) {
    CHECK(l.loss_history[i] <= l.loss_history[i - 1] * (1 + 1e-12) + 1e-15);
  }
}

}  // namespace

TEST_CASE("two points settle at their target distance") {
  Eigen::MatrixXd d(2, 2);
  d << 0, 3, 3, 0;
  const auto l = stress_majorization(from_values(d));
  CHECK((l.coords.row(0) - l.coords.row(1)).norm() == doctest::Approx(3.0).epsilon(1e-4));
  CHECK(l.stress <= 1e-8);
  CHECK(l.coords.row(0).norm() == 0.0);
}

TEST_CASE("equilateral triangle is recovered") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(3, 3, 2.0);
  d.diagonal().setZero();
  const auto l = stress_majorization(from_values(d));
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) CHECK((l.coords.row(i) - l.coords.row(j)).norm() == doctest::Approx(2.0).epsilon(1e-4));
  }
  CHECK(l.stress <= 1e-8);
}

TEST_CASE("single node sits at the origin") {
  const auto l = stress_majorization(from_values(Eigen::MatrixXd::Zero(1, 1)));
  CHECK(l.coords.rows() == 1);
  CHECK(l.coords.norm() == 0.0);
  CHECK_THROWS_AS(stress_majorization(from_values(Eigen::MatrixXd(0, 0))), UsageError);
}

TEST_CASE("loss never increases and seeds are reproducible") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(2.0, 9.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index c = 3 + static_cast<Eigen::Index>(rng() % 25);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(c, c);
    for (Eigen::Index i = 0; i < c; ++i) {
      for (Eigen::Index j = i + 1; j < c; ++j) d(i, j) = d(j, i) = u(rng);
    }
    MajorizationOptions opts;
    opts.seed = rng();
    const auto a = stress_majorization(from_values(d), opts);
    const auto b = stress_majorization(from_values(d), opts);
    CHECK(a.coords == b.coords);
    CHECK(a.loss_history == b.loss_history);
    CHECK(a.loss_history.size() == static_cast<std::size_t>(a.iterations) + 1);
    CHECK(a.stress == doctest::Approx(stress_loss(d, a.coords)));
    check_monotone(a);
  }
}

TEST_CASE("laplacians have zero row sums") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 2, 3, 2, 0, 4, 3, 4, 0;
  const auto lw = weighted_laplacian(d);
  CHECK(lw.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(lw(0, 1) == doctest::Approx(-0.25));
  Coords<double> y(3, 2);
  y << 0, 0, 1, 0, 1, 0;  // rows 1 and 2 coincide
  const auto ly = stress_laplacian(d, y);
  CHECK(ly(1, 2) == 0.0);
  CHECK(ly(0, 1) == doctest::Approx(-0.5));
  CHECK(ly.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("initial coordinates stay in the box") {
  const auto x = initial_coords<double>(50, 100, 3);
  const double side = 2 * std::log(100.0);
  CHECK(x.minCoeff() >= 0.0);
  CHECK(x.maxCoeff() < side + 1e-6);
  CHECK(initial_coords<double>(50, 100, 3) == x);
  CHECK(initial_coords<double>(50, 100, 4) != x);
}

TEST_CASE("normalization centers and scales") {
  Coords<double> x(3, 2);
  x << 0, 0, 4, 0, 2, 6;
  const auto y = normalize_layout(x);
  CHECK(y.colwise().mean().norm() <= 1e-15);
  CHECK(y.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK(normalize_layout(Coords<double>::Zero(2, 2)).norm() == 0.0);
}

TEST_CASE("float scalar instantiation") {
  Eigen::MatrixXf d(2, 2);
  d << 0, 2, 2, 0;
  const auto l = stress_majorization(PDistMatrix<float>{d, 10});
  CHECK((l.coords.row(0) - l.coords.row(1)).norm() == doctest::Approx(2.0f).epsilon(1e-3));
}
