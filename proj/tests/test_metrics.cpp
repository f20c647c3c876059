#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "pprviz/metrics.hpp"

using namespace pprviz;

TEST_CASE("node distribution") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 0, 1, 0, 0, 2;
  // 1/1 + 1/4 + 1/5
  CHECK(node_distribution(x) == doctest::Approx(1.45));
  x.row(2) = x.row(1);
  CHECK(std::isinf(node_distribution(x)));
  CHECK_THROWS_AS(node_distribution(Eigen::MatrixXd::Zero(1, 2)), UsageError);
}

TEST_CASE("ULCV uses the population deviation") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 0, 1, 0, 3, 0;
  const std::vector<IndexPair> edges = {{0, 1}, {1, 2}};
  // lengths 1 and 2: mean 1.5, std 0.5
  CHECK(*ulcv(x, std::span<const IndexPair>(edges)) == doctest::Approx(1.0 / 3.0));
  CHECK(!ulcv(x, std::span<const IndexPair>{}).has_value());
  const std::vector<double> equal = {2, 2, 2};
  CHECK(*length_cv<double>(equal) == 0.0);
}

TEST_CASE("bounds") {
  CHECK(nd_upper_bound(10, 20) == doctest::Approx(0.215 * std::numbers::e * 20 + 1.75));
  CHECK(nd_upper_bound(10, 20) == doctest::Approx(13.4383).epsilon(1e-4));
  CHECK(ulcv_alpha_limit() == doctest::Approx(0.5 - std::sqrt(0.25 - 1 / (2 * std::numbers::e))));
  CHECK(ulcv_alpha_limit() == doctest::Approx(0.2430).epsilon(1e-3));
  const auto b = ulcv_upper_bound(0.2);
  REQUIRE(b.has_value());
  CHECK(*b == doctest::Approx((std::log(1 / 0.32) - 1) / 4));
  CHECK(!ulcv_upper_bound(0.25).has_value());
}

TEST_CASE("bound report on a distance matrix") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 2, 3, 2, 0, 2, 3, 2, 0;
  const std::vector<IndexPair> edges = {{0, 1}, {1, 2}};
  const auto r = check_quality_bounds(d, edges, 3, 4, 0.2);
  CHECK(*r.delta_nd == doctest::Approx(0.25 + 0.25 + 1.0 / 9));
  CHECK(*r.delta_ulcv == 0.0);
  CHECK(*r.nd_within);
  CHECK(*r.ulcv_within);
  const auto loose = check_quality_bounds(d, edges, 3, 4, 0.3);
  CHECK(!loose.ulcv_bound.has_value());
  CHECK(!loose.ulcv_within.has_value());
}
