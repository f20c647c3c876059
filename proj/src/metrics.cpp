#include "pprviz/metrics.hpp"

#include <cmath>
#include <numbers>

namespace pprviz {

double ulcv_alpha_limit() { return 0.5 - std::sqrt(0.25 - 1.0 / (2.0 * std::numbers::e)); }

double nd_upper_bound(std::uint64_t n, std::uint64_t m) {
  const double nn = static_cast<double>(n);
  return 0.215 * std::numbers::e * static_cast<double>(m) + 0.0175 * nn * nn;
}

std::optional<double> ulcv_upper_bound(double alpha) {
  if (!(alpha > 0) || alpha > ulcv_alpha_limit()) return std::nullopt;
  return (std::log(1.0 / (2.0 * alpha * (1.0 - alpha))) - 1.0) / 4.0;
}

MetricReport check_quality_bounds(const Eigen::MatrixXd& delta, std::span<const IndexPair> edges, std::uint64_t n,
                                  std::uint64_t m, double alpha) {
  MetricReport r;
  r.nd_bound = nd_upper_bound(n, m);
  r.ulcv_bound = ulcv_upper_bound(alpha);
  const Eigen::Index c = delta.rows();
  if (c >= 2) {
    double nd = 0;
    for (Eigen::Index i = 0; i < c; ++i) {
      for (Eigen::Index j = i + 1; j < c; ++j) nd += 1.0 / (delta(i, j) * delta(i, j));
    }
    r.delta_nd = nd;
    r.nd_within = nd <= r.nd_bound;
  }
  std::vector<double> lengths;
  lengths.reserve(edges.size());
  for (const auto& [a, b] : edges) lengths.push_back(delta(a, b));
  r.delta_ulcv = length_cv<double>(lengths);
  if (r.delta_ulcv && r.ulcv_bound) r.ulcv_within = *r.delta_ulcv <= *r.ulcv_bound;
  return r;
}

}  // namespace pprviz
