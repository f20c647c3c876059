#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "oracle.hpp"
#include "pprviz/errors.hpp"
#include "pprviz/hierarchy.hpp"
#include "pprviz/ppr.hpp"
#include "pprviz/synthetic.hpp"

using namespace pprviz;

namespace {

constexpr double kAlpha = 0.2;

Scope singletons(NodeId n) {
  std::vector<std::vector<NodeId>> groups(n);
  for (NodeId v = 0; v < n; ++v) groups[v] = {v};
  return Scope::from_groups(n, std::move(groups));
}

// Forward invariant: pi_d(V_i, V_j) = est_j + sum_{t in F_j} sum_k r_k pi(k,t) / |F_j|.
void check_forward_invariant(const DirectedGraph& g, const Scope& scope, std::size_t i, const ResidueState& st,
                             const Eigen::MatrixXd& pi, const Eigen::MatrixXd& pid) {
  const Eigen::Map<const Eigen::RowVectorXd> r(st.residues.data(), g.node_count());
  const Eigen::RowVectorXd carried = r * pi;
  for (std::size_t j = 0; j < scope.size(); ++j) {
    double tail = 0;
    for (NodeId t : scope.leaves(j)) tail += carried[t];
    tail /= static_cast<double>(scope.leaves(j).size());
    const double exact = oracle::level_dppr(pid, scope.leaves(i), scope.leaves(j));
    CHECK(std::abs(st.estimates[j] + tail - exact) <= 1e-8);
  }
}

// Backward invariant: pi_d(s, V_j) = d(s) (reserve[s] + sum_k pi(s,k) r_k).
void check_backward_invariant(const DirectedGraph& g, const Scope& scope, std::size_t j, const ResidueState& st,
                              const Eigen::MatrixXd& pi) {
  const Eigen::Map<const Eigen::VectorXd> r(st.residues.data(), g.node_count());
  const Eigen::VectorXd carried = pi * r;
  for (NodeId s = 0; s < g.node_count(); ++s) {
    double exact = 0;
    for (NodeId t : scope.leaves(j)) exact += pi(s, t);
    exact *= g.out_degree(s) / static_cast<double>(scope.leaves(j).size());
    CHECK(std::abs(g.out_degree(s) * (st.reserve[s] + carried[s]) - exact) <= 1e-8);
  }
}

double residue_norm(const ResidueState& st) { return std::accumulate(st.residues.begin(), st.residues.end(), 0.0); }

}  // namespace

TEST_CASE("two-node cycle closed form") {
  const auto g = synthetic::cycle(2, true);
  PprParams p = PprParams::for_fanout(5);
  const auto pi = ppr_single_source_pi(g, p, 0);
  CHECK(pi[0] == doctest::Approx(0.2 / (1 - 0.64)).epsilon(1e-9));
  CHECK(pi[1] == doctest::Approx(0.2 * 0.8 / (1 - 0.64)).epsilon(1e-9));
  const NodeId a[] = {0}, b[] = {1};
  CHECK(exact_level_dppr(g, p, a, b) == doctest::Approx(0.4444444444).epsilon(1e-8));
  CHECK_THROWS_AS(ppr_single_source_pi(g, p, 2), UsageError);
}

TEST_CASE("first forward push on a degree-3 source") {
  // v0 -> {1,2,3}, every other node back to v0
  const auto g = DirectedGraph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 0}, {2, 0}, {3, 0}});
  const auto scope = singletons(4);
  const auto st = gfp(g, scope, 0, 1e-9, 0.1, 1);
  CHECK(st.estimates[0] == doctest::Approx(0.3));
  for (NodeId u : {1u, 2u, 3u}) CHECK(st.residues[u] == doctest::Approx(0.9));
  CHECK(st.stats.pushes == 1);
  CHECK(st.stats.edge_ops == 3);
  CHECK(!st.converged);
}

TEST_CASE("first backward push splits by in-neighbor degree") {
  // v5 has out-degree 2, v6 out-degree 1; both point at v10
  std::vector<Edge> e = {{5, 10}, {5, 0}, {6, 10}};
  for (NodeId v = 0; v < 11; ++v) {
    if (v != 5 && v != 6) e.push_back({v, v});
  }
  const auto g = DirectedGraph::from_edges(11, e);
  const auto st = gbp(g, singletons(11), 10, 1e-9, 0.1, 1);
  CHECK(st.residues[5] == doctest::Approx(0.45));
  CHECK(st.residues[6] == doctest::Approx(0.9));
  CHECK(st.reserve[10] == doctest::Approx(0.1));
}

TEST_CASE("push invariants hold at every prefix") {
  std::mt19937_64 rng(3);
  for (const auto& item : oracle::corpus()) {
    if (item.graph.node_count() > 50) continue;
    CAPTURE(item.name);
    const auto& g = item.graph;
    const auto pi = oracle::ppr_matrix(g, kAlpha);
    const auto pid = oracle::dppr_matrix(g, kAlpha);
    const auto h = build_hierarchy(g, 5);
    const auto scope = Scope::of(h, h.root());
    for (std::size_t i = 0; i < scope.size(); ++i) {
      for (int prefix = 0; prefix < 3; ++prefix) {
        const std::uint64_t limit = rng() % 200;
        const auto f = gfp(g, scope, i, 1e-6, kAlpha, limit);
        check_forward_invariant(g, scope, i, f, pi, pid);
        double initial = 0;
        for (NodeId v : scope.leaves(i)) initial += g.out_degree(v);
        initial /= static_cast<double>(scope.leaves(i).size());
        const double reserve = std::accumulate(f.reserve.begin(), f.reserve.end(), 0.0);
        CHECK(reserve + residue_norm(f) == doctest::Approx(initial).epsilon(1e-12));

        const auto b = gbp(g, scope, i, 1e-6, kAlpha, limit);
        check_backward_invariant(g, scope, i, b, pi);
      }
    }
  }
}

TEST_CASE("forward residue norm never increases") {
  const auto g = synthetic::power_law(150, 2, 3);
  const auto scope = singletons(g.node_count());
  double last = residue_norm(gfp(g, scope, 0, 1e-5, kAlpha, 0));
  for (std::uint64_t n = 1; n < 300; n += 7) {
    const double now = residue_norm(gfp(g, scope, 0, 1e-5, kAlpha, n));
    CHECK(now <= last + 1e-15);
    last = now;
  }
}

TEST_CASE("converged pushes respect their deterministic bounds") {
  const auto g = synthetic::two_block_sbm(80, 0.3, 0.02, 1);
  const auto pid = oracle::dppr_matrix(g, kAlpha);
  const auto h = build_hierarchy(g, 5);
  const auto scope = Scope::of(h, h.root());
  const double r_max = 1e-4, r_b = 1e-4;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    const auto f = gfp(g, scope, i, r_max, kAlpha);
    CHECK(f.converged);
    const auto b = gbp(g, scope, i, r_b, kAlpha);
    CHECK(b.converged);
    for (std::size_t j = 0; j < scope.size(); ++j) {
      const double row_exact = oracle::level_dppr(pid, scope.leaves(i), scope.leaves(j));
      const double col_exact = oracle::level_dppr(pid, scope.leaves(j), scope.leaves(i));
      // pushes only settle mass, so both are lower bounds
      CHECK(f.estimates[j] <= row_exact + 1e-12);
      CHECK(b.estimates[j] <= col_exact + 1e-12);
      CHECK(row_exact - f.estimates[j] <= r_max * g.edge_count() + 1e-12);
      CHECK(col_exact - b.estimates[j] <= r_b * scope.mean_degree(g, j) + 1e-12);
    }
  }
}

TEST_CASE("DPR sums to one") {
  for (const auto& item : oracle::corpus()) {
    CAPTURE(item.name);
    const auto dpr = compute_dpr(item.graph, PprParams::for_fanout(5));
    CHECK(std::accumulate(dpr.tau.begin(), dpr.tau.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dpr.tau_star == doctest::Approx(1.0 / std::sqrt(5.0 * item.graph.node_count())));
  }
}

TEST_CASE("power iteration matches the dense oracle") {
  const auto g = synthetic::random_directed(40, 0.08, 5);
  const auto pi = oracle::ppr_matrix(g, kAlpha);
  auto p = PprParams::for_fanout(5);
  for (NodeId s : {0u, 7u, 39u}) {
    const auto row = ppr_single_source_pi(g, p, s);
    CHECK((row.transpose() - pi.row(s)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("tau-push meets the error definition against the oracle") {
  for (const auto& item : oracle::corpus()) {
    if (item.graph.node_count() > 200) continue;
    CAPTURE(item.name);
    const auto& g = item.graph;
    const auto pid = oracle::dppr_matrix(g, kAlpha);
    const auto params = PprParams::for_fanout(5);
    const auto dpr = compute_dpr(g, params);
    const auto h = build_hierarchy(g, 5);
    const auto scope = Scope::of(h, h.root());
    if (scope.size() < 2) continue;
    const auto est = tau_push(g, scope, dpr, params);
    for (std::size_t i = 0; i < scope.size(); ++i) {
      for (std::size_t j = 0; j < scope.size(); ++j) {
        if (i == j) continue;
        const double exact = oracle::level_dppr(pid, scope.leaves(i), scope.leaves(j));
        CHECK(oracle::within_eps_delta(est.values(i, j), exact, params.epsilon, params.delta));
      }
    }
    CHECK(est.counters.gfp_runs == scope.size());
  }
}

TEST_CASE("gating: a hub triggers backward pushes, a long cycle does not") {
  const auto params = PprParams::for_fanout(5);
  {
    const auto g = synthetic::star(20);
    const auto dpr = compute_dpr(g, params);
    const auto est = tau_push(g, singletons(g.node_count()), dpr, params);
    CHECK(est.counters.gbp_runs >= 1);
  }
  {
    const auto g = synthetic::cycle(100);
    const auto dpr = compute_dpr(g, params);
    const auto h = build_hierarchy(g, 5);
    const auto est = tau_push(g, Scope::of(h, h.root()), dpr, params);
    CHECK(est.counters.gbp_runs == 0);
  }
}

TEST_CASE("tau-push does not depend on the thread count") {
  const auto g = synthetic::power_law(150, 2, 3);
  const auto params = PprParams::for_fanout(5);
  const auto dpr = compute_dpr(g, params);
  const auto h = build_hierarchy(g, 5);
  const auto scope = Scope::of(h, h.root());
  const auto one = tau_push(g, scope, dpr, params, {.threads = 1});
  const auto four = tau_push(g, scope, dpr, params, {.threads = 4});
  CHECK(one.values == four.values);
  CHECK(one.counters.push.edge_ops == four.counters.push.edge_ops);
}

TEST_CASE("cached backward pushes stand in for fresh ones") {
  const auto g = synthetic::star(20);
  const auto params = PprParams::for_fanout(5);
  auto dpr = compute_dpr(g, params);
  build_gbp_cache(g, params, dpr);
  REQUIRE(!dpr.gbp_cache.empty());
  CHECK(dpr.gbp_cache.count(0) == 1);  // the hub
  const auto scope = singletons(g.node_count());
  const auto cached = tau_push(g, scope, dpr, params, {.cache = &dpr.gbp_cache});
  CHECK(cached.counters.cache_hits >= 1);
  const auto pid = oracle::dppr_matrix(g, kAlpha);
  for (std::size_t i = 0; i < scope.size(); ++i) {
    for (std::size_t j = 0; j < scope.size(); ++j) {
      if (i != j) CHECK(oracle::within_eps_delta(cached.values(i, j), pid(i, j), params.epsilon, params.delta));
    }
  }
}

TEST_CASE("gfp-only and pi-oracle") {
  const auto g = synthetic::two_block_sbm(80, 0.3, 0.02, 1);
  const auto params = PprParams::for_fanout(5);
  const auto dpr = compute_dpr(g, params);
  const auto h = build_hierarchy(g, 5);
  const auto scope = Scope::of(h, h.root());
  const auto pid = oracle::dppr_matrix(g, kAlpha);
  const auto exact = pi_oracle(g, scope, params);
  const auto forward = gfp_only(g, scope, dpr, params);
  CHECK(exact.counters.pi_iterations > 0);
  CHECK(forward.counters.gbp_runs == 0);
  for (std::size_t i = 0; i < scope.size(); ++i) {
    for (std::size_t j = 0; j < scope.size(); ++j) {
      const double want = oracle::level_dppr(pid, scope.leaves(i), scope.leaves(j));
      CHECK(std::abs(exact.values(i, j) - want) <= 1e-8);
      if (i != j) CHECK(oracle::within_eps_delta(forward.values(i, j), want, params.epsilon, params.delta));
    }
  }
}

TEST_CASE("gfra is deterministic per seed") {
  const auto g = synthetic::power_law(100, 2, 9);
  auto params = PprParams::for_fanout(5);
  const auto h = build_hierarchy(g, 5);
  const auto scope = Scope::of(h, h.root());
  const auto a = gfra(g, scope, params, 1);
  const auto b = gfra(g, scope, params, 1, {.threads = 3});
  const auto c = gfra(g, scope, params, 2);
  CHECK(a.values == b.values);
  CHECK(a.counters.walks > 0);
  CHECK(a.values != c.values);
}

TEST_CASE("engines reject degenerate scopes") {
  const auto g = synthetic::path(3);
  const auto params = PprParams::for_fanout(5);
  const auto dpr = compute_dpr(g, params);
  const auto one = Scope::from_groups(3, {{0, 1, 2}});
  CHECK_THROWS_AS(tau_push(g, one, dpr, params), UsageError);
  CHECK_THROWS_AS(gfra(g, one, params, 0), UsageError);
  CHECK_THROWS_AS(Scope::from_groups(3, {{0}, {0}}), UsageError);
  CHECK_THROWS_AS(Scope::from_groups(3, {{5}}), UsageError);
  CHECK_THROWS_AS(Scope::from_groups(3, {{}}), UsageError);
  CHECK_THROWS_AS(gfp(g, one, 0, 0.0, kAlpha), UsageError);
}

TEST_CASE("parameter validation") {
  auto p = PprParams::for_fanout(5);
  CHECK(p.delta == doctest::Approx(0.02));
  CHECK_NOTHROW(p.validate());
  p.alpha = 1.0;
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = PprParams::for_fanout(1);
  CHECK_THROWS_AS(p.validate(), UsageError);
  p = PprParams::for_fanout(5);
  p.epsilon = 0;
  CHECK_THROWS_AS(p.validate(), UsageError);
  CHECK(PprParams::for_fanout(5).failure_probability(100) == doctest::Approx(0.01));
}

TEST_CASE("DPR and GBP cache files round-trip") {
  const auto g = synthetic::star(20);
  const auto params = PprParams::for_fanout(5);
  auto dpr = compute_dpr(g, params);
  build_gbp_cache(g, params, dpr);
  const auto dir = std::filesystem::temp_directory_path() / "pprviz_ppr_rt";
  std::filesystem::create_directories(dir);
  write_dpr(dpr, dir / "dpr.bin");
  const auto back = read_dpr(dir / "dpr.bin");
  CHECK(back.tau == dpr.tau);
  CHECK(back.tau_star == dpr.tau_star);
  write_gbp_cache(dpr.gbp_cache, dir / "gbp");
  const auto cache = read_gbp_cache(dir / "gbp");
  REQUIRE(cache.size() == dpr.gbp_cache.size());
  for (const auto& [t, e] : dpr.gbp_cache) {
    CHECK(cache.at(t).r_b_max == e.r_b_max);
    CHECK(cache.at(t).reserve == e.reserve);
    CHECK(cache.at(t).residues == e.residues);
  }
  CHECK(read_gbp_cache(dir / "missing").empty());
}
