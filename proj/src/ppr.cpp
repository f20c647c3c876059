#include "pprviz/ppr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "binary_io.hpp"
#include "parallel.hpp"
#include "pprviz/errors.hpp"

namespace pprviz {

PprParams PprParams::for_fanout(std::uint32_t k) {
  PprParams p;
  p.k = k;
  p.delta = 1.0 / (10.0 * k);
  return p;
}

void PprParams::validate() const {
  if (!(alpha > 0 && alpha < 1)) throw UsageError("alpha must lie in (0,1)");
  if (!(epsilon > 0 && epsilon < 1)) throw UsageError("epsilon must lie in (0,1)");
  if (!(delta > 0)) throw UsageError("delta must be positive");
  if (k < 2) throw UsageError("fanout bound k must be at least 2");
  if (!(p_f >= 0 && p_f < 1)) throw UsageError("p_f must lie in [0,1)");
  if (!(pi_tolerance > 0)) throw UsageError("pi_tolerance must be positive");
}

double PprParams::tau_threshold(NodeId n) const { return 1.0 / std::sqrt(static_cast<double>(k) * n); }

Scope Scope::of(const SupergraphHierarchy& h, SupernodeId parent) {
  if (h.is_leaf(parent)) throw UsageError("supernode " + std::to_string(parent) + " is a leaf");
  std::vector<std::vector<NodeId>> groups;
  for (auto c : h.children(parent)) {
    const auto leaves = h.leaves(c);
    groups.emplace_back(leaves.begin(), leaves.end());
  }
  return from_groups(h.leaf_count(), std::move(groups));
}

Scope Scope::from_groups(NodeId n, std::vector<std::vector<NodeId>> groups) {
  Scope s;
  s.child_of_.assign(n, -1);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty()) throw UsageError("empty leaf group " + std::to_string(i));
    for (NodeId v : groups[i]) {
      if (v >= n) throw UsageError("leaf " + std::to_string(v) + " out of range");
      if (s.child_of_[v] != -1) throw UsageError("leaf " + std::to_string(v) + " in two groups");
      s.child_of_[v] = static_cast<std::int32_t>(i);
    }
  }
  s.groups_ = std::move(groups);
  return s;
}

double Scope::mean_degree(const DirectedGraph& g, std::size_t i) const {
  double sum = 0;
  for (NodeId v : groups_[i]) sum += g.out_degree(v);
  return sum / static_cast<double>(groups_[i].size());
}

namespace {

// FIFO frontier without duplicates.
class Frontier {
 public:
  explicit Frontier(NodeId n) : queued_(n, false) {}
  void push(NodeId v) {
    if (queued_[v]) return;
    queued_[v] = true;
    q_.push_back(v);
  }
  bool empty() const { return q_.empty(); }
  NodeId pop() {
    const NodeId v = q_.front();
    q_.pop_front();
    queued_[v] = false;
    return v;
  }

 private:
  std::vector<bool> queued_;
  std::deque<NodeId> q_;
};

ResidueState make_state(const DirectedGraph& g, const Scope& scope) {
  ResidueState st;
  st.estimates.assign(scope.size(), 0.0);
  st.residues.assign(g.node_count(), 0.0);
  st.reserve.assign(g.node_count(), 0.0);
  return st;
}

}  // namespace

ResidueState gfp(const DirectedGraph& g, const Scope& scope, std::size_t source, double r_max, double alpha,
                 std::optional<std::uint64_t> max_pushes) {
  if (!(r_max > 0)) throw UsageError("r_max must be positive");
  if (source >= scope.size()) throw UsageError("source child out of range");
  ResidueState st = make_state(g, scope);
  Frontier frontier(g.node_count());
  const auto src = scope.leaves(source);
  const double init = 1.0 / static_cast<double>(src.size());
  for (NodeId v : src) {
    st.residues[v] = g.out_degree(v) * init;
    if (st.residues[v] > g.out_degree(v) * r_max) frontier.push(v);
  }
  const std::uint64_t limit = max_pushes.value_or(UINT64_MAX);
  while (!frontier.empty() && st.stats.pushes < limit) {
    const NodeId v = frontier.pop();
    const double r = st.residues[v];
    const std::uint32_t d = g.out_degree(v);
    st.residues[v] = 0.0;
    st.reserve[v] += alpha * r;
    if (const auto c = scope.child_of(v); c >= 0) {
      st.estimates[c] += alpha * r / static_cast<double>(scope.leaves(c).size());
    }
    const double share = (1.0 - alpha) * r / d;
    for (NodeId u : g.out_neighbors(v)) {
      st.residues[u] += share;
      if (st.residues[u] > g.out_degree(u) * r_max) frontier.push(u);
    }
    ++st.stats.pushes;
    st.stats.edge_ops += d;
  }
  st.converged = frontier.empty();
  return st;
}

ResidueState gbp(const DirectedGraph& g, const Scope& scope, std::size_t target, double r_b_max, double alpha,
                 std::optional<std::uint64_t> max_pushes) {
  if (!(r_b_max > 0)) throw UsageError("r_b_max must be positive");
  if (target >= scope.size()) throw UsageError("target child out of range");
  ResidueState st = make_state(g, scope);
  Frontier frontier(g.node_count());
  const auto tgt = scope.leaves(target);
  const double init = 1.0 / static_cast<double>(tgt.size());
  for (NodeId v : tgt) {
    st.residues[v] = init;
    if (init > r_b_max) frontier.push(v);
  }
  const std::uint64_t limit = max_pushes.value_or(UINT64_MAX);
  while (!frontier.empty() && st.stats.pushes < limit) {
    const NodeId v = frontier.pop();
    const double r = st.residues[v];
    st.residues[v] = 0.0;
    st.reserve[v] += alpha * r;
    if (const auto c = scope.child_of(v); c >= 0) {
      st.estimates[c] += alpha * g.out_degree(v) * r / static_cast<double>(scope.leaves(c).size());
    }
    const auto in = g.in_neighbors(v);
    for (NodeId u : in) {
      st.residues[u] += (1.0 - alpha) * r / g.out_degree(u);
      if (st.residues[u] > r_b_max) frontier.push(u);
    }
    ++st.stats.pushes;
    st.stats.edge_ops += in.size();
  }
  st.converged = frontier.empty();
  return st;
}

namespace {

Eigen::VectorXd iterate(const DirectedGraph& g, double alpha, const Eigen::VectorXd& start, double tolerance,
                        std::uint64_t& iterations) {
  const NodeId n = g.node_count();
  const Eigen::VectorXd base = alpha * start;
  Eigen::VectorXd x = base;
  Eigen::VectorXd next(n);
  for (;;) {
    next = base;
    for (NodeId v = 0; v < n; ++v) {
      if (x[v] == 0.0) continue;
      const double share = (1.0 - alpha) * x[v] / g.out_degree(v);
      for (NodeId u : g.out_neighbors(v)) next[u] += share;
    }
    ++iterations;
    // For non-negative starts the remaining tail is (1-alpha)/alpha times
    // the last L1 change; it bounds both the sum and the per-entry error.
    const double tail = (next - x).lpNorm<1>() * (1.0 - alpha) / alpha;
    x.swap(next);
    if (tail < tolerance) return x;
  }
}

}  // namespace

Eigen::VectorXd power_iteration(const DirectedGraph& g, double alpha, const Eigen::VectorXd& start, double tolerance) {
  std::uint64_t it = 0;
  return iterate(g, alpha, start, tolerance, it);
}

Eigen::VectorXd ppr_single_source_pi(const DirectedGraph& g, const PprParams& params, NodeId source) {
  if (source >= g.node_count()) throw UsageError("source " + std::to_string(source) + " out of range");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(g.node_count());
  e[source] = 1.0;
  return power_iteration(g, params.alpha, e, params.pi_tolerance);
}

double exact_level_dppr(const DirectedGraph& g, const PprParams& params, std::span<const NodeId> a,
                        std::span<const NodeId> b) {
  if (a.empty() || b.empty()) throw UsageError("leaf sets must be non-empty");
  double sum = 0;
  for (NodeId s : a) {
    const auto pi = ppr_single_source_pi(g, params, s);
    double row = 0;
    for (NodeId t : b) row += pi[t];
    sum += row * g.out_degree(s);
  }
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

DprIndex compute_dpr(const DirectedGraph& g, const PprParams& params) {
  const NodeId n = g.node_count();
  Eigen::VectorXd start(n);
  const double m = static_cast<double>(g.edge_count());
  for (NodeId v = 0; v < n; ++v) start[v] = g.out_degree(v) / m;
  const auto tau = power_iteration(g, params.alpha, start, params.pi_tolerance);
  DprIndex dpr;
  dpr.tau.assign(tau.data(), tau.data() + n);
  dpr.tau_star = params.tau_threshold(n);
  return dpr;
}

void build_gbp_cache(const DirectedGraph& g, const PprParams& params, DprIndex& dpr) {
  const double r_b = params.epsilon * params.delta / g.max_out_degree();
  dpr.gbp_cache.clear();
  for (NodeId j = 0; j < g.node_count(); ++j) {
    if (!(dpr.tau[j] > dpr.tau_star)) continue;
    const auto scope = Scope::from_groups(g.node_count(), {{j}});
    const auto st = gbp(g, scope, 0, r_b, params.alpha);
    GbpCacheEntry entry;
    entry.r_b_max = r_b;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      if (st.reserve[v] != 0.0) entry.reserve.emplace_back(v, st.reserve[v]);
      if (st.residues[v] != 0.0) entry.residues.emplace_back(v, st.residues[v]);
    }
    dpr.gbp_cache.emplace(j, std::move(entry));
  }
}

void write_dpr(const DprIndex& dpr, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic("PVDPR1");
  w.u64(dpr.tau.size());
  w.f64(dpr.tau_star);
  for (double t : dpr.tau) w.f64(t);
  w.close();
}

DprIndex read_dpr(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic("PVDPR1");
  DprIndex dpr;
  const auto n = r.u64();
  dpr.tau_star = r.f64();
  dpr.tau.resize(n);
  for (auto& t : dpr.tau) t = r.f64();
  return dpr;
}

namespace {

void write_sparse(BinaryWriter& w, const std::vector<std::pair<NodeId, double>>& entries) {
  w.u64(entries.size());
  for (const auto& [v, x] : entries) {
    w.u32(v);
    w.f64(x);
  }
}

std::vector<std::pair<NodeId, double>> read_sparse(BinaryReader& r) {
  std::vector<std::pair<NodeId, double>> out(r.u64());
  for (auto& [v, x] : out) {
    v = r.u32();
    x = r.f64();
  }
  return out;
}

}  // namespace

void write_gbp_cache(const GbpCache& cache, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [target, entry] : cache) {
    BinaryWriter w(dir / (std::to_string(target) + ".bin"));
    w.magic("PVGBP1");
    w.u32(target);
    w.f64(entry.r_b_max);
    write_sparse(w, entry.reserve);
    write_sparse(w, entry.residues);
    w.close();
  }
}

GbpCache read_gbp_cache(const std::filesystem::path& dir) {
  GbpCache cache;
  if (!std::filesystem::is_directory(dir)) return cache;
  for (const auto& file : std::filesystem::directory_iterator(dir)) {
    if (file.path().extension() != ".bin") continue;
    BinaryReader r(file.path());
    r.expect_magic("PVGBP1");
    const NodeId target = r.u32();
    GbpCacheEntry entry;
    entry.r_b_max = r.f64();
    entry.reserve = read_sparse(r);
    entry.residues = read_sparse(r);
    cache.emplace(target, std::move(entry));
  }
  return cache;
}

double supernode_dpr(const DprIndex& dpr, std::span<const NodeId> leaves, bool use_max) {
  double acc = 0;
  for (NodeId v : leaves) acc = use_max ? std::max(acc, dpr.tau[v]) : acc + dpr.tau[v];
  return use_max ? acc : acc / static_cast<double>(leaves.size());
}

namespace {

void require_pairs(const Scope& scope) {
  if (scope.size() < 2) throw UsageError("need at least 2 children, got " + std::to_string(scope.size()));
}

// One GFP per child with a shared threshold; rows of the result.
DpprEstimate forward_all(const DirectedGraph& g, const Scope& scope, double r_max, double alpha, unsigned threads) {
  const std::size_t c = scope.size();
  std::vector<ResidueState> states(c);
  parallel_for(c, threads, [&](std::size_t i) { states[i] = gfp(g, scope, i, r_max, alpha); });
  DpprEstimate out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < c; ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(states[i].estimates.data(), static_cast<Eigen::Index>(c));
    out.counters.push += states[i].stats;
  }
  out.counters.gfp_runs = c;
  return out;
}

}  // namespace

DpprEstimate tau_push(const DirectedGraph& g, const Scope& scope, const DprIndex& dpr, const PprParams& params,
                      const EngineOptions& opts) {
  require_pairs(scope);
  const std::size_t c = scope.size();
  const double tau = params.tau_threshold(g.node_count());
  const double eps_delta = params.epsilon * params.delta;
  const double r_max = eps_delta / (static_cast<double>(g.edge_count()) * tau);
  DpprEstimate out = forward_all(g, scope, r_max, params.alpha, opts.threads);

  std::vector<double> mean_deg(c);
  for (std::size_t i = 0; i < c; ++i) mean_deg[i] = scope.mean_degree(g, i);

  std::vector<std::size_t> refine;
  for (std::size_t j = 0; j < c; ++j) {
    if (supernode_dpr(dpr, scope.leaves(j), opts.max_gating) > tau) refine.push_back(j);
  }

  struct Column {
    std::vector<double> values;
    PushStats stats;
    bool cached = false;
  };
  std::vector<Column> columns(refine.size());
  parallel_for(refine.size(), opts.threads, [&](std::size_t idx) {
    const std::size_t j = refine[idx];
    double worst = 0;
    for (std::size_t i = 0; i < c; ++i) {
      if (i != j) worst = std::max(worst, mean_deg[i]);
    }
    const double r_b_max = eps_delta / worst;
    auto& col = columns[idx];
    if (opts.cache && scope.leaves(j).size() == 1) {
      const auto it = opts.cache->find(scope.leaves(j)[0]);
      if (it != opts.cache->end() && it->second.r_b_max <= r_b_max) {
        col.values.assign(c, 0.0);
        for (const auto& [v, p] : it->second.reserve) {
          if (const auto i = scope.child_of(v); i >= 0) {
            col.values[i] += g.out_degree(v) * p / static_cast<double>(scope.leaves(i).size());
          }
        }
        col.cached = true;
        return;
      }
    }
    auto st = gbp(g, scope, j, r_b_max, params.alpha);
    col.values = std::move(st.estimates);
    col.stats = st.stats;
  });

  for (std::size_t idx = 0; idx < refine.size(); ++idx) {
    const auto j = static_cast<Eigen::Index>(refine[idx]);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(c); ++i) {
      if (i != j) out.values(i, j) = columns[idx].values[i];
    }
    if (columns[idx].cached) {
      ++out.counters.cache_hits;
    } else {
      ++out.counters.gbp_runs;
      out.counters.push += columns[idx].stats;
    }
  }
  return out;
}

DpprEstimate gfp_only(const DirectedGraph& g, const Scope& scope, const DprIndex& dpr, const PprParams& params,
                      const EngineOptions& opts) {
  require_pairs(scope);
  double tau = 0;
  for (std::size_t j = 0; j < scope.size(); ++j) tau = std::max(tau, supernode_dpr(dpr, scope.leaves(j), opts.max_gating));
  const double r_max = params.epsilon * params.delta / (static_cast<double>(g.edge_count()) * tau);
  return forward_all(g, scope, r_max, params.alpha, opts.threads);
}

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// splitmix64 stream keyed by (seed, source, walk).
class WalkRng {
 public:
  WalkRng(std::uint64_t seed, std::uint64_t source, std::uint64_t walk)
      : state_(mix64(mix64(mix64(seed + kGolden) ^ (source + kGolden)) ^ (walk + kGolden))) {}
  double unit() {
    state_ += kGolden;
    return static_cast<double>(mix64(state_) >> 11) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

}  // namespace

DpprEstimate gfra(const DirectedGraph& g, const Scope& scope, const PprParams& params, std::uint64_t seed,
                  const EngineOptions& opts) {
  require_pairs(scope);
  const std::size_t c = scope.size();
  const double eps = params.epsilon;
  const double p_f = params.failure_probability(g.node_count());
  const double W = (2.0 + 2.0 * eps / 3.0) * std::log(1.0 / p_f) / (eps * eps * params.delta);
  double gamma = static_cast<double>(g.node_count());
  double deg_sum = 0;
  for (std::size_t i = 0; i < c; ++i) {
    gamma = std::min(gamma, static_cast<double>(scope.leaves(i).size()));
    deg_sum += scope.mean_degree(g, i);
  }
  const double r_max = std::sqrt(gamma * deg_sum / (static_cast<double>(g.edge_count()) * W));
  const double alpha = params.alpha;

  struct Row {
    std::vector<double> values;
    PushStats stats;
    std::uint64_t walks = 0;
  };
  std::vector<Row> rows(c);
  parallel_for(c, opts.threads, [&](std::size_t i) {
    auto st = gfp(g, scope, i, r_max, alpha);
    auto& row = rows[i];
    row.stats = st.stats;
    row.values = std::move(st.estimates);

    std::vector<NodeId> nodes;
    std::vector<double> cumulative;
    double r_sum = 0;
    for (NodeId v = 0; v < g.node_count(); ++v) {
      if (st.residues[v] > 0) {
        r_sum += st.residues[v];
        nodes.push_back(v);
        cumulative.push_back(r_sum);
      }
    }
    if (r_sum <= 0) return;
    const auto omega = static_cast<std::uint64_t>(std::ceil(r_sum / gamma * W));
    const double weight = r_sum / static_cast<double>(omega);
    for (std::uint64_t w = 0; w < omega; ++w) {
      WalkRng rng(seed, i, w);
      const double pick = rng.unit() * r_sum;
      auto pos = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
      NodeId v = nodes[std::min(pos, nodes.size() - 1)];
      while (rng.unit() >= alpha) {
        const auto out = g.out_neighbors(v);
        v = out[std::min<std::size_t>(static_cast<std::size_t>(rng.unit() * out.size()), out.size() - 1)];
      }
      if (const auto j = scope.child_of(v); j >= 0) {
        row.values[j] += weight / static_cast<double>(scope.leaves(j).size());
      }
    }
    row.walks = omega;
  });

  DpprEstimate out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
  for (std::size_t i = 0; i < c; ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(rows[i].values.data(), static_cast<Eigen::Index>(c));
    out.counters.push += rows[i].stats;
    out.counters.walks += rows[i].walks;
  }
  out.counters.gfp_runs = c;
  return out;
}

DpprEstimate pi_oracle(const DirectedGraph& g, const Scope& scope, const PprParams& params, const EngineOptions& opts) {
  require_pairs(scope);
  const std::size_t c = scope.size();
  const NodeId n = g.node_count();
  const double alpha = params.alpha;
  std::vector<NodeId> sources;
  std::vector<std::size_t> source_child;
  for (std::size_t i = 0; i < c; ++i) {
    for (NodeId v : scope.leaves(i)) {
      sources.push_back(v);
      source_child.push_back(i);
    }
  }

  // Sources are iterated in fixed-width blocks; each column is an
  // independent single-source power iteration. Unused columns stay zero.
  constexpr int kWidth = 16;
  using Block = Eigen::Matrix<double, Eigen::Dynamic, kWidth, Eigen::RowMajor>;
  const std::size_t blocks = (sources.size() + kWidth - 1) / kWidth;
  std::vector<Eigen::MatrixXd> partial(blocks);
  std::vector<std::uint64_t> iterations(blocks, 0);
  parallel_for(blocks, opts.threads, [&](std::size_t b) {
    const std::size_t begin = b * kWidth;
    const auto w = static_cast<Eigen::Index>(std::min<std::size_t>(kWidth, sources.size() - begin));
    Block x = Block::Zero(n, kWidth);
    Block next(n, kWidth);
    std::vector<char> live(n, 0);
    for (Eigen::Index col = 0; col < w; ++col) {
      x(sources[begin + col], col) = alpha;
      live[sources[begin + col]] = 1;
    }
    for (;;) {
      next.setZero();
      for (Eigen::Index col = 0; col < w; ++col) next(sources[begin + col], col) = alpha;
      std::vector<char> reached = live;
      for (NodeId v = 0; v < n; ++v) {
        if (!live[v]) continue;
        const Eigen::Matrix<double, 1, kWidth> row = x.row(v) * ((1.0 - alpha) / g.out_degree(v));
        for (NodeId u : g.out_neighbors(v)) {
          next.row(u) += row;
          reached[u] = 1;
        }
      }
      live.swap(reached);
      ++iterations[b];
      const double tail = (next - x).cwiseAbs().colwise().sum().maxCoeff() * (1.0 - alpha) / alpha;
      x.swap(next);
      if (tail < params.pi_tolerance) break;
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
    for (std::size_t j = 0; j < c; ++j) {
      for (NodeId t : scope.leaves(j)) {
        for (Eigen::Index col = 0; col < w; ++col) {
          const NodeId s = sources[begin + col];
          m(static_cast<Eigen::Index>(source_child[begin + col]), static_cast<Eigen::Index>(j)) +=
              g.out_degree(s) * x(t, col);
        }
      }
    }
    partial[b] = std::move(m);
  });

  DpprEstimate out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
  for (std::size_t b = 0; b < blocks; ++b) {
    out.values += partial[b];
    out.counters.pi_iterations += iterations[b] * std::min<std::size_t>(kWidth, sources.size() - b * kWidth);
  }
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) /=
          static_cast<double>(scope.leaves(i).size()) * static_cast<double>(scope.leaves(j).size());
    }
  }
  return out;
}

}  // namespace pprviz
