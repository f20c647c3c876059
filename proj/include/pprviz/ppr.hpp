#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pprviz/graph.hpp"
#include "pprviz/hierarchy.hpp"

namespace pprviz {

struct PprParams {
  double alpha = 0.2;
  double epsilon = 0.6321205588285577;  // 1 - 1/e
  double delta = 0.02;                  // 1 / (10 k)
  std::uint32_t k = 5;
  double p_f = 0.0;  // 0 means 1/n
  double pi_tolerance = 1e-9;

  /// Defaults for fanout k: delta = 1/(10k).
  static PprParams for_fanout(std::uint32_t k);

  /// Throws UsageError when a field is out of range.
  void validate() const;
  double failure_probability(NodeId n) const { return p_f > 0 ? p_f : 1.0 / n; }
  /// tau = 1/sqrt(k n), the DPR gate of Tau-Push.
  double tau_threshold(NodeId n) const;
};

/// A set of disjoint leaf groups (the children of one supernode, or
/// singletons in single-level mode), indexed 0..size()-1.
class Scope {
 public:
  static Scope of(const SupergraphHierarchy& h, SupernodeId parent);
  /// Throws UsageError on overlapping or out-of-range groups.
  static Scope from_groups(NodeId n, std::vector<std::vector<NodeId>> groups);

  std::size_t size() const { return groups_.size(); }
  std::span<const NodeId> leaves(std::size_t i) const { return groups_[i]; }
  /// Index of the group containing v, or -1.
  std::int32_t child_of(NodeId v) const { return child_of_[v]; }
  /// d(V_i) / |F(V_i)|.
  double mean_degree(const DirectedGraph& g, std::size_t i) const;

 private:
  std::vector<std::vector<NodeId>> groups_;
  std::vector<std::int32_t> child_of_;
};

struct PushStats {
  std::uint64_t pushes = 0;
  std::uint64_t edge_ops = 0;

  PushStats& operator+=(const PushStats& o) {
    pushes += o.pushes;
    edge_ops += o.edge_ops;
    return *this;
  }
};

/// State of one grouped push. `estimates[j]` is the aggregated level DPPR
/// estimate toward (GFP) or from (GBP) child j. `reserve` is the
/// un-aggregated settled mass per leaf: for GFP the forward reserve, for
/// GBP the backward estimate of pi(v, F_target)/|F_target| without d(v).
struct ResidueState {
  std::vector<double> estimates;
  std::vector<double> residues;
  std::vector<double> reserve;
  PushStats stats;
  bool converged = false;
};

/// Grouped forward push from child `source`. Runs until no leaf has
/// r(v) > d(v) r_max, or until `max_pushes` pushes were done.
ResidueState gfp(const DirectedGraph& g, const Scope& scope, std::size_t source, double r_max, double alpha,
                 std::optional<std::uint64_t> max_pushes = std::nullopt);

/// Grouped backward push toward child `target`; threshold r(v) > r_b_max.
ResidueState gbp(const DirectedGraph& g, const Scope& scope, std::size_t target, double r_b_max, double alpha,
                 std::optional<std::uint64_t> max_pushes = std::nullopt);

/// Power iteration x <- x0 + (1-alpha) x P from x0 = alpha * start, until
/// the bound on the untruncated tail drops below `tolerance` (so every
/// entry and the total are within it). Linear in `start`; start >= 0.
Eigen::VectorXd power_iteration(const DirectedGraph& g, double alpha, const Eigen::VectorXd& start, double tolerance);

/// pi(source, .) by power iteration.
Eigen::VectorXd ppr_single_source_pi(const DirectedGraph& g, const PprParams& params, NodeId source);

/// Level DPPR between two leaf sets from per-source power iteration.
double exact_level_dppr(const DirectedGraph& g, const PprParams& params, std::span<const NodeId> a,
                        std::span<const NodeId> b);

/// Backward push states persisted for high-DPR leaves. Only the sparse
/// reserve is needed at query time; residues are kept for inspection.
struct GbpCacheEntry {
  double r_b_max = 0;
  std::vector<std::pair<NodeId, double>> reserve;
  std::vector<std::pair<NodeId, double>> residues;
};
using GbpCache = std::map<NodeId, GbpCacheEntry>;

struct DprIndex {
  std::vector<double> tau;
  double tau_star = 0;
  GbpCache gbp_cache;
};

/// Leaf DPR from one power iteration started at d/m.
DprIndex compute_dpr(const DirectedGraph& g, const PprParams& params);

/// Fills dpr.gbp_cache with GBP states for leaves whose DPR exceeds
/// tau_star, at r_b = eps*delta / max out-degree (tight enough for any scope).
void build_gbp_cache(const DirectedGraph& g, const PprParams& params, DprIndex& dpr);

/// "PVDPR1", u64 n, f64 tau_star, n x f64.
void write_dpr(const DprIndex& dpr, const std::filesystem::path& path);
DprIndex read_dpr(const std::filesystem::path& path);
/// One "PVGBP1" file per cached target under `dir`.
void write_gbp_cache(const GbpCache& cache, const std::filesystem::path& dir);
GbpCache read_gbp_cache(const std::filesystem::path& dir);

/// Mean (default) or max of leaf DPR over F(V_j).
double supernode_dpr(const DprIndex& dpr, std::span<const NodeId> leaves, bool use_max = false);

struct EngineCounters {
  std::uint64_t gfp_runs = 0;
  std::uint64_t gbp_runs = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t walks = 0;
  std::uint64_t pi_iterations = 0;
  PushStats push;
};

/// Level DPPR estimates over all ordered child pairs; row = source.
struct DpprEstimate {
  Eigen::MatrixXd values;
  EngineCounters counters;
};

struct EngineOptions {
  bool max_gating = false;
  unsigned threads = 1;
  const GbpCache* cache = nullptr;
};

/// GFP from every child, then GBP for children whose DPR exceeds tau,
/// overwriting that column off the diagonal. Throws UsageError for
/// fewer than 2 children.
DpprEstimate tau_push(const DirectedGraph& g, const Scope& scope, const DprIndex& dpr, const PprParams& params,
                      const EngineOptions& opts = {});

/// GFP only, with tau raised to the largest child DPR.
DpprEstimate gfp_only(const DirectedGraph& g, const Scope& scope, const DprIndex& dpr, const PprParams& params,
                      const EngineOptions& opts = {});

/// GFP followed by residue-weighted random walks; deterministic per seed.
DpprEstimate gfra(const DirectedGraph& g, const Scope& scope, const PprParams& params, std::uint64_t seed,
                  const EngineOptions& opts = {});

/// Near-exact reference: one power iteration per leaf of every child,
/// so the cost grows with |F(S)| m. Counts single-source sweeps.
DpprEstimate pi_oracle(const DirectedGraph& g, const Scope& scope, const PprParams& params,
                       const EngineOptions& opts = {});

}  // namespace pprviz
