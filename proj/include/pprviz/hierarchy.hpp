#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pprviz/graph.hpp"

namespace pprviz {

/// Global supernode id. Leaves occupy [0, n); level-1 supernodes follow,
/// then level 2 and so on; the virtual root has the largest id.
using SupernodeId = std::uint32_t;

/// Tree of bounded fanout over the leaf nodes of a graph.
///
/// Level 0 is the identity partition over leaves. `parents()[l][i]` is the
/// index, within level l+1, of the parent of the i-th level-l node. The top
/// level always holds a single virtual root.
class SupergraphHierarchy {
 public:
  SupergraphHierarchy() = default;

  /// Validates and indexes a parent table. Throws ParseError if a level
  /// references an out-of-range parent, leaves a node childless, exceeds
  /// fanout k, or does not end in a single root.
  static SupergraphHierarchy from_parents(NodeId leaf_count, std::uint32_t k,
                                          std::vector<std::vector<std::uint32_t>> parents);

  std::uint32_t fanout_bound() const { return k_; }
  std::size_t level_count() const { return level_offset_.size() - 1; }
  std::size_t level_size(std::size_t level) const { return level_offset_[level + 1] - level_offset_[level]; }
  std::size_t total_count() const { return level_offset_.back(); }
  NodeId leaf_count() const { return static_cast<NodeId>(level_size(0)); }

  SupernodeId root() const { return static_cast<SupernodeId>(total_count() - 1); }
  SupernodeId id_of(std::size_t level, std::uint32_t index) const {
    return static_cast<SupernodeId>(level_offset_[level] + index);
  }
  bool contains(SupernodeId id) const { return id < total_count(); }
  bool is_leaf(SupernodeId id) const { return id < leaf_count(); }
  std::size_t level_of(SupernodeId id) const;
  std::uint32_t index_in_level(SupernodeId id) const {
    return static_cast<std::uint32_t>(id - level_offset_[level_of(id)]);
  }

  std::optional<SupernodeId> parent(SupernodeId id) const;
  std::span<const SupernodeId> children(SupernodeId id) const {
    return {child_ids_.data() + child_offset_[id], child_ids_.data() + child_offset_[id + 1]};
  }
  /// F(V): the leaf nodes below `id`, as a contiguous slice of leaf_order().
  std::span<const NodeId> leaves(SupernodeId id) const {
    return {leaf_order_.data() + leaf_begin_[id], leaf_order_.data() + leaf_end_[id]};
  }
  std::size_t leaf_count_of(SupernodeId id) const { return leaf_end_[id] - leaf_begin_[id]; }

  /// The ancestor of `leaf` at `level` (level 0 returns the leaf itself).
  SupernodeId ancestor(NodeId leaf, std::size_t level) const {
    return level == 0 ? leaf : id_of(level, ancestor_index_[level - 1][leaf]);
  }

  const std::vector<std::vector<std::uint32_t>>& parents() const { return parents_; }
  std::span<const NodeId> leaf_order() const { return leaf_order_; }

  friend bool operator==(const SupergraphHierarchy& a, const SupergraphHierarchy& b) {
    return a.k_ == b.k_ && a.parents_ == b.parents_ && a.level_offset_ == b.level_offset_;
  }

 private:
  std::uint32_t k_ = 0;
  std::vector<std::vector<std::uint32_t>> parents_;
  std::vector<std::size_t> level_offset_{0};
  std::vector<std::size_t> child_offset_;
  std::vector<SupernodeId> child_ids_;
  std::vector<NodeId> leaf_order_;
  std::vector<std::size_t> leaf_begin_;
  std::vector<std::size_t> leaf_end_;
  std::vector<std::vector<std::uint32_t>> ancestor_index_;  // [level-1][leaf]
};

/// Counters entering the modularity change of moving `mover` into `target`,
/// over the undirected view. Counts use the adjacency-sum convention: an
/// internal edge contributes 2 to w(T), a crossing edge 2 to w_cr, and a
/// self-loop 2 to the degree of its node; 2m is then the total degree.
struct ModularityAccumulators {
  double target_internal = 0;  // w(T)
  double target_incident = 0;  // w_in(T)
  double mover_incident = 0;   // w_in(V_i)
  double crossing = 0;         // w_cr(V_i, T)
};

/// q(V_i, T); `m_undirected` counts undirected edges with self-loops once.
double modularity_gain(const ModularityAccumulators& acc, double m_undirected);

/// Size-constrained multilevel Louvain clustering over the undirected view
/// of `g`. Deterministic: units are visited in ascending id and gain ties
/// go to the lowest cluster id. Throws UsageError for k < 2.
SupergraphHierarchy build_hierarchy(const DirectedGraph& g, std::uint32_t k);

/// Directed pairs between distinct children of `parent` induced by leaf
/// edges, deduplicated and sorted. Throws UsageError if `parent` is a leaf.
std::vector<std::pair<SupernodeId, SupernodeId>> super_edges_at(const SupergraphHierarchy& h,
                                                                 const DirectedGraph& g, SupernodeId parent);

/// JSON index: {"k", "levels", "parent", "order", "remap"}.
void save_hierarchy(const SupergraphHierarchy& h, std::span<const std::uint64_t> original_ids,
                    const std::filesystem::path& path);
SupergraphHierarchy load_hierarchy(const std::filesystem::path& path, std::vector<std::uint64_t>* original_ids = nullptr);

}  // namespace pprviz
