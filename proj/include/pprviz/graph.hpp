#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace pprviz {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

enum class Direction { out, in };

/// Unweighted directed graph in CSR form, with both out- and in-adjacency.
///
/// Construction collapses duplicate edges and gives every node without
/// out-edges a self-loop, so d(v) >= 1 for all v and the random walk
/// transition matrix is row-stochastic. Immutable afterwards.
class DirectedGraph {
 public:
  DirectedGraph() = default;

  /// Builds a graph over nodes [0, n). Edges may contain duplicates and
  /// arrive in any order; adjacency lists come out sorted ascending.
  static DirectedGraph from_edges(NodeId n, std::vector<Edge> edges);

  NodeId node_count() const { return n_; }
  /// Number of directed edges, i.e. the sum of out-degrees.
  std::uint64_t edge_count() const { return out_targets_.size(); }

  std::span<const NodeId> out_neighbors(NodeId v) const {
    return {out_targets_.data() + out_offsets_[v], out_targets_.data() + out_offsets_[v + 1]};
  }
  std::span<const NodeId> in_neighbors(NodeId v) const {
    return {in_sources_.data() + in_offsets_[v], in_sources_.data() + in_offsets_[v + 1]};
  }
  /// Range-checked adjacency access; throws std::out_of_range.
  std::span<const NodeId> neighbors(NodeId v, Direction dir) const;

  std::uint32_t out_degree(NodeId v) const {
    return static_cast<std::uint32_t>(out_offsets_[v + 1] - out_offsets_[v]);
  }
  std::uint32_t max_out_degree() const;

  /// All directed edges in (src, dst) lexicographic order.
  std::vector<Edge> edges() const;

  std::span<const std::uint64_t> out_offsets() const { return out_offsets_; }
  std::span<const NodeId> out_targets() const { return out_targets_; }
  std::span<const std::uint64_t> in_offsets() const { return in_offsets_; }
  std::span<const NodeId> in_sources() const { return in_sources_; }

  friend bool operator==(const DirectedGraph&, const DirectedGraph&) = default;

 private:
  NodeId n_ = 0;
  std::vector<std::uint64_t> out_offsets_{0};
  std::vector<NodeId> out_targets_;
  std::vector<std::uint64_t> in_offsets_{0};
  std::vector<NodeId> in_sources_;
};

/// A loaded graph plus the dense-ID -> original-ID table.
struct LoadedGraph {
  DirectedGraph graph;
  std::vector<std::uint64_t> original_ids;
};

/// Parses "src dst" lines ('#' comments, LF or CRLF). Original IDs are
/// remapped to [0, n) in ascending order. Throws ParseError with the line
/// number on malformed input and on an empty graph.
LoadedGraph parse_edge_list(std::istream& in, bool symmetrize);
LoadedGraph load_edge_list(const std::filesystem::path& path, bool symmetrize);

void write_edge_list(const DirectedGraph& g, std::ostream& out);

/// Binary cache: "PVGZ1", u64 n, u64 m, then out offsets/targets and in
/// offsets/sources (offsets u64, node ids u32), all little-endian.
void write_binary_graph(const DirectedGraph& g, const std::filesystem::path& path);
DirectedGraph read_binary_graph(const std::filesystem::path& path);

}  // namespace pprviz
