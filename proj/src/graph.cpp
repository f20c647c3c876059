#include "pprviz/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "binary_io.hpp"
#include "pprviz/errors.hpp"

namespace pprviz {

namespace {

void build_csr(NodeId n, const std::vector<Edge>& sorted_edges, std::vector<std::uint64_t>& offsets,
               std::vector<NodeId>& targets) {
  offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  targets.resize(sorted_edges.size());
  for (const auto& [src, dst] : sorted_edges) ++offsets[src + 1];
  for (NodeId v = 0; v < n; ++v) offsets[v + 1] += offsets[v];
  for (std::size_t i = 0; i < sorted_edges.size(); ++i) targets[i] = sorted_edges[i].second;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_u64(std::string_view token, std::uint64_t& out) {
  if (token.empty()) return false;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

DirectedGraph DirectedGraph::from_edges(NodeId n, std::vector<Edge> edges) {
  if (n == 0) throw UsageError("graph must have at least one node");
  for (const auto& [src, dst] : edges) {
    if (src >= n || dst >= n) throw UsageError("edge endpoint out of range");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  // dangling fix: self-loop on every node without out-edges
  std::vector<bool> has_out(n, false);
  for (const auto& e : edges) has_out[e.first] = true;
  bool added = false;
  for (NodeId v = 0; v < n; ++v) {
    if (!has_out[v]) {
      edges.emplace_back(v, v);
      added = true;
    }
  }
  if (added) std::sort(edges.begin(), edges.end());

  DirectedGraph g;
  g.n_ = n;
  build_csr(n, edges, g.out_offsets_, g.out_targets_);

  std::vector<Edge> reversed;
  reversed.reserve(edges.size());
  for (const auto& [src, dst] : edges) reversed.emplace_back(dst, src);
  std::sort(reversed.begin(), reversed.end());
  build_csr(n, reversed, g.in_offsets_, g.in_sources_);
  return g;
}

std::span<const NodeId> DirectedGraph::neighbors(NodeId v, Direction dir) const {
  if (v >= n_) throw std::out_of_range("node id " + std::to_string(v) + " out of range");
  return dir == Direction::out ? out_neighbors(v) : in_neighbors(v);
}

std::uint32_t DirectedGraph::max_out_degree() const {
  std::uint32_t best = 0;
  for (NodeId v = 0; v < n_; ++v) best = std::max(best, out_degree(v));
  return best;
}

std::vector<Edge> DirectedGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(out_targets_.size());
  for (NodeId v = 0; v < n_; ++v) {
    for (NodeId w : out_neighbors(v)) out.emplace_back(v, w);
  }
  return out;
}

LoadedGraph parse_edge_list(std::istream& in, bool symmetrize) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto split = body.find_first_of(" \t");
    if (split == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected \"src dst\"");
    }
    const auto first = body.substr(0, split);
    const auto second = trim(body.substr(split));
    std::uint64_t src = 0;
    std::uint64_t dst = 0;
    if (!parse_u64(first, src) || !parse_u64(second, dst)) {
      throw ParseError("line " + std::to_string(line_no) + ": expected two non-negative integers");
    }
    raw.emplace_back(src, dst);
  }
  if (raw.empty()) throw ParseError("empty graph");

  std::vector<std::uint64_t> ids;
  ids.reserve(raw.size() * 2);
  for (const auto& [s, d] : raw) {
    ids.push_back(s);
    ids.push_back(d);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() > std::numeric_limits<NodeId>::max()) throw ParseError("too many nodes");

  std::unordered_map<std::uint64_t, NodeId> dense;
  dense.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) dense.emplace(ids[i], static_cast<NodeId>(i));

  std::vector<Edge> edges;
  edges.reserve(raw.size() * (symmetrize ? 2 : 1));
  for (const auto& [s, d] : raw) {
    const NodeId a = dense.at(s);
    const NodeId b = dense.at(d);
    edges.emplace_back(a, b);
    if (symmetrize) edges.emplace_back(b, a);
  }
  return {DirectedGraph::from_edges(static_cast<NodeId>(ids.size()), std::move(edges)), std::move(ids)};
}

LoadedGraph load_edge_list(const std::filesystem::path& path, bool symmetrize) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list: " + path.string());
  try {
    return parse_edge_list(in, symmetrize);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_edge_list(const DirectedGraph& g, std::ostream& out) {
  for (const auto& [src, dst] : g.edges()) out << src << ' ' << dst << '\n';
}

namespace {
constexpr char kGraphMagic[] = "PVGZ1";
}

void write_binary_graph(const DirectedGraph& g, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic(kGraphMagic);
  w.u64(g.node_count());
  w.u64(g.edge_count());
  for (auto o : g.out_offsets()) w.u64(o);
  for (auto t : g.out_targets()) w.u32(t);
  for (auto o : g.in_offsets()) w.u64(o);
  for (auto s : g.in_sources()) w.u32(s);
  w.close();
}

DirectedGraph read_binary_graph(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kGraphMagic);
  const auto n = r.u64();
  const auto m = r.u64();
  if (n == 0 || n > std::numeric_limits<NodeId>::max()) throw ParseError(path.string() + ": bad node count");
  std::vector<std::uint64_t> out_offsets(n + 1);
  for (auto& o : out_offsets) o = r.u64();
  std::vector<NodeId> out_targets(m);
  for (auto& t : out_targets) t = r.u32();
  std::vector<std::uint64_t> in_offsets(n + 1);
  for (auto& o : in_offsets) o = r.u64();
  std::vector<NodeId> in_sources(m);
  for (auto& s : in_sources) s = r.u32();

  if (out_offsets.back() != m) throw ParseError(path.string() + ": offset table does not match edge count");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (NodeId v = 0; v < n; ++v) {
    for (auto i = out_offsets[v]; i < out_offsets[v + 1]; ++i) edges.emplace_back(v, out_targets.at(i));
  }
  auto g = DirectedGraph::from_edges(static_cast<NodeId>(n), std::move(edges));
  if (g.edge_count() != m || !std::equal(in_sources.begin(), in_sources.end(), g.in_sources().begin())) {
    throw ParseError(path.string() + ": inconsistent adjacency");
  }
  return g;
}

}  // namespace pprviz
