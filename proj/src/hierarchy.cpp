#include "pprviz/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "pprviz/errors.hpp"

namespace pprviz {

namespace {

constexpr int kMaxSweeps = 20;

/// Weighted undirected graph over the units of one level, in the
/// adjacency-sum convention (see ModularityAccumulators).
struct LevelGraph {
  std::size_t count = 0;
  std::vector<double> self;    // A_uu
  std::vector<double> degree;  // sum_v A_uv, self included
  std::vector<std::size_t> offset;
  std::vector<std::uint32_t> nbr;  // v != u
  std::vector<double> weight;      // A_uv

  std::size_t begin(std::size_t u) const { return offset[u]; }
  std::size_t end(std::size_t u) const { return offset[u + 1]; }
};

LevelGraph leaf_level(const DirectedGraph& g, double& m_undirected) {
  const NodeId n = g.node_count();
  std::vector<Edge> pairs;
  LevelGraph lg;
  lg.count = n;
  lg.self.assign(n, 0.0);
  std::size_t loops = 0;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.out_neighbors(u)) {
      if (u == v) {
        lg.self[u] += 2.0;
        ++loops;
      } else {
        pairs.emplace_back(std::min(u, v), std::max(u, v));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  m_undirected = static_cast<double>(pairs.size() + loops);

  std::vector<Edge> both;
  both.reserve(pairs.size() * 2);
  for (const auto& [a, b] : pairs) {
    both.emplace_back(a, b);
    both.emplace_back(b, a);
  }
  std::sort(both.begin(), both.end());
  lg.offset.assign(n + 1, 0);
  for (const auto& e : both) ++lg.offset[e.first + 1];
  for (NodeId u = 0; u < n; ++u) lg.offset[u + 1] += lg.offset[u];
  lg.nbr.reserve(both.size());
  for (const auto& e : both) lg.nbr.push_back(e.second);
  lg.weight.assign(both.size(), 1.0);
  lg.degree = lg.self;
  for (NodeId u = 0; u < n; ++u) lg.degree[u] += static_cast<double>(lg.end(u) - lg.begin(u));
  return lg;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<std::uint32_t>& assign, std::size_t new_count) {
  LevelGraph out;
  out.count = new_count;
  out.self.assign(new_count, 0.0);
  out.degree.assign(new_count, 0.0);
  std::vector<std::vector<std::uint32_t>> members(new_count);
  for (std::uint32_t u = 0; u < lg.count; ++u) members[assign[u]].push_back(u);

  std::vector<double> acc(new_count, 0.0);
  std::vector<std::uint32_t> touched;
  out.offset.assign(new_count + 1, 0);
  for (std::uint32_t c = 0; c < new_count; ++c) {
    for (std::uint32_t u : members[c]) {
      out.self[c] += lg.self[u];
      out.degree[c] += lg.degree[u];
      for (auto i = lg.begin(u); i < lg.end(u); ++i) {
        const auto d = assign[lg.nbr[i]];
        if (d == c) {
          out.self[c] += lg.weight[i];
          continue;
        }
        if (acc[d] == 0.0) touched.push_back(d);
        acc[d] += lg.weight[i];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto d : touched) {
      out.nbr.push_back(d);
      out.weight.push_back(acc[d]);
      acc[d] = 0.0;
    }
    touched.clear();
    out.offset[c + 1] = out.nbr.size();
  }
  return out;
}

/// Sparse accumulator keyed by cluster id; `keys()` come back ascending.
class LinkScratch {
 public:
  explicit LinkScratch(std::size_t n) : value_(n, 0.0), seen_(n, false) {}
  void add(std::uint32_t c, double w) {
    if (!seen_[c]) {
      seen_[c] = true;
      keys_.push_back(c);
    }
    value_[c] += w;
  }
  double operator[](std::uint32_t c) const { return value_[c]; }
  const std::vector<std::uint32_t>& sorted_keys() {
    std::sort(keys_.begin(), keys_.end());
    return keys_;
  }
  void clear() {
    for (auto c : keys_) {
      value_[c] = 0.0;
      seen_[c] = false;
    }
    keys_.clear();
  }

 private:
  std::vector<double> value_;
  std::vector<bool> seen_;
  std::vector<std::uint32_t> keys_;
};

/// One Louvain+ level: local moving of units, then merging of whole
/// clusters, then packing of clusters that have no neighbours left.
/// Returns the dense parent index of each unit.
std::vector<std::uint32_t> cluster_level(const LevelGraph& lg, std::uint32_t k, double m_undirected,
                                         std::size_t& new_count) {
  const std::size_t count = lg.count;
  std::vector<std::uint32_t> cluster(count);
  std::iota(cluster.begin(), cluster.end(), 0u);
  std::vector<double> total = lg.degree;
  std::vector<std::uint32_t> size(count, 1);
  LinkScratch link(count);

  // w(T) cancels in q(V_i, T), so it is not tracked here.
  auto gain = [&](double crossing, double target_total, double mover_total) {
    return modularity_gain({0.0, target_total, mover_total, crossing}, m_undirected);
  };

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool moved = false;
    for (std::uint32_t u = 0; u < count; ++u) {
      const auto home = cluster[u];
      for (auto i = lg.begin(u); i < lg.end(u); ++i) link.add(cluster[lg.nbr[i]], lg.weight[i]);
      total[home] -= lg.degree[u];
      size[home] -= 1;

      const auto& candidates = link.sorted_keys();
      auto target = home;
      if (candidates.size() == 1 && candidates[0] != home && size[candidates[0]] + 1 <= k) {
        target = candidates[0];  // sole neighbour
      } else {
        double best = gain(2.0 * link[home], total[home], lg.degree[u]);
        for (auto c : candidates) {
          if (c == home || size[c] + 1 > k) continue;
          const double g = gain(2.0 * link[c], total[c], lg.degree[u]);
          if (g > best) {
            best = g;
            target = c;
          }
        }
      }
      total[target] += lg.degree[u];
      size[target] += 1;
      cluster[u] = target;
      moved = moved || target != home;
      link.clear();
    }
    if (!moved) break;
  }

  std::vector<std::vector<std::uint32_t>> members(count);
  for (std::uint32_t u = 0; u < count; ++u) members[cluster[u]].push_back(u);

  // Merge whole clusters S -> T. Q(S,T) is the sum over members V_i of
  // q(V_i, T); crossing and incident counts are additive, so it is
  // evaluated from the cluster totals.
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool merged = false;
    for (std::uint32_t s = 0; s < count; ++s) {
      if (members[s].empty()) continue;
      for (auto u : members[s]) {
        for (auto i = lg.begin(u); i < lg.end(u); ++i) {
          const auto c = cluster[lg.nbr[i]];
          if (c != s) link.add(c, lg.weight[i]);
        }
      }
      double best = 0.0;
      std::uint32_t target = s;
      for (auto c : link.sorted_keys()) {
        if (size[s] + size[c] > k) continue;
        const double g = gain(2.0 * link[c], total[c], total[s]);
        if (g > best) {
          best = g;
          target = c;
        }
      }
      link.clear();
      if (target == s) continue;
      for (auto u : members[s]) cluster[u] = target;
      members[target].insert(members[target].end(), members[s].begin(), members[s].end());
      members[s].clear();
      total[target] += total[s];
      size[target] += size[s];
      total[s] = 0.0;
      size[s] = 0;
      merged = true;
    }
    if (!merged) break;
  }

  std::vector<std::uint32_t> alive;
  for (std::uint32_t c = 0; c < count; ++c) {
    if (!members[c].empty()) alive.push_back(c);
  }

  // Pack clusters into shared bins of total size <= k, in ascending id.
  auto pack = [&](const std::vector<std::uint32_t>& group) {
    std::uint32_t bin = group.empty() ? 0 : group.front();
    for (auto c : group) {
      if (c == bin) continue;
      if (size[bin] + size[c] <= k) {
        for (auto u : members[c]) cluster[u] = bin;
        members[bin].insert(members[bin].end(), members[c].begin(), members[c].end());
        members[c].clear();
        size[bin] += size[c];
        size[c] = 0;
      } else {
        bin = c;
      }
    }
  };

  std::vector<std::uint32_t> isolated;
  for (auto c : alive) {
    bool has_neighbor = false;
    for (auto u : members[c]) {
      for (auto i = lg.begin(u); i < lg.end(u) && !has_neighbor; ++i) has_neighbor = cluster[lg.nbr[i]] != c;
      if (has_neighbor) break;
    }
    if (!has_neighbor) isolated.push_back(c);
  }
  pack(isolated);

  alive.erase(std::remove_if(alive.begin(), alive.end(), [&](auto c) { return members[c].empty(); }), alive.end());
  if (alive.size() == count) pack(alive);  // no progress at all: fall back to packing by id

  std::vector<std::uint32_t> dense(count, 0);
  new_count = 0;
  for (std::uint32_t c = 0; c < count; ++c) {
    if (!members[c].empty()) dense[c] = static_cast<std::uint32_t>(new_count++);
  }
  std::vector<std::uint32_t> assign(count);
  for (std::uint32_t u = 0; u < count; ++u) assign[u] = dense[cluster[u]];
  return assign;
}

}  // namespace

double modularity_gain(const ModularityAccumulators& acc, double m_undirected) {
  const double two_m = 2.0 * m_undirected;
  const double after = (acc.target_internal + acc.crossing) / two_m -
                       std::pow((acc.target_incident + acc.mover_incident) / two_m, 2);
  const double before = acc.target_internal / two_m - std::pow(acc.target_incident / two_m, 2) -
                        std::pow(acc.mover_incident / two_m, 2);
  return after - before;
}

SupergraphHierarchy build_hierarchy(const DirectedGraph& g, std::uint32_t k) {
  if (k < 2) throw UsageError("fanout bound k must be at least 2");
  double m_undirected = 0.0;
  LevelGraph lg = leaf_level(g, m_undirected);
  std::vector<std::vector<std::uint32_t>> parents;
  while (lg.count > k) {
    std::size_t next = 0;
    auto assign = cluster_level(lg, k, m_undirected, next);
    if (next >= lg.count) throw InvariantError("hierarchy level made no progress");
    lg = aggregate(lg, assign, next);
    parents.push_back(std::move(assign));
  }
  parents.emplace_back(lg.count, 0u);
  return SupergraphHierarchy::from_parents(g.node_count(), k, std::move(parents));
}

SupergraphHierarchy SupergraphHierarchy::from_parents(NodeId leaf_count, std::uint32_t k,
                                                      std::vector<std::vector<std::uint32_t>> parents) {
  if (leaf_count == 0) throw ParseError("hierarchy has no leaves");
  if (parents.empty()) throw ParseError("hierarchy has no levels above the leaves");
  SupergraphHierarchy h;
  h.k_ = k;
  h.level_offset_ = {0, leaf_count};
  std::size_t below = leaf_count;
  for (std::size_t l = 0; l < parents.size(); ++l) {
    const auto& p = parents[l];
    if (p.size() != below) throw ParseError("parent array " + std::to_string(l) + " has wrong length");
    std::size_t size = 0;
    for (auto x : p) size = std::max<std::size_t>(size, x + 1);
    std::vector<std::uint32_t> fanout(size, 0);
    for (auto x : p) ++fanout[x];
    for (auto f : fanout) {
      if (f == 0) throw ParseError("supernode without children at level " + std::to_string(l + 1));
      if (f > k) throw ParseError("fanout bound exceeded at level " + std::to_string(l + 1));
    }
    h.level_offset_.push_back(h.level_offset_.back() + size);
    below = size;
  }
  if (below != 1) throw ParseError("top level must hold exactly one root");
  h.parents_ = std::move(parents);

  const std::size_t total = h.total_count();
  const std::size_t levels = h.level_count();

  h.child_offset_.assign(total + 1, 0);
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    for (std::uint32_t i = 0; i < h.parents_[l].size(); ++i) ++h.child_offset_[h.id_of(l + 1, h.parents_[l][i]) + 1];
  }
  for (std::size_t id = 0; id < total; ++id) h.child_offset_[id + 1] += h.child_offset_[id];
  h.child_ids_.resize(h.child_offset_.back());
  std::vector<std::size_t> fill(h.child_offset_.begin(), h.child_offset_.end() - 1);
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    for (std::uint32_t i = 0; i < h.parents_[l].size(); ++i) {
      h.child_ids_[fill[h.id_of(l + 1, h.parents_[l][i])]++] = h.id_of(l, i);
    }
  }

  h.ancestor_index_.resize(levels - 1);
  for (std::size_t l = 1; l < levels; ++l) {
    auto& anc = h.ancestor_index_[l - 1];
    anc.resize(leaf_count);
    for (NodeId v = 0; v < leaf_count; ++v) {
      anc[v] = l == 1 ? h.parents_[0][v] : h.parents_[l - 1][h.ancestor_index_[l - 2][v]];
    }
  }

  // DFS order: most significant key is the highest non-root ancestor.
  h.leaf_order_.resize(leaf_count);
  std::iota(h.leaf_order_.begin(), h.leaf_order_.end(), 0u);
  for (std::size_t l = 1; l + 1 < levels; ++l) {
    const auto& anc = h.ancestor_index_[l - 1];
    std::stable_sort(h.leaf_order_.begin(), h.leaf_order_.end(), [&](NodeId a, NodeId b) { return anc[a] < anc[b]; });
  }
  h.leaf_begin_.assign(total, std::numeric_limits<std::size_t>::max());
  h.leaf_end_.assign(total, 0);
  for (std::size_t pos = 0; pos < leaf_count; ++pos) {
    const NodeId v = h.leaf_order_[pos];
    for (std::size_t l = 0; l < levels; ++l) {
      const auto id = h.ancestor(v, l);
      h.leaf_begin_[id] = std::min(h.leaf_begin_[id], pos);
      h.leaf_end_[id] = std::max(h.leaf_end_[id], pos + 1);
    }
  }
  return h;
}

std::size_t SupergraphHierarchy::level_of(SupernodeId id) const {
  if (!contains(id)) throw NotFoundError("unknown supernode " + std::to_string(id));
  const auto it = std::upper_bound(level_offset_.begin(), level_offset_.end(), static_cast<std::size_t>(id));
  return static_cast<std::size_t>(it - level_offset_.begin()) - 1;
}

std::optional<SupernodeId> SupergraphHierarchy::parent(SupernodeId id) const {
  const auto level = level_of(id);
  if (level + 1 == level_count()) return std::nullopt;
  return id_of(level + 1, parents_[level][id - level_offset_[level]]);
}

std::vector<std::pair<SupernodeId, SupernodeId>> super_edges_at(const SupergraphHierarchy& h, const DirectedGraph& g,
                                                                 SupernodeId parent) {
  const auto level = h.level_of(parent);
  if (level == 0) throw UsageError("supernode " + std::to_string(parent) + " is a leaf");
  std::vector<std::pair<SupernodeId, SupernodeId>> out;
  for (NodeId u : h.leaves(parent)) {
    const auto a = h.ancestor(u, level - 1);
    for (NodeId w : g.out_neighbors(u)) {
      if (h.ancestor(w, level) != parent) continue;
      const auto b = h.ancestor(w, level - 1);
      if (a != b) out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void save_hierarchy(const SupergraphHierarchy& h, std::span<const std::uint64_t> original_ids,
                    const std::filesystem::path& path) {
  nlohmann::json j;
  j["k"] = h.fanout_bound();
  j["levels"] = h.level_count();
  j["parent"] = h.parents();
  j["order"] = std::vector<NodeId>(h.leaf_order().begin(), h.leaf_order().end());
  j["remap"] = std::vector<std::uint64_t>(original_ids.begin(), original_ids.end());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

SupergraphHierarchy load_hierarchy(const std::filesystem::path& path, std::vector<std::uint64_t>* original_ids) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    auto parents = j.at("parent").get<std::vector<std::vector<std::uint32_t>>>();
    const auto order = j.at("order").get<std::vector<NodeId>>();
    if (parents.empty()) throw ParseError("no parent arrays");
    const auto leaves = static_cast<NodeId>(parents.front().size());
    auto h = SupergraphHierarchy::from_parents(leaves, j.at("k").get<std::uint32_t>(), std::move(parents));
    if (j.at("levels").get<std::size_t>() != h.level_count()) throw ParseError("level count mismatch");
    if (!std::equal(order.begin(), order.end(), h.leaf_order().begin(), h.leaf_order().end())) {
      throw ParseError("leaf order does not match parent table");
    }
    if (original_ids) *original_ids = j.at("remap").get<std::vector<std::uint64_t>>();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace pprviz
