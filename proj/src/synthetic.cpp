#include "pprviz/synthetic.hpp"

#include <algorithm>
#include <random>

#include "pprviz/errors.hpp"

namespace pprviz::synthetic {

namespace {

void add_undirected(std::vector<Edge>& edges, NodeId a, NodeId b) {
  edges.emplace_back(a, b);
  edges.emplace_back(b, a);
}

// Uniform double in [0,1) from the top 53 bits; stable across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

DirectedGraph path(NodeId n) {
  std::vector<Edge> edges;
  for (NodeId v = 0; v + 1 < n; ++v) add_undirected(edges, v, v + 1);
  return DirectedGraph::from_edges(n, std::move(edges));
}

DirectedGraph cycle(NodeId n, bool directed) {
  if (n < 2) throw UsageError("cycle needs at least 2 nodes");
  std::vector<Edge> edges;
  for (NodeId v = 0; v < n; ++v) {
    const NodeId w = (v + 1) % n;
    if (directed) {
      edges.emplace_back(v, w);
    } else {
      add_undirected(edges, v, w);
    }
  }
  return DirectedGraph::from_edges(n, std::move(edges));
}

DirectedGraph clique(NodeId n) {
  std::vector<Edge> edges;
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = 0; b < n; ++b) {
      if (a != b) edges.emplace_back(a, b);
    }
  }
  return DirectedGraph::from_edges(n, std::move(edges));
}

DirectedGraph star(NodeId leaves) {
  std::vector<Edge> edges;
  for (NodeId v = 1; v <= leaves; ++v) add_undirected(edges, 0, v);
  return DirectedGraph::from_edges(leaves + 1, std::move(edges));
}

DirectedGraph two_triangles(bool bridged) {
  std::vector<Edge> edges;
  for (NodeId base : {0u, 3u}) {
    add_undirected(edges, base, base + 1);
    add_undirected(edges, base + 1, base + 2);
    add_undirected(edges, base, base + 2);
  }
  if (bridged) add_undirected(edges, 2, 3);
  return DirectedGraph::from_edges(6, std::move(edges));
}

DirectedGraph two_block_sbm(NodeId n, double p_in, double p_out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  const NodeId half = n / 2;
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = a + 1; b < n; ++b) {
      const bool same = (a < half) == (b < half);
      if (unit(rng) < (same ? p_in : p_out)) add_undirected(edges, a, b);
    }
  }
  return DirectedGraph::from_edges(n, std::move(edges));
}

DirectedGraph power_law(NodeId n, std::uint32_t per_node, std::uint64_t seed) {
  if (per_node == 0 || n <= per_node) throw UsageError("power_law needs n > per_node > 0");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  // endpoint multiset; sampling uniformly from it is degree-proportional
  std::vector<NodeId> endpoints;
  for (NodeId a = 0; a <= per_node; ++a) {
    for (NodeId b = a + 1; b <= per_node; ++b) {
      add_undirected(edges, a, b);
      endpoints.push_back(a);
      endpoints.push_back(b);
    }
  }
  std::vector<NodeId> picked;
  for (NodeId v = per_node + 1; v < n; ++v) {
    picked.clear();
    while (picked.size() < per_node) {
      const NodeId u = endpoints[static_cast<std::size_t>(unit(rng) * static_cast<double>(endpoints.size()))];
      if (std::find(picked.begin(), picked.end(), u) == picked.end()) picked.push_back(u);
    }
    for (NodeId u : picked) {
      add_undirected(edges, v, u);
      endpoints.push_back(v);
      endpoints.push_back(u);
    }
  }
  return DirectedGraph::from_edges(n, std::move(edges));
}

DirectedGraph random_directed(NodeId n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = 0; b < n; ++b) {
      if (a != b && unit(rng) < p) edges.emplace_back(a, b);
    }
  }
  return DirectedGraph::from_edges(n, std::move(edges));
}

}  // namespace pprviz::synthetic
