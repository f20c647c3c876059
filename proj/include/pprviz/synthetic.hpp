#pragma once

#include <cstdint>

#include "pprviz/graph.hpp"

// Small graph generators for tests, benchmarks, and the `generate` command.
// Undirected families are returned symmetrized.
namespace pprviz::synthetic {

DirectedGraph path(NodeId n);
DirectedGraph cycle(NodeId n, bool directed = false);
DirectedGraph clique(NodeId n);
DirectedGraph star(NodeId leaves);

/// Two triangles {0,1,2} and {3,4,5}; `bridged` adds the edge 2-3.
DirectedGraph two_triangles(bool bridged);

/// Two equal blocks with intra/inter edge probabilities.
DirectedGraph two_block_sbm(NodeId n, double p_in, double p_out, std::uint64_t seed);

/// Preferential attachment: each new node links to `per_node` distinct
/// existing nodes chosen proportionally to degree.
DirectedGraph power_law(NodeId n, std::uint32_t per_node, std::uint64_t seed);

/// Directed Erdos-Renyi graph (no symmetrization).
DirectedGraph random_directed(NodeId n, double p, std::uint64_t seed);

}  // namespace pprviz::synthetic
