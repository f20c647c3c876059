#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pprviz/layout.hpp"
#include "pprviz/metrics.hpp"
#include "pprviz/ppr.hpp"
#include "pprviz/workspace.hpp"

namespace pprviz {

enum class Engine { taupush, gfp_only, gfra, pi_oracle };

std::string_view engine_name(Engine e);
/// Accepts "taupush", "gfp-only", "gfra", "pi-oracle"; throws UsageError.
Engine parse_engine(std::string_view name);

struct VisualizeOptions {
  std::optional<std::uint64_t> seed;  // default: derived from workspace and id
  Engine engine = Engine::taupush;
  unsigned threads = 1;
  bool max_gating = false;
  bool use_gbp_cache = true;
  MajorizationOptions layout;  // layout.seed is overridden by `seed`
};

struct ChildInfo {
  SupernodeId id = 0;
  std::uint64_t leaf_count = 0;
  std::string label;
};

struct StageTiming {
  double pdist_ms = 0;  // DPPR estimation plus conversion
  double layout_ms = 0;
  double total_ms = 0;
};

struct VisualizationResponse {
  SupernodeId id = 0;
  std::size_t level = 0;
  std::uint64_t seed = 0;
  Engine engine = Engine::taupush;
  std::vector<ChildInfo> children;
  Coords<double> coords;  // normalized, one row per child
  std::vector<std::pair<SupernodeId, SupernodeId>> super_edges;
  Eigen::MatrixXd pdist;
  double stress = 0;
  int iterations = 0;
  MetricReport metrics;
  StageTiming timing;
  EngineCounters counters;
};

/// Lays out the children of a non-leaf supernode. Throws NotFoundError
/// for unknown ids and UsageError for leaves.
VisualizationResponse visualize(const Workspace& ws, SupernodeId id, const VisualizeOptions& opts = {});

/// Every node is its own group (k = n). Throws UsageError above `max_nodes`.
VisualizationResponse visualize_single_level(const DirectedGraph& g, std::span<const std::uint64_t> original_ids,
                                             const PprParams& base, const VisualizeOptions& opts = {},
                                             NodeId max_nodes = 3000);

/// Parses a supernode id: decimal, or "root".
SupernodeId parse_supernode_id(const SupergraphHierarchy& h, std::string_view text);

nlohmann::json metrics_to_json(const MetricReport& r);
/// Timing is left out unless asked for, so equal requests give equal bytes.
nlohmann::json response_to_json(const VisualizationResponse& r, bool include_timing = false);

}  // namespace pprviz
