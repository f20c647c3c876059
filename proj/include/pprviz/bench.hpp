#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pprviz/visualize.hpp"

namespace pprviz {

/// Seeded root-to-level-1 zoom paths; each step picks a uniformly random
/// non-leaf child.
std::vector<std::vector<SupernodeId>> random_zoom_paths(const SupergraphHierarchy& h, std::size_t count,
                                                        std::uint64_t seed);

struct BenchOptions {
  std::size_t paths = 100;
  std::uint64_t seed = 7;
  std::vector<Engine> engines{Engine::taupush};
  unsigned threads = 1;
  // Time a (node, engine) visit once and reuse the sample when another path
  // revisits it; results are deterministic, so only timing noise is lost.
  bool reuse_visits = false;
};

struct BenchSample {
  std::size_t path = 0;
  SupernodeId node = 0;
  std::size_t level = 0;
  Engine engine = Engine::taupush;
  StageTiming timing;
  EngineCounters counters;
};

struct BenchRow {
  std::size_t level = 0;
  Engine engine = Engine::taupush;
  std::size_t paths = 0;
  double mean_ms = 0;
  double median_ms = 0;
  double pdist_ms = 0;
  double layout_ms = 0;
};

struct BenchReport {
  std::vector<BenchSample> samples;
  std::vector<BenchRow> rows;  // one per (level, engine), levels descending
};

/// Every engine visualizes the same nodes with the same layout seeds.
/// Throws UsageError for zero paths or no engines.
BenchReport run_bench(const Workspace& ws, const BenchOptions& opts);

/// CSV with header level,engine,paths,mean_ms,median_ms,pdist_ms,layout_ms.
std::string bench_csv(const BenchReport& report);

}  // namespace pprviz
