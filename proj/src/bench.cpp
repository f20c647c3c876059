#include "pprviz/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "pprviz/errors.hpp"

namespace pprviz {

std::vector<std::vector<SupernodeId>> random_zoom_paths(const SupergraphHierarchy& h, std::size_t count,
                                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<SupernodeId>> paths(count);
  for (auto& path : paths) {
    SupernodeId node = h.root();
    path.push_back(node);
    for (;;) {
      std::vector<SupernodeId> inner;
      for (auto c : h.children(node)) {
        if (!h.is_leaf(c)) inner.push_back(c);
      }
      if (inner.empty()) break;
      node = inner[static_cast<std::size_t>(rng() % inner.size())];
      path.push_back(node);
    }
  }
  return paths;
}

BenchReport run_bench(const Workspace& ws, const BenchOptions& opts) {
  if (opts.paths == 0) throw UsageError("need at least one zoom path");
  if (opts.engines.empty()) throw UsageError("need at least one engine");
  BenchReport report;
  const auto paths = random_zoom_paths(ws.hierarchy(), opts.paths, opts.seed);
  std::map<std::pair<SupernodeId, int>, BenchSample> seen;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    for (auto node : paths[p]) {
      for (auto engine : opts.engines) {
        const auto key = std::make_pair(node, static_cast<int>(engine));
        if (opts.reuse_visits) {
          if (auto it = seen.find(key); it != seen.end()) {
            report.samples.push_back(it->second);
            report.samples.back().path = p;
            continue;
          }
        }
        VisualizeOptions vo;
        vo.engine = engine;
        vo.threads = opts.threads;
        const auto r = visualize(ws, node, vo);
        report.samples.push_back({p, node, r.level, engine, r.timing, r.counters});
        if (opts.reuse_visits) seen.emplace(key, report.samples.back());
      }
    }
  }

  std::map<std::pair<std::size_t, int>, std::vector<const BenchSample*>> groups;
  for (const auto& s : report.samples) groups[{s.level, static_cast<int>(s.engine)}].push_back(&s);
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    const auto& samples = it->second;
    BenchRow row;
    row.level = it->first.first;
    row.engine = static_cast<Engine>(it->first.second);
    std::vector<double> totals;
    std::vector<std::size_t> path_ids;
    for (const auto* s : samples) {
      totals.push_back(s->timing.total_ms);
      row.pdist_ms += s->timing.pdist_ms;
      row.layout_ms += s->timing.layout_ms;
      path_ids.push_back(s->path);
    }
    std::sort(path_ids.begin(), path_ids.end());
    row.paths = static_cast<std::size_t>(std::unique(path_ids.begin(), path_ids.end()) - path_ids.begin());
    const double count = static_cast<double>(totals.size());
    for (double t : totals) row.mean_ms += t;
    row.mean_ms /= count;
    row.pdist_ms /= count;
    row.layout_ms /= count;
    std::sort(totals.begin(), totals.end());
    const std::size_t mid = totals.size() / 2;
    row.median_ms = totals.size() % 2 ? totals[mid] : (totals[mid - 1] + totals[mid]) / 2;
    report.rows.push_back(row);
  }
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "level,engine,paths,mean_ms,median_ms,pdist_ms,layout_ms\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%s,%zu,%.4f,%.4f,%.4f,%.4f\n", r.level, std::string(engine_name(r.engine)).c_str(),
                  r.paths, r.mean_ms, r.median_ms, r.pdist_ms, r.layout_ms);
    os << buf;
  }
  return os.str();
}

}  // namespace pprviz
