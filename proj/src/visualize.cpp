#include "pprviz/visualize.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "pprviz/errors.hpp"
#include "pprviz/pdist.hpp"

namespace pprviz {

std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::taupush: return "taupush";
    case Engine::gfp_only: return "gfp-only";
    case Engine::gfra: return "gfra";
    case Engine::pi_oracle: return "pi-oracle";
  }
  return "?";
}

Engine parse_engine(std::string_view name) {
  for (Engine e : {Engine::taupush, Engine::gfp_only, Engine::gfra, Engine::pi_oracle}) {
    if (engine_name(e) == name) return e;
  }
  throw UsageError("unknown engine '" + std::string(name) + "' (taupush, gfp-only, gfra, pi-oracle)");
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

struct PipelineInput {
  const DirectedGraph* graph = nullptr;
  const Scope* scope = nullptr;
  const DprIndex* dpr = nullptr;
  PprParams params;
  std::vector<IndexPair> edges;  // unordered child index pairs, i < j
};

void run_pipeline(const PipelineInput& in, const VisualizeOptions& opts, VisualizationResponse& r) {
  const auto start = Clock::now();
  const auto& g = *in.graph;
  const auto c = static_cast<Eigen::Index>(in.scope->size());
  const std::uint64_t n = g.node_count();
  if (c == 1) {
    r.coords = Coords<double>::Zero(1, 2);
    r.pdist = Eigen::MatrixXd::Zero(1, 1);
    r.metrics = check_quality_bounds(r.pdist, {}, n, g.edge_count(), in.params.alpha);
    r.timing.total_ms = ms_since(start);
    return;
  }

  EngineOptions eo;
  eo.threads = opts.threads;
  eo.max_gating = opts.max_gating;
  eo.cache = opts.use_gbp_cache && in.dpr ? &in.dpr->gbp_cache : nullptr;
  DpprEstimate est;
  switch (opts.engine) {
    case Engine::taupush: est = tau_push(g, *in.scope, *in.dpr, in.params, eo); break;
    case Engine::gfp_only: est = gfp_only(g, *in.scope, *in.dpr, in.params, eo); break;
    case Engine::gfra: est = gfra(g, *in.scope, in.params, r.seed, eo); break;
    case Engine::pi_oracle: est = pi_oracle(g, *in.scope, in.params, eo); break;
  }
  const auto pd = build_pdist_matrix(est.values, n);
  r.counters = est.counters;
  r.timing.pdist_ms = ms_since(start);

  const auto layout_start = Clock::now();
  MajorizationOptions mo = opts.layout;
  mo.seed = r.seed;
  const auto lay = stress_majorization(pd, mo);
  r.coords = normalize_layout(lay.coords);
  r.stress = lay.stress;
  r.iterations = lay.iterations;
  r.timing.layout_ms = ms_since(layout_start);
  r.pdist = pd.values;

  r.metrics = check_quality_bounds(pd.values, in.edges, n, g.edge_count(), in.params.alpha);
  r.metrics.nd = node_distribution(r.coords);
  r.metrics.ulcv = ulcv(r.coords, std::span<const IndexPair>(in.edges));
  r.timing.total_ms = ms_since(start);
}

std::vector<IndexPair> unordered_pairs(const std::vector<std::pair<SupernodeId, SupernodeId>>& edges,
                                       const std::map<SupernodeId, std::uint32_t>& index) {
  std::set<IndexPair> pairs;
  for (const auto& [a, b] : edges) {
    const auto i = index.at(a), j = index.at(b);
    pairs.emplace(std::min(i, j), std::max(i, j));
  }
  return {pairs.begin(), pairs.end()};
}

}  // namespace

SupernodeId parse_supernode_id(const SupergraphHierarchy& h, std::string_view text) {
  if (text == "root") return h.root();
  std::uint64_t v = 0;
  if (text.empty() || text.size() > 10) throw UsageError("bad supernode id '" + std::string(text) + "'");
  for (char ch : text) {
    if (ch < '0' || ch > '9') throw UsageError("bad supernode id '" + std::string(text) + "'");
    v = v * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  if (v >= h.total_count()) throw NotFoundError("unknown supernode " + std::string(text));
  return static_cast<SupernodeId>(v);
}

VisualizationResponse visualize(const Workspace& ws, SupernodeId id, const VisualizeOptions& opts) {
  const auto& h = ws.hierarchy();
  if (!h.contains(id)) throw NotFoundError("unknown supernode " + std::to_string(id));
  if (h.is_leaf(id)) throw UsageError("supernode " + std::to_string(id) + " is a leaf");

  VisualizationResponse r;
  r.id = id;
  r.level = h.level_of(id);
  r.seed = opts.seed.value_or(ws.default_seed(id));
  r.engine = opts.engine;
  std::map<SupernodeId, std::uint32_t> index;
  for (auto child : h.children(id)) {
    index.emplace(child, static_cast<std::uint32_t>(r.children.size()));
    const std::string label = h.is_leaf(child) ? "v" + std::to_string(ws.original_ids().at(child))
                                               : "S" + std::to_string(child);
    r.children.push_back({child, h.leaf_count_of(child), label});
  }
  r.super_edges = super_edges_at(h, ws.graph(), id);

  const auto scope = Scope::of(h, id);
  PipelineInput in;
  in.graph = &ws.graph();
  in.scope = &scope;
  in.dpr = &ws.dpr();
  in.params = ws.params();
  in.edges = unordered_pairs(r.super_edges, index);
  run_pipeline(in, opts, r);
  return r;
}

VisualizationResponse visualize_single_level(const DirectedGraph& g, std::span<const std::uint64_t> original_ids,
                                             const PprParams& base, const VisualizeOptions& opts, NodeId max_nodes) {
  const NodeId n = g.node_count();
  if (n > max_nodes) {
    throw UsageError("single-level mode is limited to " + std::to_string(max_nodes) + " nodes (graph has " +
                     std::to_string(n) + "); preprocess a workspace and use multi-level mode");
  }
  VisualizationResponse r;
  r.seed = opts.seed.value_or(opts.layout.seed);
  r.engine = opts.engine;
  std::vector<std::vector<NodeId>> groups;
  for (NodeId v = 0; v < n; ++v) {
    groups.push_back({v});
    const auto label = "v" + std::to_string(v < original_ids.size() ? original_ids[v] : v);
    r.children.push_back({v, 1, label});
  }
  std::vector<IndexPair> pairs;
  for (const auto& [a, b] : g.edges()) {
    if (a == b) continue;
    r.super_edges.emplace_back(a, b);
    pairs.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  PprParams params = base;
  params.k = std::max<NodeId>(n, 2);
  params.delta = 1.0 / (10.0 * params.k);
  params.validate();
  const auto scope = Scope::from_groups(n, std::move(groups));
  DprIndex dpr;
  if (n > 1 && (opts.engine == Engine::taupush || opts.engine == Engine::gfp_only)) dpr = compute_dpr(g, params);

  PipelineInput in;
  in.graph = &g;
  in.scope = &scope;
  in.dpr = &dpr;
  in.params = params;
  in.edges = std::move(pairs);
  run_pipeline(in, opts, r);
  return r;
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return "inf";
  return *v;
}

nlohmann::json optional_bool(const std::optional<bool>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json metrics_to_json(const MetricReport& r) {
  return {
      {"nd", optional_number(r.nd)},
      {"ulcv", optional_number(r.ulcv)},
      {"nd_bound", r.nd_bound},
      {"ulcv_bound", optional_number(r.ulcv_bound)},
      {"delta_nd", optional_number(r.delta_nd)},
      {"delta_ulcv", optional_number(r.delta_ulcv)},
      {"within_bounds", {{"nd", optional_bool(r.nd_within)}, {"ulcv", optional_bool(r.ulcv_within)}}},
  };
}

nlohmann::json response_to_json(const VisualizationResponse& r, bool include_timing) {
  nlohmann::json j;
  j["id"] = r.id;
  j["level"] = r.level;
  j["seed"] = r.seed;
  j["engine"] = engine_name(r.engine);
  auto& children = j["children"] = nlohmann::json::array();
  auto& ids = j["ids"] = nlohmann::json::array();
  auto& xy = j["xy"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.children.size(); ++i) {
    const auto& c = r.children[i];
    children.push_back({{"id", c.id}, {"leaf_count", c.leaf_count}, {"label", c.label}});
    ids.push_back(c.id);
    xy.push_back({r.coords(static_cast<Eigen::Index>(i), 0), r.coords(static_cast<Eigen::Index>(i), 1)});
  }
  auto& edges = j["super_edges"] = nlohmann::json::array();
  for (const auto& [a, b] : r.super_edges) edges.push_back({a, b});
  j["stress"] = r.stress;
  j["iterations"] = r.iterations;
  j["metrics"] = metrics_to_json(r.metrics);
  j["counters"] = {{"gfp_runs", r.counters.gfp_runs},       {"gbp_runs", r.counters.gbp_runs},
                   {"cache_hits", r.counters.cache_hits},   {"walks", r.counters.walks},
                   {"pi_iterations", r.counters.pi_iterations}, {"pushes", r.counters.push.pushes},
                   {"edge_ops", r.counters.push.edge_ops}};
  if (include_timing) {
    j["timing"] = {{"pdist_ms", r.timing.pdist_ms}, {"layout_ms", r.timing.layout_ms}, {"total_ms", r.timing.total_ms}};
  }
  return j;
}

}  // namespace pprviz
