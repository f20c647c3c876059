// pprviz: preprocess graphs, lay out supernodes, benchmark engines, serve the API.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pprviz/bench.hpp"
#include "pprviz/errors.hpp"
#include "pprviz/graph.hpp"
#include "pprviz/render.hpp"
#include "pprviz/server.hpp"
#include "pprviz/synthetic.hpp"
#include "pprviz/visualize.hpp"
#include "pprviz/workspace.hpp"

namespace {

using namespace pprviz;

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

std::string default_workspace() {
  const char* env = std::getenv("PPRVIZ_WORKSPACE");
  return env ? env : "";
}

std::string require_workspace(const std::string& ws) {
  if (ws.empty()) throw UsageError("no workspace: pass -w or set PPRVIZ_WORKSPACE");
  return ws;
}

struct ParamFlags {
  double alpha = 0.2;
  double epsilon = PprParams{}.epsilon;
  double delta = 0;  // 0: 1/(10k)
  double p_f = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "restart probability")->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "relative error bound")->capture_default_str();
    cmd->add_option("--delta", delta, "approximation threshold (default 1/(10k))");
    cmd->add_option("--pf", p_f, "GFRA failure probability (default 1/n)");
  }
  PprParams make(std::uint32_t k) const {
    auto p = PprParams::for_fanout(k);
    p.alpha = alpha;
    p.epsilon = epsilon;
    if (delta > 0) p.delta = delta;
    p.p_f = p_f;
    return p;
  }
};

std::string render(const VisualizationResponse& r, const std::string& emit, bool timing) {
  if (emit == "json") return response_to_json(r, timing).dump();
  if (emit == "svg") return layout_to_svg(r);
  if (emit == "csv") return layout_to_csv(r);
  throw UsageError("unknown format '" + emit + "'");
}

DirectedGraph generate(const std::string& family, NodeId n, std::uint32_t per_node, double p, double q,
                       std::uint64_t seed) {
  if (family == "path") return synthetic::path(n);
  if (family == "cycle") return synthetic::cycle(n);
  if (family == "directed-cycle") return synthetic::cycle(n, true);
  if (family == "clique") return synthetic::clique(n);
  if (family == "star") return synthetic::star(n - 1);
  if (family == "two-triangles") return synthetic::two_triangles(true);
  if (family == "sbm") return synthetic::two_block_sbm(n, p, q, seed);
  if (family == "power-law") return synthetic::power_law(n, per_node, seed);
  if (family == "random-directed") return synthetic::random_directed(n, p, seed);
  throw UsageError("unknown family '" + family + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PPR-distance multi-level graph layout"};
  app.require_subcommand(1);
  unsigned threads = 1;
  app.add_option("--threads", threads, "worker threads for push engines")->capture_default_str();

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic edge list");
  std::string gen_family = "power-law", gen_out;
  NodeId gen_n = 100;
  std::uint32_t gen_per_node = 3;
  double gen_p = 0.3, gen_q = 0.02;
  std::uint64_t gen_seed = 1;
  gen->add_option("--family", gen_family,
                  "path|cycle|directed-cycle|clique|star|two-triangles|sbm|power-law|random-directed")
      ->capture_default_str();
  gen->add_option("-n,--nodes", gen_n)->capture_default_str();
  gen->add_option("--per-node", gen_per_node, "power-law attachments per node")->capture_default_str();
  gen->add_option("-p", gen_p, "edge probability (sbm: within blocks)")->capture_default_str();
  gen->add_option("-q", gen_q, "sbm: between blocks")->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("-o,--output", gen_out, "edge list path (default stdout)");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "build hierarchy, DPR index and GBP cache");
  std::string pre_in, pre_out;
  std::uint32_t pre_k = 25;
  bool pre_sym = false, pre_no_cache = false;
  ParamFlags pre_params;
  pre->add_option("-i,--input", pre_in, "edge list")->required();
  pre->add_option("-o,--output", pre_out, "workspace directory")->required();
  pre->add_option("-k", pre_k, "fanout bound")->capture_default_str();
  pre->add_flag("--symmetrize", pre_sym, "mirror every edge");
  pre->add_flag("--no-gbp-cache", pre_no_cache, "skip the backward-push cache");
  pre_params.add(pre);

  // layout
  auto* lay = app.add_subcommand("layout", "lay out the children of a supernode");
  std::string lay_ws = default_workspace(), lay_node = "root", lay_emit = "json", lay_out, lay_engine = "taupush",
              lay_in;
  std::uint64_t lay_seed = 0;
  bool lay_single = false, lay_timing = false, lay_sym = false, lay_max_gating = false;
  NodeId lay_max_nodes = 3000;
  ParamFlags lay_params;
  auto* seed_opt = lay->add_option("--seed", lay_seed, "layout seed (default derived from workspace and node)");
  lay->add_option("-w,--workspace", lay_ws, "workspace (env PPRVIZ_WORKSPACE)");
  lay->add_option("--node", lay_node, "supernode id or 'root'")->capture_default_str();
  lay->add_option("--emit", lay_emit, "json|svg|csv")->capture_default_str();
  lay->add_option("-o,--output", lay_out, "output path (default stdout)");
  lay->add_option("--engine", lay_engine, "taupush|gfp-only|gfra|pi-oracle")->capture_default_str();
  lay->add_flag("--timing", lay_timing, "include per-stage milliseconds in JSON");
  lay->add_flag("--max-gating", lay_max_gating, "gate backward push on max leaf DPR");
  lay->add_flag("--single-level", lay_single, "lay out every node of -i directly");
  lay->add_option("-i,--input", lay_in, "edge list for --single-level");
  lay->add_flag("--symmetrize", lay_sym, "mirror edges of -i");
  lay->add_option("--max-nodes", lay_max_nodes, "single-level size guard")->capture_default_str();
  lay_params.add(lay);

  // bench
  auto* bench = app.add_subcommand("bench", "time random zoom-in paths");
  std::string bench_ws = default_workspace(), bench_engines = "taupush", bench_out;
  std::size_t bench_paths = 100;
  std::uint64_t bench_seed = 7;
  bool bench_reuse = false;
  bench->add_option("-w,--workspace", bench_ws);
  bench->add_option("--paths", bench_paths)->capture_default_str();
  bench->add_option("--seed", bench_seed)->capture_default_str();
  bench->add_option("--engines", bench_engines, "comma-separated engines")->capture_default_str();
  bench->add_option("-o,--output", bench_out, "CSV path (default stdout)");
  bench->add_flag("--reuse-visits", bench_reuse, "time each repeated (node, engine) visit once");

  // metrics
  auto* met = app.add_subcommand("metrics", "ND / ULCV of a layout file or a live layout");
  std::string met_file, met_ws = default_workspace(), met_node;
  std::uint64_t met_seed = 0;
  bool met_normalize = false;
  met->add_option("--layout", met_file, "layout JSON with \"xy\" (and optional \"ids\", \"super_edges\")");
  met->add_option("-w,--workspace", met_ws);
  met->add_option("--node", met_node, "supernode id or 'root'");
  auto* met_seed_opt = met->add_option("--seed", met_seed);
  met->add_flag("--normalize", met_normalize, "normalize file coordinates first");

  // serve
  auto* srv = app.add_subcommand("serve", "HTTP JSON API over a workspace");
  std::string srv_ws = default_workspace(), srv_host = "127.0.0.1";
  int srv_port = 8080;
  std::size_t srv_cache = 256;
  srv->add_option("-w,--workspace", srv_ws);
  srv->add_option("--host", srv_host)->capture_default_str();
  srv->add_option("--port", srv_port)->capture_default_str();
  srv->add_option("--cache", srv_cache, "cached layout responses (0 disables)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      std::ostringstream os;
      write_edge_list(generate(gen_family, gen_n, gen_per_node, gen_p, gen_q, gen_seed), os);
      write_output(gen_out, os.str());
    } else if (*pre) {
      PreprocessOptions po;
      po.input = pre_in;
      po.out_dir = pre_out;
      po.params = pre_params.make(pre_k);
      po.symmetrize = pre_sym;
      po.build_gbp_cache = !pre_no_cache;
      const auto res = preprocess(po);
      const auto& m = res.manifest;
      if (res.up_to_date) std::cout << "up-to-date\n";
      std::cout << "workspace " << pre_out << ": n=" << m.n << " m=" << m.m << " levels=" << m.levels
                << " root=" << m.root << " k=" << m.params.k << " cached_targets=" << m.cached_targets << '\n';
    } else if (*lay) {
      VisualizeOptions vo;
      vo.engine = parse_engine(lay_engine);
      vo.threads = threads;
      vo.max_gating = lay_max_gating;
      if (*seed_opt) vo.seed = lay_seed;
      VisualizationResponse r;
      if (lay_single) {
        if (lay_in.empty()) throw UsageError("--single-level needs -i");
        const auto loaded = load_edge_list(lay_in, lay_sym);
        r = visualize_single_level(loaded.graph, loaded.original_ids, lay_params.make(2), vo, lay_max_nodes);
      } else {
        const auto ws = Workspace::open(require_workspace(lay_ws));
        r = visualize(ws, parse_supernode_id(ws.hierarchy(), lay_node), vo);
      }
      write_output(lay_out, render(r, lay_emit, lay_timing));
    } else if (*bench) {
      const auto ws = Workspace::open(require_workspace(bench_ws));
      BenchOptions bo;
      bo.paths = bench_paths;
      bo.reuse_visits = bench_reuse;
      bo.seed = bench_seed;
      bo.threads = threads;
      bo.engines.clear();
      std::stringstream ss(bench_engines);
      for (std::string e; std::getline(ss, e, ',');) bo.engines.push_back(parse_engine(e));
      write_output(bench_out, bench_csv(run_bench(ws, bo)));
    } else if (*met) {
      nlohmann::json out;
      if (!met_file.empty()) {
        std::ifstream in(met_file);
        if (!in) throw IoError("cannot open " + met_file);
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw ParseError(met_file + ": " + e.what());
        }
        if (!j.contains("xy")) throw ParseError(met_file + ": missing \"xy\"");
        const auto& xy = j.at("xy");
        Coords<double> x(static_cast<Eigen::Index>(xy.size()), 2);
        for (std::size_t i = 0; i < xy.size(); ++i) {
          x(static_cast<Eigen::Index>(i), 0) = xy[i].at(0).get<double>();
          x(static_cast<Eigen::Index>(i), 1) = xy[i].at(1).get<double>();
        }
        if (met_normalize) x = normalize_layout(x);
        std::map<std::uint64_t, std::uint32_t> row;
        if (j.contains("ids")) {
          for (std::size_t i = 0; i < j["ids"].size(); ++i) row[j["ids"][i].get<std::uint64_t>()] = static_cast<std::uint32_t>(i);
        } else {
          for (std::size_t i = 0; i < xy.size(); ++i) row[i] = static_cast<std::uint32_t>(i);
        }
        std::vector<IndexPair> edges;
        if (j.contains("super_edges")) {
          for (const auto& e : j["super_edges"]) {
            const auto a = row.at(e.at(0).get<std::uint64_t>()), b = row.at(e.at(1).get<std::uint64_t>());
            if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
          }
          std::sort(edges.begin(), edges.end());
          edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        }
        MetricReport r;
        if (x.rows() >= 2) r.nd = node_distribution(x);
        r.ulcv = ulcv(x, std::span<const IndexPair>(edges));
        auto full = metrics_to_json(r);
        out = {{"nd", full["nd"]}, {"ulcv", full["ulcv"]}};
      } else {
        if (met_node.empty()) throw UsageError("pass --layout FILE or --node ID");
        const auto ws = Workspace::open(require_workspace(met_ws));
        VisualizeOptions vo;
        vo.threads = threads;
        if (*met_seed_opt) vo.seed = met_seed;
        out = metrics_to_json(visualize(ws, parse_supernode_id(ws.hierarchy(), met_node), vo).metrics);
      }
      std::cout << out.dump() << '\n';
    } else if (*srv) {
      ServiceOptions so;
      so.cache_capacity = srv_cache;
      so.engine_threads = threads;
      Service service(Workspace::open(require_workspace(srv_ws)), so);
      service.serve(srv_host, srv_port, [&](int port) {
        std::cerr << "listening on http://" << srv_host << ':' << port << '\n';
      });
    }
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
