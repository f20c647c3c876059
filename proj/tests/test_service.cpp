#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include "oracle.hpp"
#include "pprviz/bench.hpp"
#include "pprviz/errors.hpp"
#include "pprviz/render.hpp"
#include "pprviz/server.hpp"
#include "pprviz/visualize.hpp"
#include "pprviz/workspace.hpp"

// after Eigen: resolv.h defines a _res macro that clashes with Eigen internals
#include <httplib.h>

using namespace pprviz;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("pprviz_service_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_graph(const fs::path& dir, const DirectedGraph& g) {
  const auto path = dir / "graph.el";
  std::ofstream out(path);
  write_edge_list(g, out);
  return path;
}

Workspace make_workspace(const std::string& name, const DirectedGraph& g, std::uint32_t k = 5) {
  const auto dir = scratch(name);
  PreprocessOptions o;
  o.input = write_graph(dir, g);
  o.out_dir = dir / "ws";
  o.params = PprParams::for_fanout(k);
  preprocess(o);
  return Workspace::open(o.out_dir);
}

}  // namespace

TEST_CASE("preprocess writes a manifest and is idempotent") {
  const auto dir = scratch("idem");
  PreprocessOptions o;
  o.input = write_graph(dir, synthetic::two_triangles(true));
  o.out_dir = dir / "ws";
  o.params = PprParams::for_fanout(5);
  const auto first = preprocess(o);
  CHECK(!first.up_to_date);
  CHECK(first.manifest.n == 6);
  CHECK(first.manifest.levels == 3);
  for (const char* f : {"graph.pvgz", "hierarchy.json", "dpr.bin", "manifest.json"}) CHECK(fs::exists(o.out_dir / f));
  const auto before = fs::last_write_time(o.out_dir / "dpr.bin");

  const auto second = preprocess(o);
  CHECK(second.up_to_date);
  CHECK(second.manifest == first.manifest);
  CHECK(fs::last_write_time(o.out_dir / "dpr.bin") == before);

  o.params = PprParams::for_fanout(25);
  CHECK(!preprocess(o).up_to_date);

  const auto ws = Workspace::open(o.out_dir);
  CHECK(ws.hierarchy().level_count() == 2);
  CHECK(ws.manifest().params.k == 25);
  CHECK(!ws.content_hash().empty());
  CHECK(ws.default_seed(ws.hierarchy().root()) == ws.default_seed(ws.hierarchy().root()));
}

TEST_CASE("two-triangle workspace has two level-1 supernodes under the root") {
  const auto ws = make_workspace("tri", synthetic::two_triangles(true));
  const auto& h = ws.hierarchy();
  CHECK(h.level_size(1) == 2);
  CHECK(h.children(h.root()).size() == 2);
}

TEST_CASE("manifest JSON round-trip") {
  Manifest m;
  m.input = "in.el";
  m.input_sha256 = sha256_hex("abc");
  m.params = PprParams::for_fanout(7);
  m.n = 10;
  m.m = 20;
  m.levels = 3;
  m.root = 13;
  m.files = {{"dpr.bin", "00"}, {"graph.pvgz", "11"}};
  m.created = "2026-01-01T00:00:00Z";
  CHECK(manifest_from_json(manifest_to_json(m)) == m);
  CHECK(m.input_sha256 == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("tampered workspace files are rejected") {
  const auto dir = scratch("tamper");
  PreprocessOptions o;
  o.input = write_graph(dir, synthetic::path(10));
  o.out_dir = dir / "ws";
  preprocess(o);
  {
    std::ofstream(o.out_dir / "dpr.bin", std::ios::app) << "x";
  }
  CHECK_THROWS_AS(Workspace::open(o.out_dir), Error);
  CHECK_THROWS_AS(Workspace::open(dir / "missing"), Error);
}

TEST_CASE("visualize is deterministic and engine independent in shape") {
  const auto ws = make_workspace("vis", synthetic::two_block_sbm(80, 0.3, 0.02, 1));
  const auto root = ws.hierarchy().root();
  const auto a = visualize(ws, root);
  const auto b = visualize(ws, root);
  CHECK(response_to_json(a).dump() == response_to_json(b).dump());
  CHECK(a.seed == ws.default_seed(root));
  CHECK(a.coords.rows() == static_cast<Eigen::Index>(a.children.size()));
  CHECK(a.coords.cwiseAbs().maxCoeff() == doctest::Approx(1.0));

  VisualizeOptions o;
  o.seed = 99;
  for (Engine e : {Engine::taupush, Engine::gfp_only, Engine::gfra, Engine::pi_oracle}) {
    o.engine = e;
    const auto r = visualize(ws, root, o);
    CHECK(r.seed == 99);
    CHECK(r.children.size() == a.children.size());
    CHECK(r.super_edges == a.super_edges);
    CHECK(parse_engine(engine_name(e)) == e);
  }
  CHECK_THROWS_AS(parse_engine("nope"), UsageError);
  CHECK_THROWS_AS(visualize(ws, 0), UsageError);
  CHECK_THROWS_AS(visualize(ws, 100000), NotFoundError);
  CHECK(parse_supernode_id(ws.hierarchy(), "root") == root);
  CHECK_THROWS_AS(parse_supernode_id(ws.hierarchy(), "12x"), UsageError);
}

TEST_CASE("response JSON layout") {
  const auto ws = make_workspace("json", synthetic::power_law(150, 2, 3));
  const auto r = visualize(ws, ws.hierarchy().root());
  const auto j = response_to_json(r);
  for (const char* key : {"id", "level", "seed", "engine", "children", "ids", "xy", "super_edges", "stress",
                          "iterations", "metrics", "counters"}) {
    CHECK(j.contains(key));
  }
  CHECK(!j.contains("timing"));
  CHECK(response_to_json(r, true).contains("timing"));
  CHECK(j["xy"].size() == r.children.size());
}

TEST_CASE("single-level mode") {
  const auto g = synthetic::star(12);
  std::vector<std::uint64_t> ids(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) ids[v] = 100 + v;
  const auto r = visualize_single_level(g, ids, PprParams::for_fanout(5));
  CHECK(r.children.size() == 13);
  CHECK(r.children[0].label == "v100");
  CHECK(r.super_edges.size() == 24);
  CHECK_THROWS_AS(visualize_single_level(g, ids, PprParams::for_fanout(5), {}, 5), UsageError);
}

TEST_CASE("service routes and errors") {
  Service svc(make_workspace("routes", synthetic::two_block_sbm(80, 0.3, 0.02, 1)));
  CHECK(svc.handle("/healthz").body == "ok");
  const auto h = nlohmann::json::parse(svc.handle("/api/hierarchy").body);
  CHECK(h["n"] == 80);
  const auto node = nlohmann::json::parse(svc.handle("/api/node/root").body);
  CHECK(node["parent"].is_null());
  CHECK(!node["children"].empty());

  const auto first = svc.handle("/api/layout/root", {{"seed", "5"}});
  CHECK(first.status == 200);
  CHECK(svc.cached_responses() == 1);
  CHECK(svc.handle("/api/layout/root", {{"seed", "5"}}).body == first.body);
  CHECK(svc.cached_responses() == 1);
  CHECK(nlohmann::json::parse(svc.handle("/api/layout/root", {{"seed", "5"}, {"timing", "1"}}).body).contains("timing"));
  CHECK(nlohmann::json::parse(svc.handle("/api/metrics/root").body).contains("nd_bound"));

  CHECK(svc.handle("/api/layout/99999").status == 404);
  CHECK(svc.handle("/api/layout/0").status == 400);
  CHECK(svc.handle("/api/layout/root", {{"engine", "bogus"}}).status == 400);
  CHECK(svc.handle("/api/layout/root", {{"seed", "abc"}}).status == 400);
  CHECK(svc.handle("/nowhere").status == 404);
  CHECK(nlohmann::json::parse(svc.handle("/nowhere").body).contains("error"));
}

TEST_CASE("HTTP serving under concurrent requests") {
  Service svc(make_workspace("http", synthetic::power_law(150, 2, 3)));
  std::promise<int> ready;
  std::thread th([&] { svc.serve("127.0.0.1", 0, [&](int port) { ready.set_value(port); }); });
  const int port = ready.get_future().get();
  const auto expected = svc.handle("/api/layout/root", {{"seed", "3"}}).body;

  std::vector<std::future<std::pair<int, std::string>>> calls;
  for (int i = 0; i < 16; ++i) {
    calls.push_back(std::async(std::launch::async, [port, i] {
      httplib::Client cli("127.0.0.1", port);
      const auto res = cli.Get(i % 4 == 3 ? "/api/layout/99999" : "/api/layout/root?seed=3");
      return res ? std::make_pair(res->status, res->body) : std::make_pair(-1, std::string());
    }));
  }
  for (int i = 0; i < 16; ++i) {
    const auto [status, body] = calls[i].get();
    if (i % 4 == 3) {
      CHECK(status == 404);
    } else {
      CHECK(status == 200);
      CHECK(body == expected);
    }
  }
  svc.stop();
  th.join();
}

TEST_CASE("rendering") {
  const auto ws = make_workspace("render", synthetic::two_triangles(true));
  const auto r = visualize(ws, ws.hierarchy().root());
  const auto svg = layout_to_svg(r);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  const auto csv = layout_to_csv(r);
  CHECK(csv.rfind("id,label,leaf_count,x,y\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  Eigen::MatrixXd m(2, 2);
  m << 0, 0.1, 0.1, 0;
  CHECK(matrix_to_csv(m) == "0,0.10000000000000001\n0.10000000000000001,0\n");
}

TEST_CASE("zoom paths and bench") {
  const auto ws = make_workspace("bench", synthetic::power_law(500, 3, 4), 5);
  const auto& h = ws.hierarchy();
  const auto paths = random_zoom_paths(h, 5, 1);
  CHECK(paths == random_zoom_paths(h, 5, 1));
  for (const auto& p : paths) {
    REQUIRE(!p.empty());
    CHECK(p.front() == h.root());
    for (std::size_t i = 1; i < p.size(); ++i) CHECK(h.parent(p[i]) == p[i - 1]);
    for (auto id : p) CHECK(!h.is_leaf(id));
  }

  BenchOptions o;
  o.paths = 3;
  o.engines = {Engine::taupush, Engine::gfp_only};
  const auto report = run_bench(ws, o);
  CHECK(!report.rows.empty());
  CHECK(report.samples.size() % 2 == 0);
  const auto csv = bench_csv(report);
  CHECK(csv.rfind("level,engine,paths,mean_ms,median_ms,pdist_ms,layout_ms\n", 0) == 0);
  o.reuse_visits = true;
  const auto reused = run_bench(ws, o);
  REQUIRE(reused.samples.size() == report.samples.size());
  for (std::size_t i = 0; i < reused.samples.size(); ++i) {
    CHECK(reused.samples[i].node == report.samples[i].node);
    CHECK(reused.samples[i].path == report.samples[i].path);
    CHECK(reused.samples[i].counters.push.edge_ops == report.samples[i].counters.push.edge_ops);
  }
  const auto second_root = 2 * random_zoom_paths(h, 3, o.seed)[0].size();  // path 1, root, taupush
  CHECK(reused.samples[second_root].path == 1);
  CHECK(reused.samples[second_root].timing.total_ms == reused.samples[0].timing.total_ms);
  o.paths = 0;
  CHECK_THROWS_AS(run_bench(ws, o), UsageError);
}
