#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracle.hpp"
#include "pprviz/errors.hpp"
#include "pprviz/graph.hpp"

using namespace pprviz;

namespace {

LoadedGraph parse(const std::string& text, bool symmetrize = false) {
  std::istringstream in(text);
  return parse_edge_list(in, symmetrize);
}

void check_invariants(const DirectedGraph& g) {
  std::uint64_t sum = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    CHECK(g.out_degree(v) >= 1);
    CHECK(g.out_neighbors(v).size() == g.out_degree(v));
    sum += g.out_degree(v);
    for (NodeId u : g.out_neighbors(v)) {
      const auto in = g.in_neighbors(u);
      CHECK(std::find(in.begin(), in.end(), v) != in.end());
    }
    for (NodeId u : g.in_neighbors(v)) {
      const auto out = g.out_neighbors(u);
      CHECK(std::find(out.begin(), out.end(), v) != out.end());
    }
  }
  CHECK(sum == g.edge_count());
}

}  // namespace

TEST_CASE("two-node cycle") {
  const auto g = parse("0 1\n1 0\n").graph;
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 2);
  CHECK(g.out_degree(0) == 1);
  CHECK(g.out_degree(1) == 1);
  CHECK(std::vector<NodeId>(g.neighbors(0, Direction::out).begin(), g.neighbors(0, Direction::out).end()) ==
        std::vector<NodeId>{1});
  CHECK(std::vector<NodeId>(g.neighbors(1, Direction::in).begin(), g.neighbors(1, Direction::in).end()) ==
        std::vector<NodeId>{0});
}

TEST_CASE("dangling node gets a self-loop") {
  const auto g = parse("0 1").graph;
  CHECK(g.edge_count() == 2);
  CHECK(g.out_degree(1) == 1);
  CHECK(g.out_neighbors(1)[0] == 1);
}

TEST_CASE("duplicates collapse and comments are skipped") {
  const auto g = parse("0 1\n0 1\n# comment\n").graph;
  CHECK(g.edge_count() == 2);
}

TEST_CASE("CRLF, sparse ids and remapping") {
  const auto lg = parse("10 30\r\n30 10\r\n30 20\r\n");
  CHECK(lg.graph.node_count() == 3);
  CHECK(lg.original_ids == std::vector<std::uint64_t>{10, 20, 30});
  // 20 had no out-edges
  CHECK(lg.graph.out_neighbors(1)[0] == 1);
}

TEST_CASE("self-loops are preserved") {
  const auto g = parse("0 0\n0 1\n1 0\n").graph;
  CHECK(g.out_degree(0) == 2);
}

TEST_CASE("symmetrize mirrors edges") {
  const auto g = parse("0 1\n1 2\n", true).graph;
  CHECK(g.edge_count() == 4);
  check_invariants(g);
}

TEST_CASE("parse errors carry the line number") {
  CHECK_THROWS_WITH_AS(parse("0 1\n1 x\n"), doctest::Contains("line 2"), ParseError);
  CHECK_THROWS_WITH_AS(parse("0 1 2\n"), doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse("-1 2\n"), doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_WITH_AS(parse("# nothing\n"), doctest::Contains("empty graph"), ParseError);
  CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("empty graph"), ParseError);
}

TEST_CASE("neighbors range check") {
  const auto g = parse("0 1\n1 0\n").graph;
  CHECK_THROWS_AS(g.neighbors(2, Direction::out), std::out_of_range);
}

TEST_CASE("missing file names the path") {
  CHECK_THROWS_WITH_AS(load_edge_list("/nonexistent/graph.el", false), doctest::Contains("/nonexistent/graph.el"),
                       IoError);
}

TEST_CASE("corpus graphs satisfy adjacency invariants and round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "pprviz_test_graph";
  std::filesystem::create_directories(dir);
  for (const auto& item : oracle::corpus()) {
    CAPTURE(item.name);
    check_invariants(item.graph);

    std::ostringstream text;
    write_edge_list(item.graph, text);
    std::istringstream in(text.str());
    CHECK(parse_edge_list(in, false).graph == item.graph);

    const auto bin = dir / (item.name + ".pvgz");
    write_binary_graph(item.graph, bin);
    CHECK(read_binary_graph(bin) == item.graph);
  }
}

TEST_CASE("binary cache rejects bad magic and truncation") {
  const auto path = std::filesystem::temp_directory_path() / "pprviz_bad.pvgz";
  {
    std::ofstream(path) << "NOPE1xxxxxxxx";
  }
  CHECK_THROWS_AS(read_binary_graph(path), ParseError);
  write_binary_graph(parse("0 1\n1 0\n").graph, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  CHECK_THROWS_AS(read_binary_graph(path), ParseError);
}
