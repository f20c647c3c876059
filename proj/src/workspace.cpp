#include "pprviz/workspace.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "pprviz/errors.hpp"

namespace pprviz {

namespace fs = std::filesystem;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out.push_back(digits[md[i] >> 4]);
      out.push_back(digits[md[i] & 15]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

std::string sha256_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& f : files) listing += f.filename().string() + ":" + sha256_file(f) + "\n";
  return sha256_hex(listing);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool same_params(const PprParams& a, const PprParams& b) {
  return a.alpha == b.alpha && a.epsilon == b.epsilon && a.delta == b.delta && a.k == b.k && a.p_f == b.p_f &&
         a.pi_tolerance == b.pi_tolerance;
}

std::map<std::string, std::string> hash_files(const fs::path& dir, bool with_gbp) {
  std::map<std::string, std::string> files;
  for (const char* name : {"graph.pvgz", "hierarchy.json", "dpr.bin"}) files[name] = sha256_file(dir / name);
  if (with_gbp) files["gbp"] = sha256_dir(dir / "gbp");
  return files;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

bool operator==(const Manifest& a, const Manifest& b) {
  return a.input == b.input && a.input_sha256 == b.input_sha256 && a.symmetrize == b.symmetrize &&
         a.gbp_cache == b.gbp_cache && same_params(a.params, b.params) && a.n == b.n && a.m == b.m &&
         a.levels == b.levels && a.root == b.root && a.cached_targets == b.cached_targets && a.files == b.files &&
         a.created == b.created;
}

nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::json j;
  j["input"] = m.input;
  j["input_sha256"] = m.input_sha256;
  j["symmetrize"] = m.symmetrize;
  j["gbp_cache"] = m.gbp_cache;
  j["params"] = {{"alpha", m.params.alpha}, {"epsilon", m.params.epsilon}, {"delta", m.params.delta},
                 {"k", m.params.k},         {"p_f", m.params.p_f},         {"pi_tolerance", m.params.pi_tolerance}};
  j["n"] = m.n;
  j["m"] = m.m;
  j["levels"] = m.levels;
  j["root"] = m.root;
  j["cached_targets"] = m.cached_targets;
  j["files"] = m.files;
  j["created"] = m.created;
  return j;
}

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    Manifest m;
    m.input = j.at("input").get<std::string>();
    m.input_sha256 = j.at("input_sha256").get<std::string>();
    m.symmetrize = j.at("symmetrize").get<bool>();
    m.gbp_cache = j.at("gbp_cache").get<bool>();
    const auto& p = j.at("params");
    m.params.alpha = p.at("alpha").get<double>();
    m.params.epsilon = p.at("epsilon").get<double>();
    m.params.delta = p.at("delta").get<double>();
    m.params.k = p.at("k").get<std::uint32_t>();
    m.params.p_f = p.at("p_f").get<double>();
    m.params.pi_tolerance = p.at("pi_tolerance").get<double>();
    m.n = j.at("n").get<std::uint64_t>();
    m.m = j.at("m").get<std::uint64_t>();
    m.levels = j.at("levels").get<std::uint64_t>();
    m.root = j.at("root").get<std::uint64_t>();
    m.cached_targets = j.at("cached_targets").get<std::uint64_t>();
    m.files = j.at("files").get<std::map<std::string, std::string>>();
    m.created = j.at("created").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

void write_manifest(const Manifest& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PreprocessResult preprocess(const PreprocessOptions& opts) {
  opts.params.validate();
  if (!fs::is_regular_file(opts.input)) throw IoError("input not found: " + opts.input.string());
  const std::string input_hash = sha256_file(opts.input);
  const fs::path manifest_path = opts.out_dir / "manifest.json";

  if (fs::exists(manifest_path)) {
    try {
      Manifest old = read_manifest(manifest_path);
      if (old.input_sha256 == input_hash && old.symmetrize == opts.symmetrize &&
          old.gbp_cache == opts.build_gbp_cache && same_params(old.params, opts.params) &&
          hash_files(opts.out_dir, old.gbp_cache) == old.files) {
        return {std::move(old), true};
      }
    } catch (const Error&) {
      // stale or damaged workspace: rebuild
    }
  }

  std::error_code ec;
  fs::create_directories(opts.out_dir, ec);
  if (ec) throw IoError("cannot create " + opts.out_dir.string() + ": " + ec.message());

  const auto loaded = load_edge_list(opts.input, opts.symmetrize);
  const auto& g = loaded.graph;
  write_binary_graph(g, opts.out_dir / "graph.pvgz");
  const auto h = build_hierarchy(g, opts.params.k);
  save_hierarchy(h, loaded.original_ids, opts.out_dir / "hierarchy.json");
  auto dpr = compute_dpr(g, opts.params);
  write_dpr(dpr, opts.out_dir / "dpr.bin");
  if (opts.build_gbp_cache) {
    build_gbp_cache(g, opts.params, dpr);
    write_gbp_cache(dpr.gbp_cache, opts.out_dir / "gbp");
  } else {
    fs::remove_all(opts.out_dir / "gbp", ec);
  }

  Manifest m;
  m.input = opts.input.string();
  m.input_sha256 = input_hash;
  m.symmetrize = opts.symmetrize;
  m.gbp_cache = opts.build_gbp_cache;
  m.params = opts.params;
  m.n = g.node_count();
  m.m = g.edge_count();
  m.levels = h.level_count();
  m.root = h.root();
  m.cached_targets = dpr.gbp_cache.size();
  m.files = hash_files(opts.out_dir, opts.build_gbp_cache);
  m.created = utc_now();
  write_manifest(m, manifest_path);
  return {std::move(m), false};
}

Workspace Workspace::open(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("workspace not found: " + dir.string());
  Workspace ws;
  ws.dir_ = dir;
  ws.manifest_ = read_manifest(dir / "manifest.json");
  const auto actual = hash_files(dir, ws.manifest_.gbp_cache);
  for (const auto& [name, hash] : ws.manifest_.files) {
    const auto it = actual.find(name);
    if (it == actual.end() || it->second != hash) throw ParseError((dir / name).string() + ": hash does not match manifest");
  }
  ws.graph_ = read_binary_graph(dir / "graph.pvgz");
  ws.hierarchy_ = load_hierarchy(dir / "hierarchy.json", &ws.original_ids_);
  ws.dpr_ = read_dpr(dir / "dpr.bin");
  if (ws.manifest_.gbp_cache) ws.dpr_.gbp_cache = read_gbp_cache(dir / "gbp");
  if (ws.hierarchy_.leaf_count() != ws.graph_.node_count() || ws.dpr_.tau.size() != ws.graph_.node_count()) {
    throw ParseError(dir.string() + ": index files disagree on node count");
  }

  std::string basis;
  for (const auto& [name, hash] : ws.manifest_.files) basis += name + ":" + hash + "\n";
  basis += manifest_to_json(ws.manifest_).at("params").dump();
  ws.content_hash_ = sha256_hex(basis);
  return ws;
}

std::uint64_t Workspace::default_seed(SupernodeId id) const {
  const auto h = sha256_hex(content_hash_ + "/" + std::to_string(id));
  return std::stoull(h.substr(0, 16), nullptr, 16);
}

}  // namespace pprviz
