#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pprviz/graph.hpp"
#include "pprviz/hierarchy.hpp"
#include "pprviz/ppr.hpp"

namespace pprviz {

/// Hex SHA-256 of a file's bytes; throws IoError if unreadable.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view data);

/// Preprocessing record written as manifest.json.
struct Manifest {
  std::string input;
  std::string input_sha256;
  bool symmetrize = false;
  bool gbp_cache = true;
  PprParams params;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t levels = 0;
  std::uint64_t root = 0;
  std::uint64_t cached_targets = 0;
  std::map<std::string, std::string> files;  // workspace-relative name -> sha256
  std::string created;                        // UTC, ISO 8601

  friend bool operator==(const Manifest&, const Manifest&);
};

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

struct PreprocessOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  PprParams params;
  bool symmetrize = false;
  bool build_gbp_cache = true;
};

struct PreprocessResult {
  Manifest manifest;
  bool up_to_date = false;
};

/// Loads the edge list, builds the hierarchy, DPR index and GBP cache, and
/// writes them with a manifest. Returns early with up_to_date set when
/// the existing manifest matches the input hash, parameters and files.
PreprocessResult preprocess(const PreprocessOptions& opts);

/// A preprocessed workspace, loaded read-only.
class Workspace {
 public:
  /// Throws IoError/ParseError if files are missing, corrupt, or do not
  /// match the manifest hashes.
  static Workspace open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const { return dir_; }
  const Manifest& manifest() const { return manifest_; }
  const DirectedGraph& graph() const { return graph_; }
  const SupergraphHierarchy& hierarchy() const { return hierarchy_; }
  const DprIndex& dpr() const { return dpr_; }
  const std::vector<std::uint64_t>& original_ids() const { return original_ids_; }
  const PprParams& params() const { return manifest_.params; }

  /// Hash over the manifest's file hashes and parameters.
  const std::string& content_hash() const { return content_hash_; }
  /// Layout seed derived from (content hash, supernode id).
  std::uint64_t default_seed(SupernodeId id) const;

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
  DirectedGraph graph_;
  SupergraphHierarchy hierarchy_;
  DprIndex dpr_;
  std::vector<std::uint64_t> original_ids_;
  std::string content_hash_;
};

}  // namespace pprviz
