#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "pprviz/visualize.hpp"
#include "pprviz/workspace.hpp"

namespace pprviz {

struct HttpResult {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ServiceOptions {
  std::size_t cache_capacity = 256;  // layout responses kept; 0 disables
  unsigned engine_threads = 1;
};

/// HTTP front end over a read-only workspace. handle() is the whole API
/// and is usable without a socket; serve() binds it to cpp-httplib.
class Service {
 public:
  explicit Service(Workspace ws, ServiceOptions opts = {});
  ~Service();

  HttpResult handle(std::string_view path, const std::map<std::string, std::string>& query = {}) const;

  /// Binds and blocks until stop(). Port 0 picks a free port; `on_ready`
  /// receives the bound port. Throws IoError if binding fails.
  void serve(const std::string& host, int port, const std::function<void(int)>& on_ready = {});
  void stop();

  const Workspace& workspace() const { return ws_; }
  std::size_t cached_responses() const;

 private:
  struct Impl;
  Workspace ws_;
  ServiceOptions opts_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pprviz
