#include "pprviz/server.hpp"

#include <deque>
#include <mutex>
#include <shared_mutex>
#include <tuple>

#include <httplib.h>

#include "pprviz/errors.hpp"

namespace pprviz {

struct Service::Impl {
  using Key = std::tuple<SupernodeId, std::uint64_t, Engine, bool>;

  mutable std::shared_mutex mu;
  mutable std::map<Key, std::string> cache;
  mutable std::deque<Key> order;  // insertion order for eviction
  httplib::Server server;
};

Service::Service(Workspace ws, ServiceOptions opts)
    : ws_(std::move(ws)), opts_(opts), impl_(std::make_unique<Impl>()) {}

Service::~Service() = default;

std::size_t Service::cached_responses() const {
  std::shared_lock lock(impl_->mu);
  return impl_->cache.size();
}

namespace {

HttpResult json_result(int status, const nlohmann::json& j) { return {status, j.dump(), "application/json"}; }

HttpResult error_result(int status, const std::string& message) {
  return json_result(status, nlohmann::json{{"error", message}});
}

std::uint64_t parse_seed(const std::string& text) {
  if (text.empty() || text.size() > 20 || text.find_first_not_of("0123456789") != std::string::npos) {
    throw UsageError("bad seed '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw UsageError("bad seed '" + text + "'");
  }
}

bool starts_with(std::string_view s, std::string_view prefix, std::string_view& rest) {
  if (s.substr(0, prefix.size()) != prefix) return false;
  rest = s.substr(prefix.size());
  return true;
}

}  // namespace

HttpResult Service::handle(std::string_view path, const std::map<std::string, std::string>& query) const {
  const auto& h = ws_.hierarchy();
  try {
    std::string_view rest;
    if (path == "/healthz") return {200, "ok", "text/plain"};
    if (path == "/api/hierarchy") {
      const auto& m = ws_.manifest();
      return json_result(200, {{"root", h.root()}, {"levels", h.level_count()}, {"k", h.fanout_bound()},
                               {"n", m.n}, {"m", m.m}});
    }
    if (starts_with(path, "/api/node/", rest)) {
      const auto id = parse_supernode_id(h, rest);
      nlohmann::json children = nlohmann::json::array();
      for (auto c : h.children(id)) children.push_back({{"id", c}, {"leaf_count", h.leaf_count_of(c)}});
      const auto parent = h.parent(id);
      return json_result(200, {{"id", id},
                               {"level", h.level_of(id)},
                               {"parent", parent ? nlohmann::json(*parent) : nlohmann::json(nullptr)},
                               {"children", children}});
    }
    if (starts_with(path, "/api/layout/", rest) || starts_with(path, "/api/metrics/", rest)) {
      const bool metrics_only = path.substr(0, 13) == "/api/metrics/";
      const auto id = parse_supernode_id(h, rest);
      VisualizeOptions vo;
      vo.threads = opts_.engine_threads;
      if (auto it = query.find("seed"); it != query.end()) vo.seed = parse_seed(it->second);
      if (auto it = query.find("engine"); it != query.end()) vo.engine = parse_engine(it->second);
      const bool timing = query.count("timing") && query.at("timing") != "0";
      const std::uint64_t seed = vo.seed.value_or(ws_.default_seed(id));
      vo.seed = seed;

      const Impl::Key key{id, seed, vo.engine, metrics_only};
      const bool cacheable = opts_.cache_capacity > 0 && !timing;
      if (cacheable) {
        std::shared_lock lock(impl_->mu);
        if (auto it = impl_->cache.find(key); it != impl_->cache.end()) return {200, it->second, "application/json"};
      }
      const auto resp = visualize(ws_, id, vo);
      std::string body = metrics_only ? metrics_to_json(resp.metrics).dump() : response_to_json(resp, timing).dump();
      if (cacheable) {
        std::unique_lock lock(impl_->mu);
        if (impl_->cache.emplace(key, body).second) {
          impl_->order.push_back(key);
          while (impl_->cache.size() > opts_.cache_capacity) {
            impl_->cache.erase(impl_->order.front());
            impl_->order.pop_front();
          }
        }
      }
      return {200, std::move(body), "application/json"};
    }
    return error_result(404, "no route for " + std::string(path));
  } catch (const NotFoundError& e) {
    return error_result(404, e.what());
  } catch (const Error& e) {
    return error_result(400, e.what());
  } catch (const std::exception& e) {
    return error_result(500, e.what());
  }
}

void Service::serve(const std::string& host, int port, const std::function<void(int)>& on_ready) {
  auto& srv = impl_->server;
  srv.Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const auto out = handle(req.path, query);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  });
  int bound = port;
  if (port == 0) {
    bound = srv.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
  } else if (!srv.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  }
  if (on_ready) on_ready(bound);
  srv.listen_after_bind();
}

void Service::stop() { impl_->server.stop(); }

}  // namespace pprviz
