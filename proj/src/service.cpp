#include "hashviz/service.hpp"

#include "hashviz/static_assets.hpp"
#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace hashviz {

namespace {

using nlohmann::json;

HttpReply json_reply(int status, const json& doc) {
  return {status, "application/json", doc.dump()};
}

// Decimal value as printed in the atlas file, so the API and the file agree.
double display(float value) { return std::stod(format_real(value)); }

double round6(double x) { return std::round(x * 1e6) / 1e6; }

// Lets at most `slots` callers in at once, strictly in arrival order. Keeps
// CPU-bound queries from time-slicing each other when connections outnumber
// cores, so latency under load tracks queue position.
class FifoGate {
 public:
  explicit FifoGate(std::size_t slots) : free_(slots) {}

  void acquire() {
    std::unique_lock lock(mu_);
    if (free_ > 0 && waiting_.empty()) {
      --free_;
      return;
    }
    Waiter self;
    waiting_.push_back(&self);
    self.cv.wait(lock, [&] { return self.admitted; });
  }

  void release() {
    std::lock_guard lock(mu_);
    if (waiting_.empty()) {
      ++free_;
      return;
    }
    Waiter* next = waiting_.front();
    waiting_.pop_front();
    next->admitted = true;
    next->cv.notify_one();
  }

 private:
  struct Waiter {
    std::condition_variable cv;
    bool admitted = false;
  };
  std::mutex mu_;
  std::size_t free_;
  std::deque<Waiter*> waiting_;
};

}  // namespace

void ServiceConfig::validate() const {
  if (default_k < 1 || default_k > max_k) {
    throw std::invalid_argument("service requires 1 <= default_k <= max_k");
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
  if (threads < 1) throw std::invalid_argument("service requires threads >= 1");
}

std::string neighbors_json(const NeighborResult& result) {
  json neighbors = json::array();
  for (const auto& n : result.neighbors) {
    neighbors.push_back({{"tag", n.tag},
                         {"similarity", round6(n.similarity)},
                         {"x", display(n.x)},
                         {"y", display(n.y)}});
  }
  json doc = {{"query", result.query},
              {"x", display(result.x)},
              {"y", display(result.y)},
              {"neighbors", std::move(neighbors)}};
  return doc.dump();
}

struct Service::Impl {
  httplib::Server server;
  std::atomic<bool> bound{false};
  FifoGate queries{std::max(1u, std::thread::hardware_concurrency())};
};

Service::Service(ServiceConfig config)
    : impl_(std::make_unique<Impl>()), config_(std::move(config)) {
  config_.validate();
  auto& svr = impl_->server;

  svr.new_task_queue = [n = config_.threads] { return new httplib::ThreadPool(n); };
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  // No SO_REUSEPORT: a second server on a busy port must fail to bind.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });

  svr.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
    auto reply = health();
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  });

  svr.Get("/api/neighbors", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> tag;
    std::optional<std::string> k;
    if (req.has_param("tag")) tag = req.get_param_value("tag");
    if (req.has_param("k")) k = req.get_param_value("k");
    auto reply = neighbors(tag, k);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  });

  svr.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.status = 204;
  });

  if (config_.assets_dir) {
    if (!svr.set_mount_point("/", config_.assets_dir->string())) {
      throw std::invalid_argument("assets directory '" + config_.assets_dir->string() +
                                  "' does not exist");
    }
  } else {
    for (const auto& asset : bundled_assets()) {
      const std::string content(asset.content);
      const std::string type(asset.content_type);
      svr.Get(std::string(asset.path), [content, type](const httplib::Request&,
                                                       httplib::Response& res) {
        res.set_content(content, type);
      });
    }
  }

  svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (req.path.starts_with("/api/")) {
      res.set_content(json{{"error", "not-found"}}.dump(), "application/json");
    } else {
      res.set_content("not found\n", "text/plain");
    }
  });
}

Service::~Service() { stop(); }

void Service::set_atlas(std::shared_ptr<const HashtagAtlas> atlas) {
  std::atomic_store(&atlas_, std::move(atlas));
}

HttpReply Service::health() const {
  auto atlas = std::atomic_load(&atlas_);
  if (!atlas) return json_reply(503, {{"status", "loading"}});
  return json_reply(200, {{"status", "ok"}, {"n", atlas->size()}, {"dim", atlas->dim()}});
}

HttpReply Service::neighbors(const std::optional<std::string>& tag,
                             const std::optional<std::string>& k) const {
  auto atlas = std::atomic_load(&atlas_);
  if (!atlas) return json_reply(503, {{"error", "loading"}});
  if (!tag || tag->empty()) return json_reply(400, {{"error", "missing-tag"}});

  std::size_t count = config_.default_k;
  if (k) {
    long long parsed = 0;
    auto [ptr, ec] = std::from_chars(k->data(), k->data() + k->size(), parsed);
    if (k->empty() || ec != std::errc{} || ptr != k->data() + k->size() || parsed < 1) {
      return json_reply(400, {{"error", "invalid-k"}});
    }
    count = static_cast<std::size_t>(parsed);
  }
  count = std::min(count, config_.max_k);

  impl_->queries.acquire();
  struct Release {
    FifoGate& gate;
    ~Release() { gate.release(); }
  } release{impl_->queries};

  auto result = top_k(*atlas, *tag, count);
  if (!result) {
    return json_reply(404, {{"error", "unknown-hashtag"}, {"query", normalize_query(*tag)}});
  }
  return {200, "application/json", neighbors_json(*result)};
}

int Service::bind() {
  int port = config_.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(config_.host);
  } else if (!impl_->server.bind_to_port(config_.host, port)) {
    port = -1;
  }
  impl_->bound = port > 0;
  return port;
}

bool Service::listen() {
  if (!impl_->bound) return false;
  return impl_->server.listen_after_bind();
}

void Service::stop() {
  if (impl_) impl_->server.stop();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace hashviz
