#pragma once

#include "hashviz/atlas.hpp"
#include "hashviz/knn.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace hashviz {

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;
  std::filesystem::path atlas_path;
  std::size_t default_k = kDefaultNeighbors;
  std::size_t max_k = 1000;
  // Request workers. Each keep-alive connection holds one while open.
  std::size_t threads = 64;
  // Overrides the bundled UI when set.
  std::optional<std::filesystem::path> assets_dir;

  void validate() const;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// JSON document for a neighbor query: query, x, y, neighbors[].
std::string neighbors_json(const NeighborResult& result);

/// HTTP front end over an immutable atlas.
///
/// Until an atlas is installed /api/health answers 503 and /api/neighbors
/// answers 503. Handlers never mutate shared state.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void set_atlas(std::shared_ptr<const HashtagAtlas> atlas);

  HttpReply health() const;
  HttpReply neighbors(const std::optional<std::string>& tag,
                      const std::optional<std::string>& k) const;

  // Binds the configured host/port (port 0 picks a free one). Returns the
  // bound port, or -1 on failure.
  int bind();
  // Serves until stop(). Requires a successful bind().
  bool listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ServiceConfig config_;
  std::shared_ptr<const HashtagAtlas> atlas_;
};

}  // namespace hashviz
