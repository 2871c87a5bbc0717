#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "tkg/engine.hpp"
#include "tkg/http_adapters.hpp"

namespace httplib {
class Server;
}

namespace tkg {

/// Service settings. Sources, later ones winning: built-in defaults, the
/// config file (key = value lines), then TKG_<KEY> environment variables.
struct ServiceConfig {
  std::string listen_address = "127.0.0.1";
  int listen_port = 8080;
  /// Directory holding one <graph>.tkg file per graph; empty = in-memory.
  std::string store_path;
  std::string extractor_url;  // empty = built-in rule-based extractor
  int extractor_timeout_ms = 10'000;
  int extractor_retries = 2;
  int extractor_backoff_ms = 100;
  std::string embedder_url;  // empty = built-in hashing embedder
  std::string cross_encoder_url;  // empty = token-overlap scorer
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  std::size_t search_limit = 20;
  std::string search_methods = "cosine,bm25,bfs";
  std::size_t bfs_depth = 2;
  std::size_t recency_episodes = 2;
  std::string reranker = "rrf";
  int rrf_k = 60;
  double mmr_lambda = 0.5;
  bool include_communities = true;
  std::size_t context_window = 4;
  std::size_t entity_candidates = 5;
  std::size_t contradiction_candidates = 10;
  std::size_t community_refresh_threshold = 128;
  std::size_t community_summary_chunk = 20;
  /// Regular expression every graph name must match.
  std::string graph_name_pattern = "[A-Za-z0-9_.-]{1,64}";

  /// Applies one key; throws InvalidArgument for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Throws InvalidArgument on inconsistent settings.
  void validate() const;

  static ServiceConfig from_file(const std::filesystem::path& path, ServiceConfig base);
  /// Applies TKG_* variables from `environ`.
  static ServiceConfig with_env(ServiceConfig base);
  static ServiceConfig load(const std::optional<std::filesystem::path>& file);

  RetrievalRequest default_request() const;
  EngineConfig engine_config() const;
};

/// Owns one Engine per graph name, created on first ingest (or found on disk).
class GraphRegistry {
 public:
  explicit GraphRegistry(ServiceConfig config);

  Engine& get_or_create(const std::string& name);
  /// Null when the graph neither is loaded nor exists in the store.
  Engine* find(const std::string& name);
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  std::unique_ptr<Engine> make_engine(const std::string& name, bool create);

  ServiceConfig config_;
  std::shared_ptr<Extractor> extractor_;
  std::shared_ptr<Embedder> embedder_;
  std::shared_ptr<CrossEncoder> cross_encoder_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<Engine>> engines_;
};

/// HTTP/JSON front end.
///   POST /graphs/{g}/episodes            -> 201 IngestReport
///   POST /graphs/{g}/search              -> edges, entities, communities, context, timings
///   GET  /graphs/{g}/entities/{id}
///   GET  /graphs/{g}/edges/{id}
///   GET  /graphs/{g}/episodes/{id}
///   POST /graphs/{g}/communities/refresh -> {"communities": n}
///   GET  /health
class MemoryService {
 public:
  explicit MemoryService(ServiceConfig config);
  ~MemoryService();

  httplib::Server& server() noexcept { return *server_; }
  GraphRegistry& registry() noexcept { return registry_; }

  /// Binds and serves until stop(); returns false when binding fails.
  bool listen();
  /// Binds to an ephemeral port on `address`; returns the port or -1.
  int bind_any_port(const std::string& address = "127.0.0.1");
  void listen_after_bind();
  void stop();

 private:
  void install_routes();

  GraphRegistry registry_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace tkg
