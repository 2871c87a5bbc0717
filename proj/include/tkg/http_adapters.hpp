#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "tkg/embedding.hpp"
#include "tkg/extractor.hpp"
#include "tkg/rerank.hpp"

namespace httplib {
class Server;
}

namespace tkg {

struct HttpOptions {
  std::chrono::milliseconds timeout{10'000};
  /// Extra attempts after the first failure.
  int retries = 2;
  /// Delay before the first retry; doubles on each further attempt.
  std::chrono::milliseconds backoff{100};
};

/// POSTs JSON to `base_url + path` with timeout and exponential-backoff
/// retries. Connection failures and 5xx responses are retried; after the
/// last attempt AdapterUnavailable is thrown. 4xx and malformed bodies throw
/// ExtractorFailure immediately.
class JsonHttpClient {
 public:
  JsonHttpClient(std::string base_url, HttpOptions options);

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::string base_url_;
  std::string scheme_host_port_;
  std::string prefix_;
  HttpOptions options_;
};

/// Extractor backed by a remote service: one endpoint per operation, bodies
/// carry the prompt slots (previous_messages, current_message,
/// existing_nodes, new_node, reference_timestamp, fact).
class HttpExtractor final : public Extractor {
 public:
  HttpExtractor(std::string base_url, HttpOptions options = {}) : client_(std::move(base_url), options) {}

  std::vector<ExtractedEntity> extract_entities(const EpisodeContext& ctx,
                                                std::span<const ExtractedEntity> already_extracted) override;
  EntityResolution resolve_entity(const EpisodeContext& ctx, std::span<const EntityCandidate> existing,
                                  const ExtractedEntity& candidate) override;
  std::vector<ExtractedFact> extract_facts(const EpisodeContext& ctx,
                                           std::span<const ExtractedEntity> entities) override;
  FactResolution resolve_fact(std::span<const EdgeView> existing, const EdgeView& proposed) override;
  TemporalBounds extract_temporal(const EpisodeContext& ctx, Timestamp reference, const std::string& fact) override;
  std::vector<EdgeId> detect_contradictions(const EdgeView& proposed, std::span<const EdgeView> related) override;
  std::string summarize(std::span<const std::string> texts) override;
  std::string community_name(const std::string& summary) override;

 private:
  JsonHttpClient client_;
};

/// POST {"texts": [...]} -> {"embeddings": [[...], ...]}.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string url, std::size_t dim, HttpOptions options = {});

  std::size_t dimension() const override { return dim_; }
  std::vector<float> embed(std::string_view text) override;
  std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override;

 private:
  JsonHttpClient client_;
  std::string path_;
  std::size_t dim_;
};

/// POST {"query": ..., "texts": [...]} -> {"scores": [...]}.
class HttpCrossEncoder final : public CrossEncoder {
 public:
  HttpCrossEncoder(std::string url, HttpOptions options = {});

  std::vector<double> score(std::string_view query, std::span<const std::string> texts) override;

 private:
  JsonHttpClient client_;
  std::string path_;
};

/// Wire encoding shared by the adapters and the serving side.
namespace wire {
nlohmann::json context_slots(const EpisodeContext& ctx);
EpisodeContext context_from_slots(const nlohmann::json& j);
nlohmann::json edge_view(const EdgeView& e);
EdgeView edge_view_from(const nlohmann::json& j);
}  // namespace wire

/// Serves `extractor` under `prefix` using the same wire format, e.g. to
/// run the rule-based extractor as a stand-alone model service.
void mount_extractor_routes(httplib::Server& server, std::shared_ptr<Extractor> extractor,
                            const std::string& prefix = "");
void mount_embedder_route(httplib::Server& server, std::shared_ptr<Embedder> embedder,
                          const std::string& path = "/embed");
void mount_cross_encoder_route(httplib::Server& server, std::shared_ptr<CrossEncoder> scorer,
                               const std::string& path = "/score");

}  // namespace tkg
