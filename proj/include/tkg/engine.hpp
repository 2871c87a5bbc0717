#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tkg/communities.hpp"
#include "tkg/context.hpp"
#include "tkg/embedding.hpp"
#include "tkg/extractor.hpp"
#include "tkg/graph.hpp"
#include "tkg/pipeline.hpp"
#include "tkg/rerank.hpp"
#include "tkg/search.hpp"

namespace tkg {

struct RetrievalRequest {
  Query query;
  RerankerConfig reranker;
  ContextOptions context;
};

struct StageTimings {
  double search_ms = 0;
  double rerank_ms = 0;
  double construct_ms = 0;
  double total_ms = 0;
};

struct RetrievalResult {
  std::vector<SemanticEdge> edges;
  std::vector<EntityNode> entities;
  std::vector<CommunityNode> communities;
  std::string context;
  StageTimings timings;
  bool rerank_fell_back = false;
  std::vector<std::string> warnings;
};

/// Reranking of a candidate set: rank fusion of the per-method lists, then the
/// configured reranker, per result type, truncated to `limit`.
struct RerankedSet {
  RankedList<EdgeId> edges;
  RankedList<NodeId> entities;
  RankedList<CommunityId> communities;
  bool fell_back = false;
  std::vector<std::string> warnings;
};

RerankedSet rerank(const GraphState& g, const CandidateSet& candidates, const Query& query,
                   const RerankerConfig& config, std::span<const float> query_embedding, CrossEncoder* cross_encoder);

/// f(query) = construct(rerank(search(query))) on one snapshot.
RetrievalResult retrieve(const GraphState& g, const RetrievalRequest& request, Embedder& embedder,
                         CrossEncoder* cross_encoder = nullptr);

struct EngineConfig {
  PipelineConfig pipeline;
  CommunityConfig communities;
  bool maintain_communities = true;
};

/// One graph with its ingestion pipeline and retrieval path. Ingestion is
/// serialized; retrieval runs on snapshots and never blocks on ingestion.
class Engine {
 public:
  Engine(std::unique_ptr<Graph> graph, std::shared_ptr<Extractor> extractor, std::shared_ptr<Embedder> embedder,
         std::shared_ptr<CrossEncoder> cross_encoder, EngineConfig config = {});

  IngestReport ingest(Episode episode);
  RetrievalResult retrieve(const RetrievalRequest& request) const;
  /// Full detection and summaries. Returns the community count.
  std::size_t refresh_communities();

  Graph& graph() noexcept { return *graph_; }
  const Graph& graph() const noexcept { return *graph_; }
  GraphSnapshot snapshot() const { return graph_->snapshot(); }
  Embedder& embedder() noexcept { return *embedder_; }
  Extractor& extractor() noexcept { return *extractor_; }
  const EngineConfig& config() const noexcept { return config_; }

 private:
  std::unique_ptr<Graph> graph_;
  std::shared_ptr<Extractor> extractor_;
  std::shared_ptr<Embedder> embedder_;
  std::shared_ptr<CrossEncoder> cross_encoder_;
  EngineConfig config_;
  CommunityManager communities_;
  IngestPipeline pipeline_;
  std::mutex ingest_mu_;
};

}  // namespace tkg
