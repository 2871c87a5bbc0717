#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tkg/communities.hpp"
#include "tkg/embedding.hpp"
#include "tkg/error.hpp"
#include "tkg/extractor.hpp"
#include "tkg/graph.hpp"

namespace tkg {

struct PipelineConfig {
  /// Previous episodes handed to the extractor.
  std::size_t context_window = 4;
  /// Candidates per channel (cosine, full text) for entity resolution.
  std::size_t entity_candidates = 5;
  /// Related edges checked for contradictions.
  std::size_t contradiction_candidates = 10;
  /// Fan out data-independent extractor calls (temporal annotation).
  bool parallel_calls = true;
};

struct IngestReport {
  EpisodeId episode;
  std::size_t entities_added = 0;
  std::size_t entities_merged = 0;
  std::size_t edges_added = 0;
  std::size_t edges_merged = 0;
  std::size_t edges_invalidated = 0;
  std::vector<NodeId> entities;
  std::vector<EdgeId> edges;
  std::vector<EdgeId> invalidated;
  std::vector<std::string> warnings;
  bool communities_refreshed = false;
};

/// Ingestion failed; nothing from the episode was kept. `partial` shows how
/// far the pipeline got.
class IngestError : public Error {
 public:
  IngestError(ErrorCode code, const std::string& message, IngestReport partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const IngestReport& partial() const noexcept { return partial_; }

 private:
  IngestReport partial_;
};

/// An extracted surface form and the node it resolved to.
struct ResolvedEntity {
  ExtractedEntity extracted;
  NodeId node;
  bool created = false;
};

/// Episode -> entities -> facts -> temporal bounds -> invalidation ->
/// community extension, atomically per episode.
class IngestPipeline {
 public:
  IngestPipeline(Graph& graph, Extractor& extractor, Embedder& embedder, CommunityManager* communities = nullptr,
                 PipelineConfig config = {})
      : graph_(&graph), extractor_(&extractor), embedder_(&embedder), communities_(communities), config_(config) {}

  /// Throws IngestError (AlreadyIngested, EmptyContent, ExtractorFailure, ...).
  IngestReport ingest(Episode episode);

  EpisodeContext episode_context(const GraphState& g, const Episode& current) const;

  std::vector<ResolvedEntity> extract_and_resolve_entities(Transaction& tx, const EpisodeContext& ctx,
                                                           IngestReport& report);
  std::vector<EdgeId> extract_and_resolve_facts(Transaction& tx, const EpisodeContext& ctx,
                                                std::span<const ResolvedEntity> entities, IngestReport& report);
  SemanticEdge annotate_temporal(SemanticEdge edge, const EpisodeContext& ctx,
                                 std::vector<std::string>* warnings = nullptr);
  std::vector<EdgeId> invalidate_contradicted(Transaction& tx, const SemanticEdge& new_edge,
                                              std::vector<std::string>* warnings = nullptr);

  const PipelineConfig& config() const noexcept { return config_; }

 private:
  Graph* graph_;
  Extractor* extractor_;
  Embedder* embedder_;
  CommunityManager* communities_;
  PipelineConfig config_;
};

/// Builds the EdgeView the extractor sees for a stored edge.
EdgeView make_edge_view(const GraphState& g, const SemanticEdge& edge);

}  // namespace tkg
