#include "tkg/engine.hpp"

#include <chrono>

#include "tkg/text.hpp"

namespace tkg {

namespace {

using Steady = std::chrono::steady_clock;

double ms_since(Steady::time_point t) {
  return std::chrono::duration<double, std::milli>(Steady::now() - t).count();
}

template <class Id>
std::vector<RankedList<Id>> lists_of(const CandidateSet& c, RankedList<Id> MethodResults::*member) {
  std::vector<RankedList<Id>> out;
  for (const auto& [_, r] : c.by_method) out.push_back(r.*member);
  return out;
}

std::span<const float> embedding_of(const GraphState& g, const EdgeId& id) {
  const auto* e = g.edge(id);
  return e ? std::span<const float>(e->fact_embedding) : std::span<const float>();
}
std::span<const float> embedding_of(const GraphState& g, const NodeId& id) {
  const auto* n = g.entity(id);
  return n ? std::span<const float>(n->name_embedding) : std::span<const float>();
}
std::span<const float> embedding_of(const GraphState& g, const CommunityId& id) {
  const auto* c = g.community(id);
  return c ? std::span<const float>(c->name_embedding) : std::span<const float>();
}

std::string text_of(const GraphState& g, const EdgeId& id) {
  const auto* e = g.edge(id);
  return e ? e->fact : std::string();
}
std::string text_of(const GraphState& g, const NodeId& id) {
  const auto* n = g.entity(id);
  return n ? n->name + " " + n->summary : std::string();
}
std::string text_of(const GraphState& g, const CommunityId& id) {
  const auto* c = g.community(id);
  return c ? c->name + " " + c->summary : std::string();
}

template <class Id>
RankedList<Id> rerank_one(const GraphState& g, const std::vector<RankedList<Id>>& lists, const Query& query,
                          const RerankerConfig& config, std::span<const float> query_embedding,
                          CrossEncoder* cross_encoder, RerankedSet& out, const char* kind) {
  auto fused = rrf<Id>(lists, config.rrf_k);
  RankedList<Id> ranked;
  switch (config.method) {
    case RerankMethod::Rrf:
      ranked = std::move(fused);
      break;
    case RerankMethod::Mmr: {
      std::vector<MmrCandidate<Id>> cands;
      cands.reserve(fused.size());
      for (const auto& s : fused) {
        auto emb = embedding_of(g, s.id);
        const double rel = query_embedding.empty() || emb.empty() ? s.score : cosine(query_embedding, emb);
        cands.push_back({s.id, rel, emb});
      }
      std::size_t dropped = 0;
      ranked = mmr<Id>(cands, config.mmr_lambda, &dropped);
      if (dropped)
        out.warnings.push_back(std::to_string(dropped) + " " + kind + " candidates without embeddings were dropped");
      break;
    }
    case RerankMethod::EpisodeMentions:
      ranked = episode_mentions(g, fused);
      break;
    case RerankMethod::NodeDistance:
      ranked = node_distance(g, fused, *config.centroid);
      break;
    case RerankMethod::CrossEncoder: {
      if (!cross_encoder) {
        out.fell_back = true;
        out.warnings.push_back("no cross-encoder configured; kept fused order");
        ranked = std::move(fused);
        break;
      }
      std::vector<std::string> texts;
      texts.reserve(fused.size());
      for (const auto& s : fused) texts.push_back(text_of(g, s.id));
      auto res = cross_encode<Id>(*cross_encoder, query.text, fused, texts);
      if (res.fell_back) {
        out.fell_back = true;
        out.warnings.push_back(std::string("cross-encoder failed for ") + kind + ": " + res.error);
      }
      ranked = std::move(res.ranked);
      break;
    }
  }
  if (ranked.size() > query.limit) ranked.resize(query.limit);
  return ranked;
}

}  // namespace

RerankedSet rerank(const GraphState& g, const CandidateSet& candidates, const Query& query,
                   const RerankerConfig& config, std::span<const float> query_embedding, CrossEncoder* cross_encoder) {
  config.validate();
  if (config.centroid) g.require_entity(*config.centroid);
  RerankedSet out;
  out.edges = rerank_one(g, lists_of(candidates, &MethodResults::edges), query, config, query_embedding,
                         cross_encoder, out, "edge");
  out.entities = rerank_one(g, lists_of(candidates, &MethodResults::entities), query, config, query_embedding,
                            cross_encoder, out, "entity");
  out.communities = rerank_one(g, lists_of(candidates, &MethodResults::communities), query, config,
                               query_embedding, cross_encoder, out, "community");
  return out;
}

RetrievalResult retrieve(const GraphState& g, const RetrievalRequest& request, Embedder& embedder,
                         CrossEncoder* cross_encoder) {
  const auto start = Steady::now();
  if (trim(request.query.text).empty()) throw Error(ErrorCode::InvalidArgument, "query text is empty");
  request.query.validate();
  request.reranker.validate();

  Query query = request.query;
  if (!query.embedding) query.embedding = embedder.embed(query.text);

  RetrievalResult result;
  auto t = Steady::now();
  const auto candidates = search(g, query, &embedder);
  result.timings.search_ms = ms_since(t);

  t = Steady::now();
  auto ranked = rerank(g, candidates, query, request.reranker, *query.embedding, cross_encoder);
  result.timings.rerank_ms = ms_since(t);
  result.rerank_fell_back = ranked.fell_back;
  result.warnings = std::move(ranked.warnings);

  t = Steady::now();
  for (const auto& s : ranked.edges) result.edges.push_back(g.require_edge(s.id));
  for (const auto& s : ranked.entities) result.entities.push_back(g.require_entity(s.id));
  for (const auto& s : ranked.communities) result.communities.push_back(g.require_community(s.id));
  result.context = build_context(result.edges, result.entities, result.communities, request.context);
  result.timings.construct_ms = ms_since(t);
  result.timings.total_ms = ms_since(start);
  return result;
}

Engine::Engine(std::unique_ptr<Graph> graph, std::shared_ptr<Extractor> extractor, std::shared_ptr<Embedder> embedder,
               std::shared_ptr<CrossEncoder> cross_encoder, EngineConfig config)
    : graph_(std::move(graph)),
      extractor_(std::move(extractor)),
      embedder_(std::move(embedder)),
      cross_encoder_(std::move(cross_encoder)),
      config_(config),
      communities_(*extractor_, *embedder_, config_.communities),
      pipeline_(*graph_, *extractor_, *embedder_, config_.maintain_communities ? &communities_ : nullptr,
                config_.pipeline) {
  if (embedder_->dimension() != graph_->config().embedding_dim)
    throw Error(ErrorCode::DimensionMismatch, "embedder dimension " + std::to_string(embedder_->dimension()) +
                                                  " does not match graph dimension " +
                                                  std::to_string(graph_->config().embedding_dim));
}

IngestReport Engine::ingest(Episode episode) {
  std::lock_guard lock(ingest_mu_);
  auto report = pipeline_.ingest(std::move(episode));
  if (config_.maintain_communities) report.communities_refreshed = communities_.maybe_full_refresh(*graph_);
  return report;
}

RetrievalResult Engine::retrieve(const RetrievalRequest& request) const {
  auto snap = graph_->snapshot();
  return tkg::retrieve(*snap, request, *embedder_, cross_encoder_.get());
}

std::size_t Engine::refresh_communities() {
  std::lock_guard lock(ingest_mu_);
  return communities_.full_refresh(*graph_);
}

}  // namespace tkg
