#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tkg/embedding.hpp"
#include "tkg/graph.hpp"
#include "tkg/inverted_index.hpp"
#include "tkg/rerank.hpp"

namespace tkg {

enum class SearchMethod { Cosine, Bm25, Bfs };

std::string_view to_string(SearchMethod m);
std::optional<SearchMethod> parse_search_method(std::string_view text);

struct Query {
  std::string text;
  std::optional<std::vector<float>> embedding;
  std::size_t limit = 20;
  std::vector<NodeId> seed_nodes;
  std::vector<EpisodeId> seed_episodes;
  /// Only edges valid at this instant on T are returned.
  std::optional<Timestamp> as_of;
  std::set<SearchMethod> methods{SearchMethod::Cosine, SearchMethod::Bm25, SearchMethod::Bfs};
  std::size_t bfs_depth = 2;
  /// With no explicit seeds, BFS starts from entities linked to the last
  /// `recency_episodes` episodes.
  bool recency_seeding = true;
  std::size_t recency_episodes = 2;
  Bm25Params bm25{};

  void validate() const;
};

struct MethodResults {
  RankedList<EdgeId> edges;
  RankedList<NodeId> entities;
  RankedList<CommunityId> communities;

  bool operator==(const MethodResults&) const = default;
};

/// Ranked lists per enabled method, kept apart for rank fusion.
struct CandidateSet {
  std::map<SearchMethod, MethodResults> by_method;

  bool operator==(const CandidateSet&) const = default;
};

/// Fact embeddings (edges), entity name embeddings, community name
/// embeddings. Requires `query.embedding` or an embedder.
CandidateSet search_cosine(const GraphState& g, const Query& query, Embedder* embedder = nullptr);

/// BM25 over fact text, entity names and community names.
CandidateSet search_bm25(const GraphState& g, const Query& query);

/// Breadth-first expansion over semantic and episodic edges. Entities score
/// 1 / (1 + hops); an edge sits one hop past its nearer endpoint.
CandidateSet search_bfs(const GraphState& g, const Query& query);

/// Union of the enabled methods, as-of filter applied to every edge list.
CandidateSet search(const GraphState& g, const Query& query, Embedder* embedder = nullptr);

}  // namespace tkg
