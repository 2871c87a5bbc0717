#include "tkg/search.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "tkg/text.hpp"

namespace tkg {

std::string_view to_string(SearchMethod m) {
  switch (m) {
    case SearchMethod::Cosine: return "cosine";
    case SearchMethod::Bm25: return "bm25";
    case SearchMethod::Bfs: return "bfs";
  }
  return "unknown";
}

std::optional<SearchMethod> parse_search_method(std::string_view text) {
  const auto t = to_lower_utf8(trim(text));
  if (t == "cosine") return SearchMethod::Cosine;
  if (t == "bm25") return SearchMethod::Bm25;
  if (t == "bfs") return SearchMethod::Bfs;
  return std::nullopt;
}

void Query::validate() const {
  if (limit == 0) throw Error(ErrorCode::InvalidArgument, "limit must be at least 1");
  if (methods.empty()) throw Error(ErrorCode::InvalidArgument, "at least one search method must be enabled");
  if (bm25.k1 < 0 || bm25.b < 0 || bm25.b > 1) throw Error(ErrorCode::InvalidArgument, "BM25 parameters out of range");
}

namespace {

template <class Id>
RankedList<Id> to_ranked(const std::vector<std::pair<Id, double>>& hits) {
  RankedList<Id> out;
  out.reserve(hits.size());
  for (const auto& [id, s] : hits) out.push_back({id, s});
  return out;
}

auto edge_filter(const GraphState& g, const Query& q) {
  return [&g, as_of = q.as_of](const EdgeId& id) {
    if (!as_of) return true;
    const auto* e = g.edge(id);
    return e && valid_at(*e, *as_of);
  };
}

}  // namespace

CandidateSet search_cosine(const GraphState& g, const Query& query, Embedder* embedder) {
  query.validate();
  std::vector<float> owned;
  std::span<const float> qv;
  if (query.embedding) {
    qv = *query.embedding;
  } else if (embedder) {
    owned = embedder->embed(query.text);
    qv = owned;
  } else {
    throw Error(ErrorCode::InvalidArgument, "cosine search needs a query embedding or an embedder");
  }
  if (qv.size() != g.config().embedding_dim)
    throw Error(ErrorCode::DimensionMismatch, "query embedding has dimension " + std::to_string(qv.size()) +
                                                  ", graph uses " + std::to_string(g.config().embedding_dim));
  MethodResults r;
  r.edges = to_ranked(g.fact_vector_index().top_k(qv, query.limit, edge_filter(g, query)));
  r.entities = to_ranked(g.entity_vector_index().top_k(qv, query.limit));
  r.communities = to_ranked(g.community_vector_index().top_k(qv, query.limit));
  CandidateSet out;
  out.by_method.emplace(SearchMethod::Cosine, std::move(r));
  return out;
}

CandidateSet search_bm25(const GraphState& g, const Query& query) {
  query.validate();
  MethodResults r;
  r.edges = to_ranked(g.fact_text_index().search(query.text, query.limit, edge_filter(g, query), query.bm25));
  r.entities = to_ranked(g.entity_name_text_index().search(query.text, query.limit, query.bm25));
  r.communities = to_ranked(g.community_name_text_index().search(query.text, query.limit, query.bm25));
  CandidateSet out;
  out.by_method.emplace(SearchMethod::Bm25, std::move(r));
  return out;
}

CandidateSet search_bfs(const GraphState& g, const Query& query) {
  query.validate();
  std::vector<NodeId> seeds;
  for (const auto& n : query.seed_nodes) {
    if (!g.entity(n)) throw Error(ErrorCode::UnknownSeed, "seed entity " + n.str() + " does not exist");
    seeds.push_back(n);
  }
  for (const auto& ep : query.seed_episodes) {
    if (!g.episode(ep)) throw Error(ErrorCode::UnknownSeed, "seed episode " + ep.str() + " does not exist");
    for (const auto& n : g.entities_of(ep)) seeds.push_back(n);
  }
  if (query.seed_nodes.empty() && query.seed_episodes.empty() && query.recency_seeding) {
    for (const auto& ep : g.recent_episodes(query.recency_episodes))
      for (const auto& n : g.entities_of(ep)) seeds.push_back(n);
  }

  // Entities and episodes share one frontier; an episode is a node of its
  // own, so two entities mentioned together are two hops apart.
  std::map<NodeId, std::size_t> node_dist;
  std::map<EpisodeId, std::size_t> episode_dist;
  std::deque<std::pair<bool, Uuid>> frontier;  // (is_episode, id)
  for (const auto& s : seeds) {
    if (node_dist.emplace(s, 0).second) frontier.emplace_back(false, s.value);
  }
  std::map<EdgeId, std::size_t> edge_dist;
  while (!frontier.empty()) {
    const auto [is_episode, raw] = frontier.front();
    frontier.pop_front();
    if (is_episode) {
      const EpisodeId ep{raw};
      const auto d = episode_dist.at(ep);
      if (d >= query.bfs_depth) continue;
      for (const auto& n : g.entities_of(ep))
        if (node_dist.emplace(n, d + 1).second) frontier.emplace_back(false, n.value);
      continue;
    }
    const NodeId node{raw};
    const auto d = node_dist.at(node);
    if (d >= query.bfs_depth) continue;
    for (const auto& eid : g.incident_edges(node)) {
      edge_dist.emplace(eid, d + 1);
      const auto& e = g.require_edge(eid);
      const auto& other = e.source == node ? e.target : e.source;
      if (node_dist.emplace(other, d + 1).second) frontier.emplace_back(false, other.value);
    }
    for (const auto& ep : g.episodes_of(node))
      if (episode_dist.emplace(ep, d + 1).second) frontier.emplace_back(true, ep.value);
  }

  auto rank = [&](auto& list, std::size_t limit) {
    std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    if (list.size() > limit) list.resize(limit);
  };
  MethodResults r;
  for (const auto& [id, d] : node_dist) r.entities.push_back({id, 1.0 / (1.0 + static_cast<double>(d))});
  auto keep = edge_filter(g, query);
  for (const auto& [id, d] : edge_dist)
    if (keep(id)) r.edges.push_back({id, 1.0 / (1.0 + static_cast<double>(d))});
  rank(r.entities, query.limit);
  rank(r.edges, query.limit);
  CandidateSet out;
  out.by_method.emplace(SearchMethod::Bfs, std::move(r));
  return out;
}

CandidateSet search(const GraphState& g, const Query& query, Embedder* embedder) {
  query.validate();
  CandidateSet out;
  for (auto m : query.methods) {
    CandidateSet part;
    switch (m) {
      case SearchMethod::Cosine: part = search_cosine(g, query, embedder); break;
      case SearchMethod::Bm25: part = search_bm25(g, query); break;
      case SearchMethod::Bfs: part = search_bfs(g, query); break;
    }
    for (auto& [k, v] : part.by_method) out.by_method[k] = std::move(v);
  }
  return out;
}

}  // namespace tkg
