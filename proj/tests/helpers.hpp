#pragma once

#include <map>
#include <memory>
#include <string>

#include "oracles.hpp"
#include "tkg/embedding.hpp"
#include "tkg/graph.hpp"

namespace testing_util {

using namespace tkg;

inline Timestamp ts(int y, unsigned m = 1, unsigned d = 1) { return Timestamp::from_civil(y, m, d); }

/// Small graph builder: named entities, facts between them, one shared
/// provenance episode.
struct Fixture {
  explicit Fixture(std::size_t dim = 64, Timestamp start = Timestamp::from_civil(2024, 6, 1))
      : clock(std::make_shared<ManualClock>(start, 1000)), graph(config(dim), clock), embedder(dim) {
    Episode ep;
    ep.content = "fixture";
    ep.actor = "fixture";
    ep.t_ref = start;
    episode = graph.add_episode(ep);
  }

  static GraphConfig config(std::size_t dim) {
    GraphConfig c;
    c.name = "fixture";
    c.embedding_dim = dim;
    return c;
  }

  NodeId entity(const std::string& name, const std::string& summary = "") {
    if (auto it = ids.find(name); it != ids.end()) return it->second;
    EntityNode n;
    n.name = name;
    n.summary = summary.empty() ? name + " is an entity." : summary;
    n.name_embedding = embedder.embed(name);
    auto id = graph.upsert_entity(n);
    if (link_entities) graph.link_episode(episode, id);
    ids[name] = id;
    return id;
  }

  EdgeId edge(const std::string& a, const std::string& b, const std::string& fact,
              std::optional<Timestamp> valid = std::nullopt, std::optional<Timestamp> invalid = std::nullopt,
              const std::string& predicate = "RELATES_TO") {
    SemanticEdge e;
    e.source = entity(a);
    e.target = entity(b);
    e.predicate = predicate;
    e.fact = fact;
    e.fact_embedding = embedder.embed(fact);
    e.t_created = clock->now();
    e.t_valid = valid;
    e.t_invalid = invalid;
    e.episodes = {episode};
    return graph.upsert_edge(e);
  }

  /// Loads an oracle graph as entities "n0".."n{k-1}" with one fact per edge.
  std::vector<NodeId> load(const oracle::SimpleGraph& g) {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < g.n; ++i) out.push_back(entity("n" + std::to_string(i)));
    for (auto [a, b] : g.edges) edge("n" + std::to_string(a), "n" + std::to_string(b), "n" + std::to_string(a) +
                                                                                             " links n" +
                                                                                             std::to_string(b));
    return out;
  }

  std::shared_ptr<ManualClock> clock;
  Graph graph;
  HashingEmbedder embedder;
  EpisodeId episode;
  std::map<std::string, NodeId> ids;
  /// Mention every new entity in the fixture episode.
  bool link_entities = true;
};

/// rank[i] = position of ids[i] in ascending id order (the engine's tie-break).
inline std::vector<std::size_t> id_rank(const std::vector<NodeId>& ids) {
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ids[a] < ids[b]; });
  std::vector<std::size_t> rank(ids.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

}  // namespace testing_util
