#include "tkg/rerank.hpp"

#include <deque>
#include <limits>
#include <unordered_set>

#include "tkg/text.hpp"

namespace tkg {

std::string_view to_string(RerankMethod m) {
  switch (m) {
    case RerankMethod::Rrf: return "rrf";
    case RerankMethod::Mmr: return "mmr";
    case RerankMethod::EpisodeMentions: return "episode_mentions";
    case RerankMethod::NodeDistance: return "node_distance";
    case RerankMethod::CrossEncoder: return "cross_encoder";
  }
  return "unknown";
}

std::optional<RerankMethod> parse_rerank_method(std::string_view text) {
  const auto t = to_lower_utf8(trim(text));
  if (t == "rrf") return RerankMethod::Rrf;
  if (t == "mmr") return RerankMethod::Mmr;
  if (t == "episode_mentions") return RerankMethod::EpisodeMentions;
  if (t == "node_distance") return RerankMethod::NodeDistance;
  if (t == "cross_encoder") return RerankMethod::CrossEncoder;
  return std::nullopt;
}

void RerankerConfig::validate() const {
  if (rrf_k < 1) throw Error(ErrorCode::InvalidArgument, "rrf_k must be positive");
  if (!(mmr_lambda >= 0.0 && mmr_lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mmr_lambda must be in [0, 1]");
  if (method == RerankMethod::NodeDistance && !centroid)
    throw Error(ErrorCode::InvalidArgument, "node_distance needs a centroid");
  if (method != RerankMethod::NodeDistance && centroid)
    throw Error(ErrorCode::InvalidArgument, "centroid is only used by node_distance");
}

namespace {

template <class Id, class Score>
RankedList<Id> stable_by(const RankedList<Id>& in, Score&& score) {
  RankedList<Id> out;
  out.reserve(in.size());
  for (const auto& s : in) out.push_back({s.id, score(s.id)});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

std::size_t distance_of(const std::map<NodeId, std::size_t>& dist, const NodeId& n) {
  auto it = dist.find(n);
  return it == dist.end() ? kUnreachable : it->second;
}

template <class Id, class Distance>
RankedList<Id> by_distance(const RankedList<Id>& in, Distance&& distance) {
  std::vector<std::pair<std::size_t, Scored<Id>>> tmp;
  tmp.reserve(in.size());
  for (const auto& s : in) {
    const auto d = distance(s.id);
    const double score = d == kUnreachable ? 0.0 : 1.0 / (1.0 + static_cast<double>(d));
    tmp.push_back({d, {s.id, score}});
  }
  std::stable_sort(tmp.begin(), tmp.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  RankedList<Id> out;
  out.reserve(tmp.size());
  for (auto& [_, s] : tmp) out.push_back(s);
  return out;
}

}  // namespace

RankedList<EdgeId> episode_mentions(const GraphState& g, const RankedList<EdgeId>& in) {
  return stable_by(in, [&](const EdgeId& id) {
    const auto* e = g.edge(id);
    return e ? static_cast<double>(e->episodes.size()) : 0.0;
  });
}

RankedList<NodeId> episode_mentions(const GraphState& g, const RankedList<NodeId>& in) {
  return stable_by(in, [&](const NodeId& id) { return static_cast<double>(g.episodes_of(id).size()); });
}

RankedList<CommunityId> episode_mentions(const GraphState& g, const RankedList<CommunityId>& in) {
  return stable_by(in, [&](const CommunityId& id) {
    double total = 0;
    if (const auto* c = g.community(id))
      for (const auto& m : c->members) total += static_cast<double>(g.episodes_of(m).size());
    return total;
  });
}

std::map<NodeId, std::size_t> hop_distances(const GraphState& g, const NodeId& centroid) {
  g.require_entity(centroid);
  std::map<NodeId, std::size_t> dist{{centroid, 0}};
  std::deque<NodeId> frontier{centroid};
  while (!frontier.empty()) {
    const auto n = frontier.front();
    frontier.pop_front();
    const auto d = dist[n];
    for (const auto& nb : g.neighbors(n))
      if (dist.emplace(nb, d + 1).second) frontier.push_back(nb);
  }
  return dist;
}

RankedList<EdgeId> node_distance(const GraphState& g, const RankedList<EdgeId>& in, const NodeId& centroid) {
  const auto dist = hop_distances(g, centroid);
  return by_distance(in, [&](const EdgeId& id) {
    const auto* e = g.edge(id);
    if (!e) return kUnreachable;
    return std::min(distance_of(dist, e->source), distance_of(dist, e->target));
  });
}

RankedList<NodeId> node_distance(const GraphState& g, const RankedList<NodeId>& in, const NodeId& centroid) {
  const auto dist = hop_distances(g, centroid);
  return by_distance(in, [&](const NodeId& id) { return distance_of(dist, id); });
}

RankedList<CommunityId> node_distance(const GraphState& g, const RankedList<CommunityId>& in,
                                      const NodeId& centroid) {
  const auto dist = hop_distances(g, centroid);
  return by_distance(in, [&](const CommunityId& id) {
    std::size_t best = kUnreachable;
    if (const auto* c = g.community(id))
      for (const auto& m : c->members) best = std::min(best, distance_of(dist, m));
    return best;
  });
}

std::vector<double> JaccardCrossEncoder::score(std::string_view query, std::span<const std::string> texts) {
  const auto q = tokenize(query);
  const std::unordered_set<std::string> qs(q.begin(), q.end());
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const auto toks = tokenize(t);
    const std::unordered_set<std::string> ts(toks.begin(), toks.end());
    std::size_t inter = 0;
    for (const auto& x : ts) inter += qs.count(x);
    const std::size_t uni = qs.size() + ts.size() - inter;
    out.push_back(uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni));
  }
  return out;
}

}  // namespace tkg
