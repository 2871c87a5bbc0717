#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tkg/graph.hpp"
#include "tkg/ids.hpp"

namespace tkg {

template <class Id>
struct Scored {
  Id id;
  double score = 0.0;

  bool operator==(const Scored&) const = default;
};

template <class Id>
using RankedList = std::vector<Scored<Id>>;

enum class RerankMethod { Rrf, Mmr, EpisodeMentions, NodeDistance, CrossEncoder };

std::string_view to_string(RerankMethod m);
std::optional<RerankMethod> parse_rerank_method(std::string_view text);

struct RerankerConfig {
  RerankMethod method = RerankMethod::Rrf;
  int rrf_k = 60;
  double mmr_lambda = 0.5;
  std::optional<NodeId> centroid;

  /// Throws InvalidArgument when parameters do not fit the method.
  void validate() const;
};

/// Reciprocal rank fusion: score(id) = sum over lists of 1 / (k + rank),
/// rank 1-based. Descending score, ties by ascending id.
template <class Id>
RankedList<Id> rrf(std::span<const RankedList<Id>> lists, int k = 60) {
  std::map<Id, double> acc;
  for (const auto& list : lists)
    for (std::size_t i = 0; i < list.size(); ++i)
      acc[list[i].id] += 1.0 / (static_cast<double>(k) + static_cast<double>(i + 1));
  RankedList<Id> out;
  out.reserve(acc.size());
  for (const auto& [id, score] : acc) out.push_back({id, score});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

template <class Id>
struct MmrCandidate {
  Id id;
  double relevance = 0.0;
  std::span<const float> embedding;  // empty = missing
};

/// Greedy maximal marginal relevance. Each step picks the candidate that
/// maximizes lambda * rel - (1 - lambda) * max cos(c, selected); ties go to
/// the earlier input position. Candidates without an embedding are dropped
/// and counted in `dropped`.
template <class Id>
RankedList<Id> mmr(std::span<const MmrCandidate<Id>> candidates, double lambda, std::size_t* dropped = nullptr);

/// Orders by number of provenance episodes (edges) or linked episodes
/// (entities); communities use the summed counts of their members. Stable.
RankedList<EdgeId> episode_mentions(const GraphState& g, const RankedList<EdgeId>& in);
RankedList<NodeId> episode_mentions(const GraphState& g, const RankedList<NodeId>& in);
RankedList<CommunityId> episode_mentions(const GraphState& g, const RankedList<CommunityId>& in);

/// Unweighted hop distance from `centroid` over semantic edges; entities
/// without a path rank last. Edges take the nearer endpoint, communities the
/// nearest member. Stable; score = 1 / (1 + distance), 0 when unreachable.
std::map<NodeId, std::size_t> hop_distances(const GraphState& g, const NodeId& centroid);
RankedList<EdgeId> node_distance(const GraphState& g, const RankedList<EdgeId>& in, const NodeId& centroid);
RankedList<NodeId> node_distance(const GraphState& g, const RankedList<NodeId>& in, const NodeId& centroid);
RankedList<CommunityId> node_distance(const GraphState& g, const RankedList<CommunityId>& in,
                                      const NodeId& centroid);

class CrossEncoder {
 public:
  virtual ~CrossEncoder() = default;
  /// One relevance score per text.
  virtual std::vector<double> score(std::string_view query, std::span<const std::string> texts) = 0;
};

/// Token-set Jaccard similarity between query and candidate text.
class JaccardCrossEncoder final : public CrossEncoder {
 public:
  std::vector<double> score(std::string_view query, std::span<const std::string> texts) override;
};

template <class Id>
struct CrossEncodeResult {
  RankedList<Id> ranked;
  bool fell_back = false;
  std::string error;
};

/// Sorts by scorer output (descending, stable). When the scorer throws or
/// returns the wrong number of scores, the input order is returned and
/// `fell_back` is set.
template <class Id>
CrossEncodeResult<Id> cross_encode(CrossEncoder& scorer, std::string_view query, const RankedList<Id>& in,
                                   std::span<const std::string> texts) {
  CrossEncodeResult<Id> out;
  std::vector<double> scores;
  try {
    scores = scorer.score(query, texts);
    if (scores.size() != in.size() || texts.size() != in.size())
      throw std::runtime_error("scorer returned " + std::to_string(scores.size()) + " scores for " +
                               std::to_string(in.size()) + " candidates");
  } catch (const std::exception& e) {
    out.ranked = in;
    out.fell_back = true;
    out.error = e.what();
    return out;
  }
  out.ranked.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out.ranked.push_back({in[i].id, scores[i]});
  std::stable_sort(out.ranked.begin(), out.ranked.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

// -- implementation ---------------------------------------------------------

template <class Id>
RankedList<Id> mmr(std::span<const MmrCandidate<Id>> candidates, double lambda, std::size_t* dropped) {
  std::vector<const MmrCandidate<Id>*> pool;
  std::size_t missing = 0;
  for (const auto& c : candidates) {
    if (c.embedding.empty())
      ++missing;
    else
      pool.push_back(&c);
  }
  if (dropped) *dropped = missing;

  RankedList<Id> out;
  out.reserve(pool.size());
  std::vector<double> max_sim(pool.size(), 0.0);
  std::vector<bool> taken(pool.size(), false);
  for (std::size_t step = 0; step < pool.size(); ++step) {
    std::size_t best = pool.size();
    double best_score = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      const double redundancy = step == 0 ? 0.0 : max_sim[i];
      const double s = lambda * pool[i]->relevance - (1.0 - lambda) * redundancy;
      if (best == pool.size() || s > best_score) {
        best = i;
        best_score = s;
      }
    }
    taken[best] = true;
    out.push_back({pool[best]->id, best_score});
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) continue;
      max_sim[i] = std::max(step == 0 ? -1.0 : max_sim[i], cosine(pool[i]->embedding, pool[best]->embedding));
    }
  }
  return out;
}

}  // namespace tkg
