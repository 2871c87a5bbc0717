#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "tkg/embedding.hpp"
#include "tkg/extractor.hpp"
#include "tkg/graph.hpp"

namespace tkg {

struct CommunityConfig {
  std::size_t max_iterations = 100;
  std::size_t staleness_threshold = 128;
  /// Map-reduce fan-in for summaries.
  std::size_t summary_chunk = 20;
};

struct CommunityAssignment {
  std::map<NodeId, CommunityId> membership;
  std::uint64_t staleness = 0;

  /// Member lists per community, each sorted, ordered by community id.
  std::map<CommunityId, std::vector<NodeId>> groups() const;
  std::size_t community_count() const;
  bool operator==(const CommunityAssignment&) const = default;
};

struct PropagationStats {
  std::size_t iterations = 0;
  bool converged = false;
  /// A two-cycle was detected and the node's own label joined the vote.
  bool cycle_broken = false;
};

/// Synchronous label propagation over the entity graph. Every node starts
/// with its own label; each round it takes the label most common among its
/// distinct neighbours, ties to the smallest label. Stops at a fixed point or
/// after `max_iterations`. Community ids are derived from the label node so
/// equal partitions get equal ids.
CommunityAssignment detect_communities(const GraphState& g, std::size_t max_iterations = 100,
                                       PropagationStats* stats = nullptr);

/// Membership as currently stored on the entity nodes.
CommunityAssignment current_assignment(const GraphState& g);

CommunityId community_id_for_label(const NodeId& label);

/// Maintains the community tier: dynamic extension on ingest, summaries,
/// and periodic full refreshes.
class CommunityManager {
 public:
  CommunityManager(Extractor& summarizer, Embedder& embedder, CommunityConfig config = {})
      : summarizer_(&summarizer), embedder_(&embedder), config_(config) {}

  const CommunityConfig& config() const noexcept { return config_; }

  /// Joins `node` to the community held by most of its neighbours (ties to
  /// the smallest id) or founds a singleton. Marks the community dirty and
  /// bumps the staleness counter.
  CommunityId extend_with_node(Transaction& tx, const NodeId& node);

  /// Map-reduce summary over member summaries in chunks of summary_chunk,
  /// then a key-term name and its embedding. On summarizer failure returns
  /// the input unchanged (still dirty) and sets *ok to false.
  CommunityNode refresh_summaries(const GraphState& g, const CommunityNode& community, bool* ok = nullptr);

  /// Refreshes every dirty community. Returns how many were refreshed.
  std::size_t refresh_dirty(Graph& graph);

  /// Full detection plus summaries; swaps the result in with one write.
  /// Returns the community count.
  std::size_t full_refresh(Graph& graph);

  /// Runs full_refresh when the staleness counter reached the threshold.
  bool maybe_full_refresh(Graph& graph);

 private:
  Extractor* summarizer_;
  Embedder* embedder_;
  CommunityConfig config_;
};

}  // namespace tkg
