#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tkg/cow.hpp"
#include "tkg/error.hpp"
#include "tkg/ids.hpp"
#include "tkg/inverted_index.hpp"
#include "tkg/time.hpp"
#include "tkg/types.hpp"
#include "tkg/vector_index.hpp"

namespace tkg {

struct GraphConfig {
  std::string name = "default";
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  /// Seed for id generation; 0 derives one from `name`.
  std::uint64_t id_seed = 0;

  bool operator==(const GraphConfig&) const = default;
};

template <class Id, class T>
using Table = std::map<Id, std::shared_ptr<const T>>;

struct GraphMeta {
  std::uint64_t id_counter = 0;
  std::uint64_t staleness = 0;
  std::int64_t last_ingest_ms = std::numeric_limits<std::int64_t>::min();
  std::uint64_t commits = 0;

  bool operator==(const GraphMeta&) const = default;
};

/// Immutable content of a graph at one T' instant. Obtained through
/// Graph::snapshot(); never changes after publication.
class GraphState {
 public:
  explicit GraphState(GraphConfig config);

  const GraphConfig& config() const noexcept { return config_; }
  const GraphMeta& meta() const noexcept { return *meta_; }

  const Episode* episode(const EpisodeId& id) const;
  const EntityNode* entity(const NodeId& id) const;
  const SemanticEdge* edge(const EdgeId& id) const;
  const EpisodicEdge* episodic_edge(const EdgeId& id) const;
  const CommunityNode* community(const CommunityId& id) const;

  const Episode& require_episode(const EpisodeId& id) const;
  const EntityNode& require_entity(const NodeId& id) const;
  const SemanticEdge& require_edge(const EdgeId& id) const;
  const CommunityNode& require_community(const CommunityId& id) const;

  const Table<EpisodeId, Episode>& episodes() const noexcept { return *episodes_; }
  const Table<NodeId, EntityNode>& entities() const noexcept { return *entities_; }
  const Table<EdgeId, SemanticEdge>& edges() const noexcept { return *edges_; }
  const std::map<EdgeId, EpisodicEdge>& episodic_edges() const noexcept { return episodic_->edges; }
  const Table<CommunityId, CommunityNode>& communities() const noexcept { return *communities_; }

  /// Episodes in T' (ingestion) order.
  const std::vector<EpisodeId>& episode_order() const noexcept { return *episode_order_; }
  std::vector<EpisodeId> recent_episodes(std::size_t n) const;

  /// All semantic edges on the unordered pair {a, b}, ascending id.
  std::vector<const SemanticEdge*> edges_between(const NodeId& a, const NodeId& b) const;
  /// Semantic edges with `n` as source or target, ascending id.
  std::span<const EdgeId> incident_edges(const NodeId& n) const;
  /// Distinct semantic neighbours of `n`, ascending id.
  std::vector<NodeId> neighbors(const NodeId& n) const;

  std::span<const EpisodeId> episodes_of(const NodeId& entity) const;
  std::span<const NodeId> entities_of(const EpisodeId& episode) const;

  const InvertedIndex<EdgeId>& fact_text_index() const noexcept { return *fact_text_; }
  const InvertedIndex<NodeId>& entity_name_text_index() const noexcept { return *entity_name_text_; }
  const InvertedIndex<NodeId>& entity_profile_text_index() const noexcept { return *entity_profile_text_; }
  const InvertedIndex<CommunityId>& community_name_text_index() const noexcept { return *community_name_text_; }
  const VectorIndex<EdgeId>& fact_vector_index() const noexcept { return *fact_vec_; }
  const VectorIndex<NodeId>& entity_vector_index() const noexcept { return *entity_vec_; }
  const VectorIndex<CommunityId>& community_vector_index() const noexcept { return *community_vec_; }

  /// Content equality (ids, payloads, timestamps, embeddings, meta).
  bool same_content(const GraphState& other) const;

 private:
  friend class Transaction;
  friend class Graph;
  friend struct StoreAccess;

  struct EpisodicLinks {
    std::map<EdgeId, EpisodicEdge> edges;
    std::map<std::pair<EpisodeId, NodeId>, EdgeId> by_pair;
    std::map<NodeId, std::vector<EpisodeId>> episodes_of_entity;
    std::map<EpisodeId, std::vector<NodeId>> entities_of_episode;
  };
  using Adjacency = std::map<NodeId, std::vector<EdgeId>>;

  GraphConfig config_;
  std::shared_ptr<const GraphMeta> meta_;
  std::shared_ptr<const Table<EpisodeId, Episode>> episodes_;
  std::shared_ptr<const std::vector<EpisodeId>> episode_order_;
  std::shared_ptr<const Table<NodeId, EntityNode>> entities_;
  std::shared_ptr<const Table<EdgeId, SemanticEdge>> edges_;
  std::shared_ptr<const Adjacency> adjacency_;
  std::shared_ptr<const EpisodicLinks> episodic_;
  std::shared_ptr<const Table<CommunityId, CommunityNode>> communities_;
  std::shared_ptr<const std::map<FactGroupId, std::string>> fact_groups_;
  std::shared_ptr<const InvertedIndex<EdgeId>> fact_text_;
  std::shared_ptr<const InvertedIndex<NodeId>> entity_name_text_;
  std::shared_ptr<const InvertedIndex<NodeId>> entity_profile_text_;
  std::shared_ptr<const InvertedIndex<CommunityId>> community_name_text_;
  std::shared_ptr<const VectorIndex<EdgeId>> fact_vec_;
  std::shared_ptr<const VectorIndex<NodeId>> entity_vec_;
  std::shared_ptr<const VectorIndex<CommunityId>> community_vec_;
};

using GraphSnapshot = std::shared_ptr<const GraphState>;

/// One serialized record of a committed change, in log order.
struct Mutation {
  enum class Kind { Episode, Entity, Edge, EpisodicEdge, Community, CommunityRemoved };
  Kind kind;
  Uuid id;
};

/// Mutable draft over the latest state. All writes of one transaction become
/// visible together, or not at all if the transaction body throws.
class Transaction {
 public:
  const GraphState& state() const noexcept { return *draft_; }
  const GraphConfig& config() const noexcept { return draft_->config(); }

  /// Current T' instant; never decreases within a graph.
  Timestamp now();

  template <class Id>
  Id new_id() {
    return Id{next_uuid()};
  }

  EpisodeId add_episode(Episode ep);
  NodeId upsert_entity(EntityNode node);
  EdgeId upsert_edge(SemanticEdge edge);
  EdgeId link_episode(const EpisodeId& episode, const NodeId& entity);
  CommunityId upsert_community(CommunityNode community);
  void remove_community(const CommunityId& id);

  void set_staleness(std::uint64_t value);

  const std::vector<Mutation>& mutations() const noexcept { return log_; }

 private:
  friend class Graph;
  friend struct StoreAccess;
  Transaction(std::shared_ptr<GraphState> draft, const Clock& clock) : draft_(std::move(draft)), clock_(&clock) {}

  Uuid next_uuid();
  GraphMeta& meta_mut();
  void record(Mutation::Kind kind, const Uuid& id);
  void check_embedding(std::span<const float> v, const char* what) const;

  std::shared_ptr<GraphState> draft_;
  const Clock* clock_;
  std::vector<Mutation> log_;
};

class Journal;

/// Thread-safe handle to one graph: one writer at a time, any number of
/// readers through snapshots.
class Graph {
 public:
  explicit Graph(GraphConfig config = {}, std::shared_ptr<const Clock> clock = nullptr);
  ~Graph();
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Loads a store file (or creates it when missing) and appends every
  /// subsequent commit to it.
  static std::unique_ptr<Graph> open(const std::filesystem::path& path, GraphConfig config = {},
                                     std::shared_ptr<const Clock> clock = nullptr);
  /// Loads a store file into a detached in-memory graph.
  static std::unique_ptr<Graph> load(const std::filesystem::path& path, std::shared_ptr<const Clock> clock = nullptr);
  /// Writes a compacted copy of the current state.
  void persist(const std::filesystem::path& path) const;

  GraphSnapshot snapshot() const;
  const GraphConfig& config() const noexcept { return config_; }
  const Clock& clock() const noexcept { return *clock_; }

  /// Runs `body` against a draft and publishes it on normal return. Any
  /// exception discards the draft and propagates.
  template <class F>
  auto write(F&& body) -> decltype(body(std::declval<Transaction&>())) {
    std::lock_guard writer(write_mu_);
    Transaction tx(clone_current(), *clock_);
    if constexpr (std::is_void_v<decltype(body(tx))>) {
      body(tx);
      commit(tx);
    } else {
      auto result = body(tx);
      commit(tx);
      return result;
    }
  }

  EpisodeId add_episode(Episode ep);
  NodeId upsert_entity(EntityNode node);
  EdgeId upsert_edge(SemanticEdge edge);
  EdgeId link_episode(const EpisodeId& episode, const NodeId& entity);
  std::vector<SemanticEdge> edges_between(const NodeId& a, const NodeId& b) const;

 private:
  std::shared_ptr<GraphState> clone_current() const;
  void commit(Transaction& tx);
  void install(std::shared_ptr<const GraphState> state);

  GraphConfig config_;
  std::shared_ptr<const Clock> clock_;
  mutable std::mutex state_mu_;
  std::shared_ptr<const GraphState> current_;
  std::mutex write_mu_;
  std::unique_ptr<Journal> journal_;
};

}  // namespace tkg
