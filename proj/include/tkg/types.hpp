#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tkg/ids.hpp"
#include "tkg/time.hpp"

namespace tkg {

enum class EpisodeKind { Message, Text, Json };

std::string_view to_string(EpisodeKind kind);
std::optional<EpisodeKind> parse_episode_kind(std::string_view text);

/// Raw ingested unit; the non-lossy source of record.
struct Episode {
  EpisodeId id;
  EpisodeKind kind = EpisodeKind::Message;
  std::string content;
  std::optional<std::string> actor;
  Timestamp t_ref;
  Timestamp t_ingested;  // assigned by the store on T'
  std::string group;

  bool operator==(const Episode&) const = default;
};

struct EntityNode {
  NodeId id;
  std::string name;
  std::string summary;
  std::vector<float> name_embedding;
  std::optional<CommunityId> community;

  bool operator==(const EntityNode&) const = default;
};

/// A fact between two entities. T' stamps (created/expired) record when the
/// store learned and retired it; T stamps (valid/invalid) bound when it held.
struct SemanticEdge {
  EdgeId id;
  NodeId source;
  NodeId target;
  std::string predicate;
  std::string fact;
  std::vector<float> fact_embedding;
  std::optional<FactGroupId> fact_group;
  Timestamp t_created;
  std::optional<Timestamp> t_expired;
  std::optional<Timestamp> t_valid;
  std::optional<Timestamp> t_invalid;
  std::vector<EpisodeId> episodes;

  bool operator==(const SemanticEdge&) const = default;
};

struct EpisodicEdge {
  EdgeId id;
  EpisodeId episode;
  NodeId entity;

  bool operator==(const EpisodicEdge&) const = default;
};

struct CommunityNode {
  CommunityId id;
  std::string name;
  std::string summary;
  std::vector<float> name_embedding;
  std::vector<NodeId> members;  // sorted, unique
  bool dirty = false;

  bool operator==(const CommunityNode&) const = default;
};

/// Half-open validity on T: [t_valid, t_invalid). Unset bounds are open.
bool valid_at(const SemanticEdge& edge, Timestamp t);

/// Throws InvariantViolation describing the first broken field rule.
void check_edge_invariants(const SemanticEdge& edge);

}  // namespace tkg
