#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tkg/ids.hpp"
#include "tkg/time.hpp"
#include "tkg/types.hpp"

namespace tkg {

/// The episode being ingested plus the last n episodes of the same graph in
/// T' order (oldest first).
struct EpisodeContext {
  Episode current;
  std::vector<Episode> previous;
};

/// "actor: content" for messages, plain content otherwise.
std::string render_episode(const Episode& ep);

struct ExtractedEntity {
  std::string name;
  std::string summary;

  bool operator==(const ExtractedEntity&) const = default;
};

struct EntityCandidate {
  NodeId id;
  std::string name;
  std::string summary;
};

struct EntityResolution {
  bool duplicate = false;
  std::optional<NodeId> id;
  std::optional<std::string> merged_name;
};

/// Names refer to ExtractedEntity::name values supplied to extract_facts.
struct ExtractedFact {
  std::string source;
  std::string target;
  std::string predicate;
  std::string fact;

  bool operator==(const ExtractedFact&) const = default;
};

/// Read-only rendering of a semantic edge handed to the extractor.
struct EdgeView {
  EdgeId id;
  NodeId source;
  NodeId target;
  std::string source_name;
  std::string target_name;
  std::string predicate;
  std::string fact;
  std::optional<Timestamp> t_valid;
  std::optional<Timestamp> t_invalid;
};

struct FactResolution {
  bool duplicate = false;
  std::optional<EdgeId> id;
};

/// ISO 8601 strings as returned by the model; validated by the caller.
struct TemporalBounds {
  std::optional<std::string> valid_at;
  std::optional<std::string> invalid_at;
};

/// Every model-backed step of graph construction. Implementations receive
/// all context explicitly and must not touch graph state. Thrown exceptions
/// abort the ingestion of the current episode.
class Extractor {
 public:
  virtual ~Extractor() = default;

  /// `already_extracted` is empty on the first pass. The reflection pass
  /// passes the first-pass list and expects only entities that were missed.
  virtual std::vector<ExtractedEntity> extract_entities(const EpisodeContext& ctx,
                                                        std::span<const ExtractedEntity> already_extracted) = 0;
  virtual EntityResolution resolve_entity(const EpisodeContext& ctx, std::span<const EntityCandidate> existing,
                                          const ExtractedEntity& candidate) = 0;
  virtual std::vector<ExtractedFact> extract_facts(const EpisodeContext& ctx,
                                                   std::span<const ExtractedEntity> entities) = 0;
  virtual FactResolution resolve_fact(std::span<const EdgeView> existing, const EdgeView& proposed) = 0;
  virtual TemporalBounds extract_temporal(const EpisodeContext& ctx, Timestamp reference,
                                          const std::string& fact) = 0;
  virtual std::vector<EdgeId> detect_contradictions(const EdgeView& proposed, std::span<const EdgeView> related) = 0;
  virtual std::string summarize(std::span<const std::string> texts) = 0;
  /// Short key-term name for a community summary.
  virtual std::string community_name(const std::string& summary) = 0;
};

}  // namespace tkg
