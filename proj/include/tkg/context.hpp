#pragma once

#include <span>
#include <string>

#include "tkg/types.hpp"

namespace tkg {

struct ContextOptions {
  /// Appends a <COMMUNITIES> block when any communities are passed.
  bool include_communities = true;
};

/// "FACT (Date range: FROM - TO)"; FROM is "unknown" and TO is "present"
/// when unset.
std::string format_fact_line(const SemanticEdge& edge);

/// "NAME: summary".
std::string format_entity_line(const EntityNode& entity);

/// Renders the retrieval context block. Input order is preserved and nothing
/// is truncated.
std::string build_context(std::span<const SemanticEdge> edges, std::span<const EntityNode> entities,
                          std::span<const CommunityNode> communities, const ContextOptions& options = {});

}  // namespace tkg
