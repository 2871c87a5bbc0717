#pragma once

#include <json.hpp>

#include "tkg/engine.hpp"
#include "tkg/pipeline.hpp"
#include "tkg/types.hpp"

namespace tkg {

using nlohmann::json;

json to_json(const Episode& ep);
json to_json(const EntityNode& node, bool with_embedding = true);
json to_json(const SemanticEdge& edge, bool with_embedding = true);
json to_json(const CommunityNode& community, bool with_embedding = true);
json to_json(const IngestReport& report);
json to_json(const RetrievalResult& result, bool with_timings = true);

EntityNode entity_from_json(const json& j);
SemanticEdge edge_from_json(const json& j);
CommunityNode community_from_json(const json& j);

/// {kind?, content, actor?, t_ref, id?, group?}. Throws InvalidArgument.
Episode episode_from_request(const json& j);

/// Search request body: query text plus optional overrides of `defaults`.
/// Throws InvalidArgument.
RetrievalRequest retrieval_request_from_json(const json& j, const RetrievalRequest& defaults);

json timestamp_or_null(const std::optional<Timestamp>& t);
std::optional<Timestamp> optional_timestamp(const json& j, const char* key);

}  // namespace tkg
