#include "tkg/types.hpp"

#include "tkg/error.hpp"

namespace tkg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyContent: return "EmptyContent";
    case ErrorCode::MissingActor: return "MissingActor";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::AlreadyIngested: return "AlreadyIngested";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::UnknownEdge: return "UnknownEdge";
    case ErrorCode::UnknownEpisode: return "UnknownEpisode";
    case ErrorCode::UnknownCommunity: return "UnknownCommunity";
    case ErrorCode::UnknownSeed: return "UnknownSeed";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::Io: return "Io";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::ExtractorFailure: return "ExtractorFailure";
    case ErrorCode::AdapterUnavailable: return "AdapterUnavailable";
  }
  return "Unknown";
}

std::string_view to_string(EpisodeKind kind) {
  switch (kind) {
    case EpisodeKind::Message: return "message";
    case EpisodeKind::Text: return "text";
    case EpisodeKind::Json: return "json";
  }
  return "message";
}

std::optional<EpisodeKind> parse_episode_kind(std::string_view text) {
  if (text == "message") return EpisodeKind::Message;
  if (text == "text") return EpisodeKind::Text;
  if (text == "json") return EpisodeKind::Json;
  return std::nullopt;
}

bool valid_at(const SemanticEdge& edge, Timestamp t) {
  return (!edge.t_valid || *edge.t_valid <= t) && (!edge.t_invalid || t < *edge.t_invalid);
}

void check_edge_invariants(const SemanticEdge& edge) {
  if (edge.source == edge.target) throw Error(ErrorCode::SelfLoop, "edge " + edge.id.str() + " has source == target");
  if (edge.t_valid && edge.t_invalid && *edge.t_invalid < *edge.t_valid)
    throw Error(ErrorCode::InvariantViolation, "edge " + edge.id.str() + ": t_invalid precedes t_valid");
  if (edge.t_expired && *edge.t_expired < edge.t_created)
    throw Error(ErrorCode::InvariantViolation, "edge " + edge.id.str() + ": t_expired precedes t_created");
  if (edge.episodes.empty())
    throw Error(ErrorCode::InvariantViolation, "edge " + edge.id.str() + " has no provenance episodes");
}

}  // namespace tkg
