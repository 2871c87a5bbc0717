#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tkg/embedding.hpp"
#include "tkg/graph.hpp"
#include "tkg/types.hpp"

namespace tkg::synthetic {

struct PlantedFact {
  std::size_t message_index;
  std::string subject;
  std::string predicate;
  std::string object;
  /// Question whose answer is the fact.
  std::string query;
  /// Exact context line the fact renders to.
  std::string expected_line;
};

struct Conversation {
  std::vector<Episode> messages;
  std::vector<PlantedFact> facts;
};

struct ConversationSpec {
  std::size_t messages = 500;
  std::size_t sessions = 5;
  std::size_t planted_facts = 50;
  std::size_t people = 10;
  std::uint64_t seed = 7;
  Timestamp start = Timestamp::from_civil(2024, 1, 8, 9);
};

/// Two-speaker multi-session chat with facts planted at known positions and
/// small-talk filler in between. Ground truth follows the rule-based
/// extractor's phrasing and temporal rules.
Conversation generate_conversation(const ConversationSpec& spec);

struct EpisodeStreamSpec {
  std::size_t episodes = 1000;
  std::size_t speakers = 6;
  std::uint64_t seed = 11;
  Timestamp start = Timestamp::from_civil(2023, 1, 1);
};

/// Random messages about where people live and work, with absolute dates,
/// relative dates, closed ranges (sometimes reversed) and frequent
/// contradictions. For invariant testing.
std::vector<Episode> generate_episode_stream(const EpisodeStreamSpec& spec);

struct GraphSpec {
  std::size_t entities = 10'000;
  std::size_t edges = 50'000;
  std::size_t episodes = 5'000;
  std::size_t cluster_size = 50;
  double intra_cluster_fraction = 0.8;
  std::uint64_t seed = 3;
};

/// Bulk-loads a random clustered entity graph (one transaction). Embeddings
/// come from `embedder`; communities are left to the caller.
void build_graph(Graph& graph, Embedder& embedder, const GraphSpec& spec);

/// Questions about random entities of `g`.
std::vector<std::string> generate_queries(const GraphState& g, std::size_t count, std::uint64_t seed);

}  // namespace tkg::synthetic
