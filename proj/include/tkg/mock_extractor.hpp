#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tkg/extractor.hpp"

namespace tkg {

struct MockExtractorOptions {
  /// Treat "A. Turing" and "Alan Turing" as the same entity: every token of
  /// the shorter name matches a token (or an initial) of the longer one.
  bool token_subset_matching = false;
  /// Sentences kept by summarize().
  std::size_t summary_sentence_limit = 3;
  std::size_t community_name_terms = 4;
};

/// Rule-based Extractor used by tests, benchmarks and the offline CLI.
///
/// Entities: the speaker, then runs of capitalized words (leading function
/// words, pronouns, months and weekdays stripped). The reflection pass returns
/// whatever the given list is missing, compared case-insensitively. Facts: per sentence, a subject (I -> speaker, or a leading proper
/// noun list) followed by a verb phrase from a fixed table and an object
/// entity. Temporal: absolute dates, years, "N units ago", "until ..." and the
/// present-tense rule (valid_at = reference). Contradiction: same predicate
/// on the same source with a different target for single-valued predicates,
/// or same unordered pair and predicate with different fact text.
class DeterministicMockExtractor final : public Extractor {
 public:
  explicit DeterministicMockExtractor(MockExtractorOptions options = {}) : options_(options) {}

  std::vector<ExtractedEntity> extract_entities(const EpisodeContext& ctx,
                                                std::span<const ExtractedEntity> already_extracted) override;
  EntityResolution resolve_entity(const EpisodeContext& ctx, std::span<const EntityCandidate> existing,
                                  const ExtractedEntity& candidate) override;
  std::vector<ExtractedFact> extract_facts(const EpisodeContext& ctx,
                                           std::span<const ExtractedEntity> entities) override;
  FactResolution resolve_fact(std::span<const EdgeView> existing, const EdgeView& proposed) override;
  TemporalBounds extract_temporal(const EpisodeContext& ctx, Timestamp reference, const std::string& fact) override;
  std::vector<EdgeId> detect_contradictions(const EdgeView& proposed, std::span<const EdgeView> related) override;
  std::string summarize(std::span<const std::string> texts) override;
  std::string community_name(const std::string& summary) override;

  /// Fact phrasing for a predicate, e.g. WORKS_FOR -> "works at".
  static std::string_view canonical_phrase(std::string_view predicate);
  static bool is_single_valued(std::string_view predicate);

 private:
  MockExtractorOptions options_;
};

}  // namespace tkg
