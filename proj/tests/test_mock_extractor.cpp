#include <gtest/gtest.h>

#include "tkg/mock_extractor.hpp"

using namespace tkg;

namespace {

EpisodeContext msg(const std::string& actor, const std::string& content,
                   Timestamp t_ref = Timestamp::from_civil(2024, 3, 15)) {
  EpisodeContext ctx;
  ctx.current.kind = EpisodeKind::Message;
  ctx.current.actor = actor;
  ctx.current.content = content;
  ctx.current.t_ref = t_ref;
  return ctx;
}

std::vector<std::string> names(const std::vector<ExtractedEntity>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(e.name);
  return out;
}

struct Bounds {
  std::optional<std::string> valid, invalid;
};

Bounds temporal(const std::string& fact, Timestamp ref = Timestamp::from_civil(2024, 3, 15)) {
  DeterministicMockExtractor m;
  const auto b = m.extract_temporal(EpisodeContext{}, ref, fact);
  return {b.valid_at, b.invalid_at};
}

EdgeView view(std::uint64_t id, std::uint64_t src, std::uint64_t dst, const std::string& predicate,
              const std::string& fact) {
  EdgeView v;
  v.id = EdgeId{Uuid{0, id}};
  v.source = NodeId{Uuid{1, src}};
  v.target = NodeId{Uuid{1, dst}};
  v.predicate = predicate;
  v.fact = fact;
  return v;
}

}  // namespace

TEST(MockExtractor, SpeakerAndCapitalizedRuns) {
  DeterministicMockExtractor m;
  const auto ctx = msg("Alice", "I work at Acme Corp.");
  const auto first = m.extract_entities(ctx, {});
  EXPECT_EQ(names(first), (std::vector<std::string>{"Alice", "Acme Corp"}));
  // Reflection reports only what the given list lacks.
  const std::vector<ExtractedEntity> partial{{"Alice", ""}};
  EXPECT_EQ(names(m.extract_entities(ctx, partial)), std::vector<std::string>{"Acme Corp"});
  EXPECT_TRUE(m.extract_entities(ctx, first).empty());
}

TEST(MockExtractor, StopwordsMonthsAndInitials) {
  DeterministicMockExtractor m;
  const auto ctx = msg("Bob", "The weather in Lisbon was nice. In March I met Dr. Jane Smith and A. Turing!");
  const auto got = names(m.extract_entities(ctx, {}));
  EXPECT_NE(std::find(got.begin(), got.end(), "Lisbon"), got.end());
  EXPECT_NE(std::find(got.begin(), got.end(), "A. Turing"), got.end());
  EXPECT_EQ(std::find(got.begin(), got.end(), "The"), got.end());
  EXPECT_EQ(std::find(got.begin(), got.end(), "March"), got.end());
  EXPECT_EQ(std::find(got.begin(), got.end(), "In March"), got.end());
}

TEST(MockExtractor, SpeakerOnlyMessage) {
  DeterministicMockExtractor m;
  const auto ctx = msg("Alice", "that sounds lovely, thanks");
  const auto ents = m.extract_entities(ctx, {});
  EXPECT_EQ(names(ents), std::vector<std::string>{"Alice"});
  EXPECT_TRUE(m.extract_facts(ctx, ents).empty());
}

TEST(MockExtractor, FirstPersonFact) {
  DeterministicMockExtractor m;
  const auto ctx = msg("Alice", "I work at Acme Corp");
  const auto facts = m.extract_facts(ctx, m.extract_entities(ctx, {}));
  ASSERT_EQ(facts.size(), 1u);
  EXPECT_EQ(facts[0], (ExtractedFact{"Alice", "Acme Corp", "WORKS_FOR", "Alice works at Acme Corp"}));
}

TEST(MockExtractor, ThirdPersonFactsWithTimeTail) {
  DeterministicMockExtractor m;
  const auto ctx = msg("Theo", "Nora Lindqvist moved to Lisbon two weeks ago. Omar worked at Globex from 2015 until 2018.");
  const auto facts = m.extract_facts(ctx, m.extract_entities(ctx, {}));
  ASSERT_EQ(facts.size(), 2u);
  EXPECT_EQ(facts[0], (ExtractedFact{"Nora Lindqvist", "Lisbon", "LIVES_IN", "Nora Lindqvist lives in Lisbon two weeks ago"}));
  EXPECT_EQ(facts[1], (ExtractedFact{"Omar", "Globex", "WORKS_FOR", "Omar worked at Globex from 2015 until 2018"}));
}

TEST(MockExtractor, GroupFactsArePairwise) {
  DeterministicMockExtractor m;
  const auto ctx = msg("Theo", "Alice, Bob and Carol are friends.");
  const auto facts = m.extract_facts(ctx, m.extract_entities(ctx, {}));
  ASSERT_EQ(facts.size(), 3u);
  for (const auto& f : facts) {
    EXPECT_EQ(f.predicate, "IS_FRIENDS_WITH");
    EXPECT_EQ(f.fact, "Alice, Bob and Carol are friends");
  }
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& f : facts) pairs.insert({f.source, f.target});
  EXPECT_EQ(pairs, (std::set<std::pair<std::string, std::string>>{{"Alice", "Bob"}, {"Alice", "Carol"}, {"Bob", "Carol"}}));
}

TEST(MockExtractor, UnknownObjectYieldsNoFact) {
  DeterministicMockExtractor m;
  const auto ctx = msg("Alice", "I work at home these days.");
  EXPECT_TRUE(m.extract_facts(ctx, m.extract_entities(ctx, {})).empty());
}

TEST(MockExtractor, RelativeDates) {
  EXPECT_EQ(temporal("Alice started job two weeks ago", Timestamp::from_civil(2024, 3, 15)).valid,
            "2024-03-01T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice moved to Oslo 3 days ago").valid, "2024-03-12T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice moved to Oslo a month ago").valid, "2024-02-15T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice moved to Oslo yesterday").valid, "2024-03-14T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice moved to Oslo last year").valid, "2023-03-15T00:00:00.000Z");
}

TEST(MockExtractor, AbsoluteDates) {
  EXPECT_EQ(temporal("Alice works at Acme in 2020").valid, "2020-01-01T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice works at Acme since March 2019").valid, "2019-03-01T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice was born in Porto on June 6, 1998").valid, "1998-06-06T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice moved to Oslo on 2021-07-04").valid, "2021-07-04T00:00:00.000Z");
  EXPECT_EQ(temporal("Alice moved to Oslo on 4 July 2021").valid, "2021-07-04T00:00:00.000Z");
}

TEST(MockExtractor, RangesAndEndDates) {
  const auto r = temporal("Omar worked at Globex from 2015 until 2018");
  EXPECT_EQ(r.valid, "2015-01-01T00:00:00.000Z");
  EXPECT_EQ(r.invalid, "2018-01-01T00:00:00.000Z");
  const auto u = temporal("Omar lives in Oslo until 2026");
  EXPECT_EQ(u.invalid, "2026-01-01T00:00:00.000Z");
  EXPECT_EQ(u.valid, "2024-03-15T00:00:00.000Z");
}

TEST(MockExtractor, TenseRuleWithoutDates) {
  const auto ref = Timestamp::from_civil(2024, 3, 15, 9, 30);
  EXPECT_EQ(temporal("Alice works at Acme", ref).valid, "2024-03-15T09:30:00.000Z");
  EXPECT_FALSE(temporal("Alice worked at Acme", ref).valid);
  EXPECT_FALSE(temporal("Alice visited Kyoto", ref).valid);
  EXPECT_FALSE(temporal("Alice worked at Acme", ref).invalid);
}

TEST(MockExtractor, ExactNameResolution) {
  DeterministicMockExtractor m;
  const std::vector<EntityCandidate> existing{{NodeId{Uuid{1, 1}}, "Alan Turing", ""}};
  const auto r = m.resolve_entity(EpisodeContext{}, existing, {"alan turing", ""});
  EXPECT_TRUE(r.duplicate);
  EXPECT_EQ(r.id, existing[0].id);
  EXPECT_FALSE(m.resolve_entity(EpisodeContext{}, {}, {"Alan Turing", ""}).duplicate);
  EXPECT_FALSE(m.resolve_entity(EpisodeContext{}, existing, {"A. Turing", ""}).duplicate);
}

TEST(MockExtractor, TokenSubsetResolution) {
  DeterministicMockExtractor m({.token_subset_matching = true});
  const std::vector<EntityCandidate> existing{{NodeId{Uuid{1, 1}}, "Alan Turing", ""},
                                              {NodeId{Uuid{1, 2}}, "Ada Lovelace", ""}};
  const auto r = m.resolve_entity(EpisodeContext{}, existing, {"A. Turing", ""});
  EXPECT_TRUE(r.duplicate);
  EXPECT_EQ(r.id, existing[0].id);
  EXPECT_EQ(r.merged_name, "Alan Turing");
  EXPECT_FALSE(m.resolve_entity(EpisodeContext{}, existing, {"B. Turing", ""}).duplicate);
  EXPECT_FALSE(m.resolve_entity(EpisodeContext{}, existing, {"Turing Alan", ""}).duplicate);
}

TEST(MockExtractor, FactResolution) {
  DeterministicMockExtractor m;
  const std::vector<EdgeView> existing{view(1, 1, 2, "WORKS_FOR", "Alice works at Acme"),
                                       view(2, 1, 2, "KNOWS", "Alice works at Acme")};
  auto r = m.resolve_fact(existing, view(9, 1, 2, "WORKS_FOR", "  alice WORKS at acme "));
  EXPECT_TRUE(r.duplicate);
  EXPECT_EQ(r.id, existing[0].id);
  EXPECT_FALSE(m.resolve_fact(existing, view(9, 1, 2, "WORKS_FOR", "Alice works at Acme Inc")).duplicate);
  EXPECT_FALSE(m.resolve_fact({}, view(9, 1, 2, "WORKS_FOR", "x")).duplicate);
}

TEST(MockExtractor, Contradictions) {
  DeterministicMockExtractor m;
  const auto boston = view(1, 1, 2, "LIVES_IN", "Alice lives in Boston");
  const auto paris = view(2, 1, 3, "LIVES_IN", "Alice lives in Paris");
  const auto pizza = view(3, 1, 4, "LIKES", "Alice likes Pizza");
  const auto pasta = view(4, 1, 5, "LIKES", "Alice likes Pasta");
  std::vector<EdgeView> related{boston, pizza};
  EXPECT_EQ(m.detect_contradictions(paris, related), std::vector<EdgeId>{boston.id});
  // Multi-valued predicates only conflict on the same pair.
  EXPECT_TRUE(m.detect_contradictions(pasta, related).empty());
  const auto pair_change = view(5, 4, 1, "LIKES", "Alice likes Pizza no more");
  EXPECT_EQ(m.detect_contradictions(pair_change, related), std::vector<EdgeId>{pizza.id});
  // Another person living elsewhere is not a conflict.
  EXPECT_TRUE(m.detect_contradictions(view(6, 7, 3, "LIVES_IN", "Bob lives in Paris"), related).empty());
  EXPECT_TRUE(DeterministicMockExtractor::is_single_valued("BORN_IN"));
  EXPECT_FALSE(DeterministicMockExtractor::is_single_valued("KNOWS"));
}

TEST(MockExtractor, SummarizeKeepsFirstUniqueSentences) {
  DeterministicMockExtractor m;
  const std::vector<std::string> texts{"Alice is an engineer. She lives in Paris.", "Alice is an engineer.",
                                       "She likes jazz. She owns a cat."};
  EXPECT_EQ(m.summarize(texts), "Alice is an engineer. She lives in Paris. She likes jazz.");
  EXPECT_EQ(m.summarize(std::vector<std::string>{}), "");
}

TEST(MockExtractor, CommunityName) {
  DeterministicMockExtractor m;
  EXPECT_EQ(m.community_name("Paris cafe. The Paris museum near the cafe in Paris 2024."), "paris cafe museum near");
  EXPECT_EQ(m.community_name("a an of 12"), "community");
}

TEST(MockExtractor, RenderEpisode) {
  Episode ep;
  ep.actor = "Alice";
  ep.content = "hi";
  EXPECT_EQ(render_episode(ep), "Alice: hi");
  ep.kind = EpisodeKind::Text;
  EXPECT_EQ(render_episode(ep), "hi");
}
