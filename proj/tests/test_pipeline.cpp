#include <gtest/gtest.h>

#include <functional>

#include "tkg/engine.hpp"
#include "tkg/mock_extractor.hpp"
#include "tkg/synthetic.hpp"

using namespace tkg;

namespace {

constexpr std::size_t kDim = 128;

/// Rule-based extractor with overridable steps.
class ScriptedExtractor final : public Extractor {
 public:
  explicit ScriptedExtractor(MockExtractorOptions o = {}) : inner(o) {}

  std::vector<ExtractedEntity> extract_entities(const EpisodeContext& ctx,
                                                std::span<const ExtractedEntity> already) override {
    contexts.push_back(ctx);
    if (on_entities) return on_entities(ctx, already);
    return inner.extract_entities(ctx, already);
  }
  EntityResolution resolve_entity(const EpisodeContext& ctx, std::span<const EntityCandidate> existing,
                                  const ExtractedEntity& c) override {
    return inner.resolve_entity(ctx, existing, c);
  }
  std::vector<ExtractedFact> extract_facts(const EpisodeContext& ctx,
                                           std::span<const ExtractedEntity> entities) override {
    if (on_facts) return on_facts(ctx, entities);
    return inner.extract_facts(ctx, entities);
  }
  FactResolution resolve_fact(std::span<const EdgeView> existing, const EdgeView& proposed) override {
    return inner.resolve_fact(existing, proposed);
  }
  TemporalBounds extract_temporal(const EpisodeContext& ctx, Timestamp ref, const std::string& fact) override {
    if (on_temporal) return on_temporal(fact);
    return inner.extract_temporal(ctx, ref, fact);
  }
  std::vector<EdgeId> detect_contradictions(const EdgeView& p, std::span<const EdgeView> related) override {
    return inner.detect_contradictions(p, related);
  }
  std::string summarize(std::span<const std::string> texts) override { return inner.summarize(texts); }
  std::string community_name(const std::string& s) override { return inner.community_name(s); }

  DeterministicMockExtractor inner;
  std::vector<EpisodeContext> contexts;
  std::function<std::vector<ExtractedEntity>(const EpisodeContext&, std::span<const ExtractedEntity>)> on_entities;
  std::function<std::vector<ExtractedFact>(const EpisodeContext&, std::span<const ExtractedEntity>)> on_facts;
  std::function<TemporalBounds(const std::string&)> on_temporal;
};

struct Harness {
  explicit Harness(MockExtractorOptions o = {}, PipelineConfig pc = {})
      : clock(std::make_shared<ManualClock>(Timestamp::from_civil(2025, 1, 1), 1000)),
        extractor(std::make_shared<ScriptedExtractor>(o)),
        embedder(std::make_shared<HashingEmbedder>(kDim)) {
    GraphConfig gc;
    gc.name = "pipeline";
    gc.embedding_dim = kDim;
    EngineConfig ec;
    ec.pipeline = pc;
    engine = std::make_unique<Engine>(std::make_unique<Graph>(gc, clock), extractor, embedder, nullptr, ec);
  }

  IngestReport say(const std::string& actor, const std::string& content,
                   Timestamp t_ref = Timestamp::from_civil(2024, 3, 15)) {
    Episode ep;
    ep.kind = EpisodeKind::Message;
    ep.actor = actor;
    ep.content = content;
    ep.t_ref = t_ref;
    return engine->ingest(ep);
  }

  GraphSnapshot snap() const { return engine->snapshot(); }

  const EntityNode* entity(const std::string& name) const {
    for (const auto& [_, n] : snap()->entities())
      if (n->name == name) return n.get();
    return nullptr;
  }

  std::vector<const SemanticEdge*> edges_with(const std::string& needle) const {
    std::vector<const SemanticEdge*> out;
    auto s = snap();
    keep.push_back(s);
    for (const auto& [_, e] : s->edges())
      if (e->fact.find(needle) != std::string::npos) out.push_back(e.get());
    return out;
  }

  std::shared_ptr<ManualClock> clock;
  std::shared_ptr<ScriptedExtractor> extractor;
  std::shared_ptr<HashingEmbedder> embedder;
  std::unique_ptr<Engine> engine;
  mutable std::vector<GraphSnapshot> keep;
};

ErrorCode ingest_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const IngestError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no IngestError";
  return ErrorCode::Io;
}

Timestamp day(int y, unsigned m, unsigned d) { return Timestamp::from_civil(y, m, d); }

}  // namespace

TEST(Pipeline, SpeakerFactAboutEmployer) {
  Harness h;
  const auto r = h.say("Alice", "I work at Acme Corp");
  EXPECT_EQ(r.entities_added, 2u);
  EXPECT_EQ(r.edges_added, 1u);
  const auto* alice = h.entity("Alice");
  const auto* acme = h.entity("Acme Corp");
  ASSERT_TRUE(alice && acme);
  const auto edges = h.edges_with("works at");
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0]->source, alice->id);
  EXPECT_EQ(edges[0]->target, acme->id);
  EXPECT_EQ(edges[0]->predicate, "WORKS_FOR");
  EXPECT_EQ(edges[0]->fact, "Alice works at Acme Corp");
  EXPECT_EQ(edges[0]->episodes, std::vector<EpisodeId>{r.episode});
  const auto linked = h.snap()->entities_of(r.episode);
  EXPECT_EQ(std::set<NodeId>(linked.begin(), linked.end()), (std::set<NodeId>{alice->id, acme->id}));
}

TEST(Pipeline, ReingestingAnEpisodeIsRejected) {
  Harness h;
  Episode ep;
  ep.actor = "Alice";
  ep.content = "I work at Acme Corp";
  ep.t_ref = day(2024, 3, 1);
  ep.id = EpisodeId{Uuid{42, 42}};
  h.engine->ingest(ep);
  const auto before = h.snap();
  EXPECT_EQ(ingest_error([&] { h.engine->ingest(ep); }), ErrorCode::AlreadyIngested);
  EXPECT_TRUE(h.snap()->same_content(*before));
}

TEST(Pipeline, SpeakerIsAlwaysAnEntity) {
  Harness h;
  const auto r = h.say("Alice", "thanks, that sounds lovely");
  EXPECT_EQ(h.snap()->entities().size(), 1u);
  EXPECT_TRUE(h.snap()->edges().empty());
  EXPECT_EQ(r.entities_added, 1u);
  // Even when the extractor forgets the speaker.
  Harness forgetful;
  forgetful.extractor->on_entities = [](const EpisodeContext&, std::span<const ExtractedEntity>) {
    return std::vector<ExtractedEntity>{};
  };
  forgetful.say("Bob", "hello there");
  ASSERT_NE(forgetful.entity("Bob"), nullptr);
}

TEST(Pipeline, EmptyContentAndMissingActor) {
  Harness h;
  EXPECT_EQ(ingest_error([&] { h.say("Alice", "   "); }), ErrorCode::EmptyContent);
  Episode ep;
  ep.content = "hi";
  EXPECT_EQ(ingest_error([&] { h.engine->ingest(ep); }), ErrorCode::MissingActor);
  EXPECT_TRUE(h.snap()->episodes().empty());
}

TEST(Pipeline, ExactNameResolvesToExistingNode) {
  Harness h;
  h.say("Bob", "Alan Turing works at Bletchley Park.");
  const auto n = h.snap()->entities().size();
  const auto r = h.say("Bob", "Alan Turing lives in Wilmslow.");
  EXPECT_EQ(h.snap()->entities().size(), n + 1);  // Wilmslow only
  EXPECT_EQ(r.entities_merged, 2u);                // Bob and Alan Turing
}

TEST(Pipeline, TokenSubsetMergesInitials) {
  Harness h({.token_subset_matching = true});
  h.say("Bob", "Alan Turing works at Bletchley Park.");
  const auto n = h.snap()->entities().size();
  h.say("Bob", "I met A. Turing.");
  EXPECT_EQ(h.snap()->entities().size(), n);
  EXPECT_NE(h.entity("Alan Turing"), nullptr);
  EXPECT_EQ(h.entity("A. Turing"), nullptr);
}

TEST(Pipeline, DuplicateFactGrowsProvenance) {
  Harness h;
  const auto r1 = h.say("Alice", "I work at Acme Corp.");
  const auto r2 = h.say("Alice", "I work at Acme Corp.");
  const auto edges = h.edges_with("works at");
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0]->episodes, (std::vector<EpisodeId>{r1.episode, r2.episode}));
  EXPECT_EQ(r2.edges_merged, 1u);
  EXPECT_EQ(r2.edges_added, 0u);
}

TEST(Pipeline, GroupFactBecomesPairwiseEdgesWithSharedGroup) {
  Harness h;
  h.say("Theo", "Alice, Bob and Carol are friends.");
  const auto edges = h.edges_with("are friends");
  ASSERT_EQ(edges.size(), 3u);
  std::set<std::set<std::string>> pairs;
  for (const auto* e : edges) {
    ASSERT_TRUE(e->fact_group);
    EXPECT_EQ(e->fact_group, edges[0]->fact_group);
    pairs.insert({h.snap()->require_entity(e->source).name, h.snap()->require_entity(e->target).name});
  }
  EXPECT_EQ(pairs, (std::set<std::set<std::string>>{{"Alice", "Bob"}, {"Alice", "Carol"}, {"Bob", "Carol"}}));
}

TEST(Pipeline, SameTextOnAnotherPairIsANewEdge) {
  Harness h;
  h.extractor->on_facts = [](const EpisodeContext& ctx, std::span<const ExtractedEntity> ents) {
    std::vector<ExtractedFact> out;
    if (ents.size() >= 3) out.push_back({ents[1].name, ents[2].name, "SHARES_OFFICE", "They share an office"});
    (void)ctx;
    return out;
  };
  h.say("Zed", "Ann Lee and Ben Moss.");
  h.say("Zed", "Cat Ng and Dan Ortiz.");
  EXPECT_EQ(h.edges_with("share an office").size(), 2u);
  h.say("Zed", "Ann Lee and Ben Moss.");
  EXPECT_EQ(h.edges_with("share an office").size(), 2u);
}

TEST(Pipeline, SelfLoopsAndUnknownNamesAreSkipped) {
  Harness h;
  h.extractor->on_facts = [](const EpisodeContext&, std::span<const ExtractedEntity> ents) {
    return std::vector<ExtractedFact>{{ents[0].name, ents[0].name, "KNOWS", "knows self"},
                                      {ents[0].name, "Nobody Known", "KNOWS", "knows a ghost"}};
  };
  const auto r = h.say("Alice", "hello");
  EXPECT_TRUE(h.snap()->edges().empty());
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Pipeline, RelativeDateAgainstReference) {
  Harness h;
  h.say("Alice", "I started a new job at Initech two weeks ago.", day(2024, 3, 15));
  const auto edges = h.edges_with("Initech");
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_EQ(edges[0]->t_valid, day(2024, 3, 1));
  EXPECT_FALSE(edges[0]->t_invalid);
}

TEST(Pipeline, YearOnlyMeansJanuaryFirst) {
  Harness h;
  h.say("Alice", "I moved to Lisbon in 2020.");
  EXPECT_EQ(h.edges_with("Lisbon")[0]->t_valid, day(2020, 1, 1));
}

TEST(Pipeline, PresentTenseUsesReference) {
  Harness h;
  const auto ref = Timestamp::from_civil(2024, 5, 2, 14, 30);
  h.say("Alice", "I live in Lisbon.", ref);
  EXPECT_EQ(h.edges_with("Lisbon")[0]->t_valid, ref);
}

TEST(Pipeline, ReversedRangeIsDropped) {
  Harness h;
  const auto r = h.say("Alice", "I worked at Globex from 2019 until 2015.");
  const auto edges = h.edges_with("Globex");
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_FALSE(edges[0]->t_valid);
  EXPECT_FALSE(edges[0]->t_invalid);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Pipeline, MalformedModelDatesAreDropped) {
  Harness h;
  h.extractor->on_temporal = [](const std::string&) { return TemporalBounds{"last Tuesday", "2024-99-01"}; };
  const auto r = h.say("Alice", "I live in Lisbon.");
  const auto edges = h.edges_with("Lisbon");
  ASSERT_EQ(edges.size(), 1u);
  EXPECT_FALSE(edges[0]->t_valid);
  EXPECT_FALSE(edges[0]->t_invalid);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Pipeline, NewerFactInvalidatesOlder) {
  Harness h;
  h.say("Alice", "I live in Boston since 2020.", day(2020, 6, 1));
  const auto r = h.say("Alice", "I moved to Paris in 2024.", day(2024, 3, 1));
  const auto boston = h.edges_with("Boston");
  const auto paris = h.edges_with("Paris");
  ASSERT_EQ(boston.size(), 1u);
  ASSERT_EQ(paris.size(), 1u);
  EXPECT_EQ(paris[0]->t_valid, day(2024, 1, 1));
  EXPECT_EQ(boston[0]->t_invalid, paris[0]->t_valid);
  ASSERT_TRUE(boston[0]->t_expired);
  EXPECT_GE(*boston[0]->t_expired, boston[0]->t_created);
  EXPECT_EQ(r.invalidated, std::vector<EdgeId>{boston[0]->id});
  EXPECT_FALSE(paris[0]->t_invalid);
}

TEST(Pipeline, DisjointIntervalsAreLeftAlone) {
  Harness h;
  h.say("Alice", "I lived in Boston from 2018 until 2021.", day(2022, 1, 1));
  const auto r = h.say("Alice", "I live in Paris since 2024.", day(2024, 3, 1));
  EXPECT_TRUE(r.invalidated.empty());
  const auto boston = h.edges_with("Boston");
  EXPECT_EQ(boston[0]->t_invalid, day(2021, 1, 1));
  EXPECT_FALSE(boston[0]->t_expired);
}

TEST(Pipeline, UndatedContradictionFallsBackToCreationTime) {
  Harness h;
  h.say("Alice", "I live in Boston since 2020.", day(2020, 6, 1));
  h.say("Alice", "I lived in Paris.", day(2024, 3, 1));
  const auto paris = h.edges_with("Paris");
  ASSERT_EQ(paris.size(), 1u);
  ASSERT_FALSE(paris[0]->t_valid);
  const auto boston = h.edges_with("Boston");
  EXPECT_EQ(boston[0]->t_invalid, paris[0]->t_created);
}

TEST(Pipeline, OlderFactDoesNotInvalidateNewer) {
  Harness h;
  h.say("Alice", "I live in Paris since 2024.", day(2024, 3, 1));
  const auto r = h.say("Alice", "I lived in Boston from 2020 until 2023.", day(2024, 4, 1));
  EXPECT_TRUE(r.invalidated.empty());
  EXPECT_FALSE(h.edges_with("Paris")[0]->t_invalid);
}

TEST(Pipeline, ExtractorFailureLeavesGraphUntouched) {
  Harness h;
  h.say("Alice", "I work at Acme Corp.");
  const auto before = h.snap();
  h.extractor->on_facts = [](const EpisodeContext&, std::span<const ExtractedEntity>) -> std::vector<ExtractedFact> {
    throw std::runtime_error("model timed out");
  };
  try {
    h.say("Alice", "I live in Lisbon.");
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ExtractorFailure);
    EXPECT_GE(e.partial().entities.size(), 1u);
  }
  EXPECT_TRUE(h.snap()->same_content(*before));
  EXPECT_EQ(h.snap(), before);
}

TEST(Pipeline, ContextWindowHoldsPreviousEpisodes) {
  Harness h;
  for (int i = 0; i < 6; ++i) h.say("Alice", "message " + std::to_string(i));
  const auto& last = h.extractor->contexts.back();
  ASSERT_EQ(last.previous.size(), 4u);
  EXPECT_EQ(last.previous.front().content, "message 1");
  EXPECT_EQ(last.previous.back().content, "message 4");
  EXPECT_EQ(last.current.content, "message 5");
  EXPECT_TRUE(h.extractor->contexts.front().previous.empty());
}

TEST(Pipeline, ReflectionAddsMissedEntities) {
  Harness h;
  h.extractor->on_entities = [&](const EpisodeContext& ctx, std::span<const ExtractedEntity> already) {
    if (already.empty()) return std::vector<ExtractedEntity>{{*ctx.current.actor, ""}};
    return h.extractor->inner.extract_entities(ctx, already);
  };
  h.say("Alice", "I work at Acme Corp.");
  EXPECT_NE(h.entity("Acme Corp"), nullptr);
  EXPECT_EQ(h.edges_with("Acme").size(), 1u);
}

TEST(Pipeline, SequentialAndParallelTemporalCallsAgree) {
  Harness a({}, {.parallel_calls = true});
  Harness b({}, {.parallel_calls = false});
  const auto msgs = synthetic::generate_episode_stream({.episodes = 80, .seed = 4});
  for (const auto& m : msgs) {
    a.engine->ingest(m);
    b.engine->ingest(m);
  }
  EXPECT_TRUE(a.snap()->same_content(*b.snap()));
}

TEST(Pipeline, RandomStreamKeepsTemporalInvariants) {
  Harness h;
  const auto msgs = synthetic::generate_episode_stream({.episodes = 300, .seed = 17});
  std::size_t invalidated = 0;
  for (const auto& m : msgs) invalidated += h.engine->ingest(m).edges_invalidated;
  EXPECT_GT(invalidated, 0u);
  const auto s = h.snap();
  for (const auto& [_, e] : s->edges()) {
    if (e->t_valid && e->t_invalid) {
      EXPECT_LE(*e->t_valid, *e->t_invalid) << e->fact;
    }
    if (e->t_expired) {
      EXPECT_LE(e->t_created, *e->t_expired) << e->fact;
      EXPECT_TRUE(e->t_invalid) << e->fact;
    }
    EXPECT_FALSE(e->episodes.empty());
    for (const auto& ep : e->episodes) EXPECT_NE(s->episode(ep), nullptr);
  }
}
