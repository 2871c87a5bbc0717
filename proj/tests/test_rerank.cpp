#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "tkg/rerank.hpp"

using namespace tkg;
using testing_util::Fixture;

namespace {

using Ids = RankedList<EdgeId>;

EdgeId eid(std::uint64_t n) { return EdgeId{Uuid{0, n}}; }

Ids list(std::initializer_list<std::uint64_t> ns) {
  Ids out;
  for (auto n : ns) out.push_back({eid(n), 0.0});
  return out;
}

template <class Id>
std::vector<Id> ids_of(const RankedList<Id>& l) {
  std::vector<Id> out;
  for (const auto& s : l) out.push_back(s.id);
  return out;
}

template <class Id>
bool same_members(RankedList<Id> a, RankedList<Id> b) {
  auto x = ids_of(a), y = ids_of(b);
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x == y;
}

class Failing final : public CrossEncoder {
 public:
  std::vector<double> score(std::string_view, std::span<const std::string>) override {
    throw std::runtime_error("scorer offline");
  }
};

class Short final : public CrossEncoder {
 public:
  std::vector<double> score(std::string_view, std::span<const std::string>) override { return {1.0}; }
};

}  // namespace

TEST(Rrf, ItemTopOfTwoListsScoresTwoOverSixtyOne) {
  const std::vector<Ids> lists{list({1, 2, 3}), list({1, 3})};
  const auto out = rrf<EdgeId>(lists);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].id, eid(1));
  EXPECT_DOUBLE_EQ(out[0].score, 2.0 / 61.0);
  EXPECT_EQ(out[1].id, eid(3));
  EXPECT_DOUBLE_EQ(out[1].score, 1.0 / 63.0 + 1.0 / 62.0);
}

TEST(Rrf, SingleListKeepsOrder) {
  const std::vector<Ids> lists{list({9, 4, 7, 1})};
  const auto out = rrf<EdgeId>(lists);
  EXPECT_EQ(ids_of(out), ids_of(lists[0]));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_DOUBLE_EQ(out[i].score, 1.0 / (60.0 + i + 1));
}

TEST(Rrf, TiesBreakByIdAndKIsHonoured) {
  const std::vector<Ids> lists{list({5, 2}), list({2, 5})};
  const auto out = rrf<EdgeId>(lists, 1);
  EXPECT_EQ(ids_of(out), (std::vector<EdgeId>{eid(2), eid(5)}));
  EXPECT_DOUBLE_EQ(out[0].score, 0.5 + 1.0 / 3.0);
  EXPECT_TRUE(rrf<EdgeId>(std::vector<Ids>{}).empty());
}

TEST(Mmr, LambdaOneIsRelevanceOrder) {
  const std::vector<float> v{1, 0}, w{0, 1};
  std::vector<MmrCandidate<EdgeId>> c{{eid(1), 0.2, v}, {eid(2), 0.9, v}, {eid(3), 0.5, w}, {eid(4), 0.9, w}};
  const auto out = mmr<EdgeId>(c, 1.0);
  EXPECT_EQ(ids_of(out), (std::vector<EdgeId>{eid(2), eid(4), eid(3), eid(1)}));
}

TEST(Mmr, DuplicateEmbeddingIsPushedDown) {
  const std::vector<float> a{1, 0, 0}, b{0, 1, 0};
  std::vector<MmrCandidate<EdgeId>> c{{eid(1), 0.9, a}, {eid(2), 0.85, a}, {eid(3), 0.5, b}};
  const auto out = mmr<EdgeId>(c, 0.5);
  EXPECT_EQ(ids_of(out), (std::vector<EdgeId>{eid(1), eid(3), eid(2)}));
  EXPECT_DOUBLE_EQ(out[0].score, 0.45);
  EXPECT_DOUBLE_EQ(out[1].score, 0.25);
  EXPECT_NEAR(out[2].score, 0.5 * 0.85 - 0.5, 1e-12);
}

TEST(Mmr, SingleCandidateAndMissingEmbeddings) {
  const std::vector<float> a{1, 0};
  std::vector<MmrCandidate<EdgeId>> one{{eid(1), 0.3, a}};
  EXPECT_EQ(ids_of(mmr<EdgeId>(one, 0.5)), std::vector<EdgeId>{eid(1)});
  std::vector<MmrCandidate<EdgeId>> gaps{{eid(1), 0.3, a}, {eid(2), 0.9, {}}};
  std::size_t dropped = 0;
  EXPECT_EQ(ids_of(mmr<EdgeId>(gaps, 0.5, &dropped)), std::vector<EdgeId>{eid(1)});
  EXPECT_EQ(dropped, 1u);
}

TEST(EpisodeMentions, MoreEpisodesFirstStable) {
  Fixture f;
  const auto a = f.edge("A", "B", "A knows B");
  const auto b = f.edge("B", "C", "B knows C");
  const auto c = f.edge("C", "D", "C knows D");
  Episode ep;
  ep.actor = "A";
  ep.content = "again";
  const auto extra = f.graph.add_episode(ep);
  auto e = *f.graph.snapshot()->edge(c);
  e.episodes.push_back(extra);
  f.graph.upsert_edge(e);
  const auto out = episode_mentions(*f.graph.snapshot(), Ids{{a, 0}, {b, 0}, {c, 0}});
  EXPECT_EQ(ids_of(out), (std::vector<EdgeId>{c, a, b}));
  EXPECT_EQ(out[0].score, 2.0);
}

TEST(NodeDistance, PathGraphOrdersByHops) {
  Fixture f;
  f.edge("A", "B", "A knows B");
  f.edge("B", "C", "B knows C");
  f.edge("C", "D", "C knows D");
  f.entity("E");
  auto n = [&](const char* s) { return f.ids[s]; };
  const RankedList<NodeId> in{{n("E"), 0}, {n("D"), 0}, {n("C"), 0}, {n("A"), 0}, {n("B"), 0}};
  const auto out = node_distance(*f.graph.snapshot(), in, n("B"));
  EXPECT_EQ(ids_of(out), (std::vector<NodeId>{n("B"), n("C"), n("A"), n("D"), n("E")}));
  EXPECT_EQ(out.front().score, 1.0);
  EXPECT_EQ(out.back().score, 0.0);
  EXPECT_THROW(node_distance(*f.graph.snapshot(), in, NodeId{Uuid{7, 7}}), Error);
}

TEST(NodeDistance, EdgesTakeNearerEndpoint) {
  Fixture f;
  const auto ab = f.edge("A", "B", "A knows B");
  const auto cd = f.edge("C", "D", "C knows D");
  const auto bc = f.edge("B", "C", "B knows C");
  const auto out = node_distance(*f.graph.snapshot(), Ids{{cd, 0}, {bc, 0}, {ab, 0}}, f.ids["A"]);
  EXPECT_EQ(ids_of(out), (std::vector<EdgeId>{ab, bc, cd}));
}

TEST(CrossEncoder, JaccardScores) {
  JaccardCrossEncoder j;
  const std::vector<std::string> texts{"alice works acme", "alice works", "Alice", "zebra"};
  const auto s = j.score("alice works acme", texts);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s[2], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s[3], 0.0);
}

TEST(CrossEncoder, SortsByScoreAndFallsBack) {
  JaccardCrossEncoder j;
  const std::vector<std::string> texts{"zebra", "alice works", "alice works acme"};
  const auto in = list({1, 2, 3});
  const auto ok = cross_encode(j, "alice works acme", in, texts);
  EXPECT_FALSE(ok.fell_back);
  EXPECT_EQ(ids_of(ok.ranked), (std::vector<EdgeId>{eid(3), eid(2), eid(1)}));
  Failing bad;
  const auto down = cross_encode(bad, "q", in, texts);
  EXPECT_TRUE(down.fell_back);
  EXPECT_EQ(down.ranked, in);
  EXPECT_NE(down.error.find("offline"), std::string::npos);
  Short wrong;
  EXPECT_TRUE(cross_encode(wrong, "q", in, texts).fell_back);
}

TEST(RerankerConfig, Validation) {
  RerankerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rrf_k = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.mmr_lambda = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.method = RerankMethod::NodeDistance;
  EXPECT_THROW(c.validate(), Error);
  c.centroid = NodeId{Uuid{1, 1}};
  EXPECT_NO_THROW(c.validate());
  c.method = RerankMethod::Mmr;
  EXPECT_THROW(c.validate(), Error);
  for (auto m : {RerankMethod::Rrf, RerankMethod::Mmr, RerankMethod::EpisodeMentions, RerankMethod::NodeDistance,
                 RerankMethod::CrossEncoder})
    EXPECT_EQ(parse_rerank_method(to_string(m)), m);
}

TEST(RerankProperty, OutputsArePermutationsOfInputs) {
  Fixture f;
  std::mt19937_64 rng(31);
  std::vector<EdgeId> edges;
  for (int i = 0; i < 60; ++i)
    edges.push_back(f.edge("e" + std::to_string(rng() % 20), "e" + std::to_string(20 + rng() % 20),
                           "fact " + std::to_string(i)));
  const auto snap = f.graph.snapshot();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Ids> lists(1 + rng() % 3);
    std::set<EdgeId> all;
    for (auto& l : lists) {
      auto pool = edges;
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(rng() % 20);
      for (const auto& e : pool) {
        l.push_back({e, 0.0});
        all.insert(e);
      }
    }
    const auto fused = rrf<EdgeId>(lists);
    ASSERT_EQ(fused.size(), all.size());
    for (std::size_t i = 1; i < fused.size(); ++i) ASSERT_GE(fused[i - 1].score, fused[i].score);
    const auto& base = lists[0];
    EXPECT_TRUE(same_members(base, episode_mentions(*snap, base)));
    EXPECT_TRUE(same_members(base, node_distance(*snap, base, f.ids["e0"])));
    std::vector<MmrCandidate<EdgeId>> cands;
    for (const auto& s : base) cands.push_back({s.id, 1.0 / (1 + cands.size()), snap->edge(s.id)->fact_embedding});
    EXPECT_TRUE(same_members(base, mmr<EdgeId>(cands, (rng() % 11) / 10.0)));
  }
}
