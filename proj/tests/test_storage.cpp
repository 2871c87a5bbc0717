#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "tkg/communities.hpp"
#include "tkg/mock_extractor.hpp"
#include "tkg/storage.hpp"

using namespace tkg;
using testing_util::Fixture;
using testing_util::ts;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("tkg_storage_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

ErrorCode load_error(const fs::path& p) {
  try {
    Graph::load(p);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "load succeeded";
  return ErrorCode::Io;
}

// 100 entities, random facts (some closed, some expired), extra episodes and
// detected communities.
void populate(Fixture& f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 100; ++i) f.entity("Entität " + std::to_string(i), "Zusammenfassung " + std::to_string(i));
  for (int i = 0; i < 300; ++i) {
    const auto a = rng() % 100, b = rng() % 100;
    if (a == b) continue;
    std::optional<Timestamp> valid, invalid;
    if (rng() % 2) valid = ts(2000 + static_cast<int>(rng() % 20));
    if (valid && rng() % 3 == 0) invalid = add_years(*valid, 2);
    const auto id = f.edge("Entität " + std::to_string(a), "Entität " + std::to_string(b),
                           "fact " + std::to_string(i) + " ß", valid, invalid, "P" + std::to_string(rng() % 4));
    if (rng() % 5 == 0) {
      auto e = f.graph.snapshot()->require_edge(id);
      e.t_expired = f.clock->now();
      if (!e.t_invalid) e.t_invalid = e.t_valid ? add_years(*e.t_valid, 1) : ts(2030);
      f.graph.upsert_edge(e);
    }
  }
  for (int i = 0; i < 20; ++i) {
    Episode ep;
    ep.kind = i % 3 == 0 ? EpisodeKind::Json : EpisodeKind::Message;
    ep.actor = "speaker";
    ep.content = "{\"n\": " + std::to_string(i) + "}";
    ep.t_ref = ts(2024, 1 + static_cast<unsigned>(i % 12));
    ep.group = "g" + std::to_string(i % 2);
    const auto id = f.graph.add_episode(ep);
    f.graph.link_episode(id, f.ids["Entität " + std::to_string(rng() % 100)]);
  }
  DeterministicMockExtractor mock;
  CommunityManager mgr(mock, f.embedder);
  mgr.full_refresh(f.graph);
}

}  // namespace

TEST(Storage, EmptyGraphRoundTrip) {
  TempDir dir;
  Graph g;
  g.persist(dir / "empty.tkg");
  auto loaded = Graph::load(dir / "empty.tkg");
  EXPECT_TRUE(loaded->snapshot()->same_content(*g.snapshot()));
  EXPECT_TRUE(loaded->snapshot()->entities().empty());
}

TEST(Storage, RandomGraphRoundTrip) {
  TempDir dir;
  Fixture f;
  populate(f, 1);
  const auto original = f.graph.snapshot();
  ASSERT_FALSE(original->communities().empty());
  f.graph.persist(dir / "g.tkg");
  auto loaded = Graph::load(dir / "g.tkg")->snapshot();
  EXPECT_TRUE(loaded->same_content(*original));
  // Derived indexes are rebuilt to the same answers.
  const std::string q = "fact 17";
  EXPECT_EQ(loaded->fact_text_index().search(q, 10), original->fact_text_index().search(q, 10));
  const auto v = f.embedder.embed(q);
  EXPECT_EQ(loaded->fact_vector_index().top_k(v, 10), original->fact_vector_index().top_k(v, 10));
  for (const auto& [id, _] : original->entities()) {
    const auto a = loaded->incident_edges(id), b = original->incident_edges(id);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST(Storage, JournalReplaysEveryCommit) {
  TempDir dir;
  const auto path = dir / "j.tkg";
  {
    auto g = Graph::open(path, Fixture::config(64));
    HashingEmbedder emb(64);
    EntityNode n;
    n.name = "Alice";
    n.name_embedding = emb.embed("Alice");
    g->upsert_entity(n);
  }
  Fixture f;
  {
    auto g = Graph::open(path);
    EXPECT_EQ(g->snapshot()->entities().size(), 1u);
    EXPECT_EQ(g->config().embedding_dim, 64u);
    HashingEmbedder emb(64);
    EntityNode n;
    n.name = "Bob";
    n.name_embedding = emb.embed("Bob");
    g->upsert_entity(n);
    const auto live = g->snapshot();
    auto reopened = Graph::load(path)->snapshot();
    EXPECT_TRUE(reopened->same_content(*live));
  }
  EXPECT_EQ(Graph::load(path)->snapshot()->entities().size(), 2u);
}

TEST(Storage, JournalOfPopulatedGraphMatchesLiveState) {
  TempDir dir;
  const auto path = dir / "p.tkg";
  auto clock = std::make_shared<ManualClock>(ts(2024), 1000);
  auto g = Graph::open(path, Fixture::config(64), clock);
  HashingEmbedder emb(64);
  std::mt19937_64 rng(3);
  std::vector<NodeId> ids;
  for (int i = 0; i < 30; ++i) {
    EntityNode n;
    n.name = "n" + std::to_string(i);
    n.name_embedding = emb.embed(n.name);
    ids.push_back(g->upsert_entity(n));
  }
  Episode ep;
  ep.actor = "x";
  ep.content = "x";
  const auto epid = g->add_episode(ep);
  for (int i = 0; i < 60; ++i) {
    SemanticEdge e;
    e.source = ids[rng() % 30];
    e.target = ids[rng() % 30];
    if (e.source == e.target) continue;
    e.fact = "f" + std::to_string(i);
    e.fact_embedding = emb.embed(e.fact);
    e.episodes = {epid};
    g->write([&](Transaction& tx) {
      e.t_created = tx.now();
      tx.upsert_edge(e);
    });
  }
  EXPECT_TRUE(Graph::load(path)->snapshot()->same_content(*g->snapshot()));
}

TEST(Storage, CorruptedFileIsRejected) {
  TempDir dir;
  Fixture f;
  populate(f, 2);
  const auto path = dir / "c.tkg";
  f.graph.persist(path);
  std::fstream io(path, std::ios::in | std::ios::out | std::ios::binary);
  io.seekp(static_cast<std::streamoff>(fs::file_size(path) / 2));
  char c = 0;
  io.seekg(io.tellp());
  io.read(&c, 1);
  io.seekp(static_cast<std::streamoff>(fs::file_size(path) / 2));
  c = static_cast<char>(c ^ 0x5a);
  io.write(&c, 1);
  io.close();
  EXPECT_EQ(load_error(path), ErrorCode::CorruptStore);
}

TEST(Storage, WrongMagicAndVersion) {
  TempDir dir;
  std::ofstream(dir / "junk.tkg") << "hello world, not a store";
  EXPECT_EQ(load_error(dir / "junk.tkg"), ErrorCode::CorruptStore);
  auto header = storage::file_header();
  header[4] = 99;
  std::ofstream out(dir / "v.tkg", std::ios::binary);
  out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  out.close();
  EXPECT_EQ(load_error(dir / "v.tkg"), ErrorCode::VersionMismatch);
  EXPECT_EQ(load_error(dir / "missing.tkg"), ErrorCode::Io);
}

TEST(Storage, TornTailIsDroppedOnOpen) {
  TempDir dir;
  const auto path = dir / "t.tkg";
  HashingEmbedder emb(64);
  auto make = [&](const std::string& name) {
    EntityNode n;
    n.name = name;
    n.name_embedding = emb.embed(name);
    return n;
  };
  std::uintmax_t after_first = 0;
  {
    auto g = Graph::open(path, Fixture::config(64));
    g->upsert_entity(make("Alice"));
    after_first = fs::file_size(path);
    g->upsert_entity(make("Bob"));
  }
  // A crash in the middle of the second commit.
  fs::resize_file(path, after_first + 10);
  EXPECT_EQ(Graph::load(path)->snapshot()->entities().size(), 1u);
  {
    auto g = Graph::open(path);
    EXPECT_EQ(fs::file_size(path), after_first);
    g->upsert_entity(make("Carol"));
  }
  const auto snap = Graph::load(path)->snapshot();
  std::set<std::string> names;
  for (const auto& [_, n] : snap->entities()) names.insert(n->name);
  EXPECT_EQ(names, (std::set<std::string>{"Alice", "Carol"}));
}

TEST(Storage, Crc32KnownValue) {
  const std::string s = "123456789";
  EXPECT_EQ(storage::crc32({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}), 0xCBF43926u);
}
