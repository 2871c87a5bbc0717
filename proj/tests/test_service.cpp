#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tkg/mock_extractor.hpp"
#include "tkg/service.hpp"

using namespace tkg;
using nlohmann::json;

namespace {

/// Runs a MemoryService on an ephemeral port for the lifetime of the object.
class Running {
 public:
  explicit Running(ServiceConfig config) : service_(std::move(config)) {
    port_ = service_.bind_any_port();
    thread_ = std::thread([this] { service_.listen_after_bind(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
    for (int i = 0; i < 100 && !client_->Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ~Running() {
    service_.stop();
    thread_.join();
  }

  struct Reply {
    int status;
    json body;
  };

  Reply post(const std::string& path, const json& body) {
    auto r = client_->Post(path, body.dump(), "application/json");
    if (!r) return {-1, {}};
    return {r->status, json::parse(r->body, nullptr, false)};
  }
  Reply get(const std::string& path) {
    auto r = client_->Get(path);
    if (!r) return {-1, {}};
    return {r->status, json::parse(r->body, nullptr, false)};
  }

  MemoryService& service() { return service_; }
  int port() const { return port_; }

 private:
  MemoryService service_;
  int port_ = -1;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

json message(const std::string& actor, const std::string& content, const std::string& when) {
  return json{{"kind", "message"}, {"actor", actor}, {"content", content}, {"t_ref", when}};
}

json text(const std::string& content, const std::string& when) {
  return json{{"kind", "text"}, {"content", content}, {"t_ref", when}};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("tkg-service-" + std::to_string(std::random_device{}()) + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST(Service, HealthAndUnknownRoutes) {
  Running s({});
  EXPECT_EQ(s.get("/health").status, 200);
  EXPECT_EQ(s.get("/health").body["status"], "ok");
  EXPECT_EQ(s.post("/graphs/none/search", json{{"query", "x"}}).status, 404);
  EXPECT_EQ(s.post("/graphs/none/communities/refresh", json::object()).status, 404);
}

TEST(Service, IngestReturnsCreatedAndValidates) {
  Running s({});
  auto r = s.post("/graphs/g/episodes", message("Alice", "I work at Acme Corp.", "2024-05-01T10:00:00Z"));
  ASSERT_EQ(r.status, 201) << r.body.dump();
  EXPECT_GE(r.body["entities_added"].get<int>(), 2);
  EXPECT_EQ(r.body["edges_added"], 1);

  auto missing = message("Alice", "Hello", "2024-05-01T10:00:00Z");
  missing.erase("t_ref");
  EXPECT_EQ(s.post("/graphs/g/episodes", missing).status, 400);
  EXPECT_EQ(s.post("/graphs/g/episodes", message("", "Hello", "2024-05-01T10:00:00Z")).status, 400);
  EXPECT_EQ(s.post("/graphs/g/episodes", json{{"content", "x"}, {"t_ref", "2024"}, {"bogus", 1}}).status, 400);
  EXPECT_EQ(s.post("/graphs/bad name!/episodes", message("A", "x", "2024-05-01T10:00:00Z")).status, 400);

  // Re-posting the same episode id conflicts.
  auto with_id = message("Bob", "Bob lives in Rome.", "2024-05-02T10:00:00Z");
  with_id["id"] = "00000000-0000-4000-8000-000000000042";
  EXPECT_EQ(s.post("/graphs/g/episodes", with_id).status, 201);
  EXPECT_EQ(s.post("/graphs/g/episodes", with_id).status, 409);
}

TEST(Service, SearchHonoursLimitAndRejectsEmptyQuery) {
  Running s({});
  for (int i = 0; i < 30; ++i)
    ASSERT_EQ(s.post("/graphs/g/episodes",
                     text("Person" + std::to_string(i) + " works at Acme" + std::to_string(i % 3) + ".",
                          "2024-05-01T10:00:00Z"))
                  .status,
              201);
  auto r = s.post("/graphs/g/search", json{{"query", "who works at Acme"}, {"limit", 10}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_LE(r.body["edges"].size(), 10u);
  EXPECT_GT(r.body["edges"].size(), 0u);
  EXPECT_NE(r.body["context"].get<std::string>().find("<FACTS>"), std::string::npos);
  EXPECT_TRUE(r.body.contains("timings"));
  EXPECT_EQ(s.post("/graphs/g/search", json{{"query", ""}}).status, 400);
  EXPECT_EQ(s.post("/graphs/g/search", json{{"query", "x"}, {"limit", 0}}).status, 400);
  EXPECT_EQ(s.post("/graphs/g/search", json{{"query", "x"}, {"reranker", "node_distance"}}).status, 400);
  EXPECT_EQ(s.post("/graphs/g/search",
                   json{{"query", "x"}, {"reranker", "node_distance"}, {"centroid", "00000000-0000-4000-8000-000000000001"}})
                .status,
            400);
}

TEST(Service, InvalidatedEdgeIsVisible) {
  Running s({});
  auto first = s.post("/graphs/g/episodes", message("Bob", "I live in Boston.", "2020-01-01T00:00:00Z"));
  ASSERT_EQ(first.status, 201);
  const auto edge_id = first.body["edges"][0].get<std::string>();
  auto second = s.post("/graphs/g/episodes", message("Bob", "I moved to Paris.", "2024-01-01T00:00:00Z"));
  ASSERT_EQ(second.status, 201);
  EXPECT_EQ(second.body["invalidated"][0], edge_id);
  auto got = s.get("/graphs/g/edges/" + edge_id);
  ASSERT_EQ(got.status, 200);
  EXPECT_TRUE(got.body.contains("t_invalid"));
  EXPECT_FALSE(got.body["t_invalid"].is_null());
  EXPECT_FALSE(got.body["t_expired"].is_null());
  EXPECT_EQ(s.get("/graphs/g/edges/not-a-uuid").status, 400);
  EXPECT_EQ(s.get("/graphs/g/edges/00000000-0000-4000-8000-000000000001").status, 404);
  EXPECT_EQ(s.get("/graphs/g/episodes/" + first.body["episode"].get<std::string>()).status, 200);
}

TEST(Service, CommunityRefresh) {
  Running s({});
  ASSERT_EQ(s.post("/graphs/g/episodes", text("Hello there.", "2024-01-01T00:00:00Z")).status, 201);
  auto empty = s.post("/graphs/g/communities/refresh", json::object());
  ASSERT_EQ(empty.status, 200);
  EXPECT_EQ(empty.body["communities"], 0);

  Running b({});
  for (const char* t : {"Alice, Bob, Carol and Dave know each other.", "Erin, Frank, Gina and Hank know each other.",
                        "Dave knows Erin."})
    ASSERT_EQ(b.post("/graphs/g/episodes", text(t, "2024-01-01T00:00:00Z")).status, 201);
  auto two = b.post("/graphs/g/communities/refresh", json::object());
  ASSERT_EQ(two.status, 200);
  EXPECT_EQ(two.body["communities"], 2);
}

TEST(Service, ExtractorDownLeavesGraphUnchanged) {
  ServiceConfig c;
  c.extractor_url = "http://127.0.0.1:9";
  c.extractor_retries = 0;
  c.extractor_timeout_ms = 500;
  Running s(c);
  auto r = s.post("/graphs/g/episodes", message("Alice", "I work at Acme Corp.", "2024-05-01T10:00:00Z"));
  EXPECT_EQ(r.status, 502) << r.body.dump();
  auto* engine = s.service().registry().find("g");
  ASSERT_NE(engine, nullptr);
  const auto snap = engine->snapshot();
  EXPECT_EQ(snap->episodes().size(), 0u);
  EXPECT_EQ(snap->entities().size(), 0u);
  EXPECT_EQ(snap->edges().size(), 0u);
}

TEST(Service, PersistsAcrossRestart) {
  TempDir dir;
  ServiceConfig c;
  c.store_path = dir.path.string();
  std::string edge_id;
  json before;
  {
    Running s(c);
    auto r = s.post("/graphs/g/episodes", message("Alice", "I work at Acme Corp since 2021.", "2024-05-01T10:00:00Z"));
    ASSERT_EQ(r.status, 201);
    edge_id = r.body["edges"][0];
    before = s.get("/graphs/g/edges/" + edge_id).body;
  }
  Running again(c);
  auto after = again.get("/graphs/g/edges/" + edge_id);
  ASSERT_EQ(after.status, 200);
  EXPECT_EQ(after.body, before);
  EXPECT_EQ(again.post("/graphs/g/search", json{{"query", "Acme"}}).status, 200);
}

TEST(Service, RemoteAdaptersMatchInProcess) {
  httplib::Server models;
  mount_extractor_routes(models, std::make_shared<DeterministicMockExtractor>());
  mount_embedder_route(models, std::make_shared<HashingEmbedder>(kDefaultEmbeddingDim));
  mount_cross_encoder_route(models, std::make_shared<JaccardCrossEncoder>());
  const int port = models.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { models.listen_after_bind(); });

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  ServiceConfig remote;
  remote.extractor_url = base;
  remote.embedder_url = base + "/embed";
  remote.cross_encoder_url = base + "/score";
  {
    Running local({}), far(remote);
    const std::vector<json> eps{message("Alice", "I work at Acme Corp.", "2024-05-01T10:00:00Z"),
                                message("Bob", "Alice and I are friends.", "2024-05-01T10:01:00Z"),
                                message("Alice", "I moved to Lisbon last year.", "2024-05-01T10:02:00Z")};
    for (const auto& e : eps) {
      auto a = local.post("/graphs/g/episodes", e), b = far.post("/graphs/g/episodes", e);
      ASSERT_EQ(a.status, 201);
      ASSERT_EQ(b.status, 201) << b.body.dump();
      EXPECT_EQ(a.body["edges_added"], b.body["edges_added"]);
      EXPECT_EQ(a.body["entities_added"], b.body["entities_added"]);
    }
    const json q{{"query", "where does Alice work"}, {"reranker", "cross_encoder"}};
    auto a = local.post("/graphs/g/search", q), b = far.post("/graphs/g/search", q);
    ASSERT_EQ(b.status, 200) << b.body.dump();
    EXPECT_EQ(a.body["context"], b.body["context"]);
    EXPECT_FALSE(b.body["rerank_fell_back"].get<bool>());
  }
  models.stop();
  t.join();
}

TEST(ServiceConfig, FileEnvAndValidation) {
  TempDir dir;
  const auto file = dir.path / "tkg.conf";
  std::ofstream(file) << "# comment\nlisten_port = 9001\nreranker = \"mmr\"\nmmr_lambda=0.7\n\nsearch_limit = 5\n";
  auto c = ServiceConfig::from_file(file, {});
  EXPECT_EQ(c.listen_port, 9001);
  EXPECT_EQ(c.reranker, "mmr");
  EXPECT_DOUBLE_EQ(c.mmr_lambda, 0.7);
  EXPECT_EQ(c.default_request().query.limit, 5u);
  EXPECT_EQ(c.default_request().reranker.method, RerankMethod::Mmr);

  ::setenv("TKG_LISTEN_PORT", "9100", 1);
  EXPECT_EQ(ServiceConfig::with_env(c).listen_port, 9100);
  ::unsetenv("TKG_LISTEN_PORT");

  ServiceConfig bad;
  EXPECT_THROW(bad.set("no_such_key", "1"), Error);
  EXPECT_THROW(bad.set("rrf_k", "zero"), Error);
  EXPECT_THROW(bad.set("include_communities", "maybe"), Error);
  bad.extractor_url = "localhost:8000";
  EXPECT_THROW(bad.validate(), Error);
  std::ofstream(file) << "garbage line\n";
  EXPECT_THROW(ServiceConfig::from_file(file, {}), Error);
  EXPECT_THROW(ServiceConfig::from_file(dir.path / "missing.conf", {}), Error);
}
