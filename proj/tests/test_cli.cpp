#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "context_cases.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(TKG_CLI) + " " + args + " 2>/dev/null";
  Run r{-1, {}};
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int raw = ::pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("tkg-cli-" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  fs::path dir;
};

const std::string kChat = std::string(TKG_TEST_DIR) + "/fixtures/chat60.jsonl";

}  // namespace

TEST_F(Cli, IngestPersistsAndSearchFindsIt) {
  const auto store = path("chat.tkg");
  const auto r = run("ingest " + store + " " + kChat);
  ASSERT_EQ(r.status, 0) << r.out;
  ASSERT_TRUE(fs::exists(store));
  EXPECT_GT(fs::file_size(store), 0u);

  std::ifstream truth(std::string(TKG_TEST_DIR) + "/fixtures/chat60.truth.json");
  const auto facts = json::parse(truth);
  ASSERT_FALSE(facts.empty());
  const auto& first = facts[0];
  const auto s = run("search " + store + " \"" + first["query"].get<std::string>() + "\"");
  ASSERT_EQ(s.status, 0);
  EXPECT_NE(s.out.find(first["expected"].get<std::string>()), std::string::npos) << s.out;

  const auto j = run("search " + store + " \"" + first["query"].get<std::string>() + "\" --json --limit 3");
  ASSERT_EQ(j.status, 0);
  const auto body = json::parse(j.out);
  EXPECT_LE(body["edges"].size(), 3u);
  EXPECT_TRUE(body.contains("context"));
}

TEST_F(Cli, ReingestAppends) {
  const auto store = path("chat.tkg");
  ASSERT_EQ(run("ingest " + store + " " + kChat).status, 0);
  const auto size = fs::file_size(store);
  // Re-ingesting produces fresh episode ids, so it succeeds and grows the store.
  ASSERT_EQ(run("ingest " + store + " " + kChat).status, 0);
  EXPECT_GT(fs::file_size(store), size);
}

TEST_F(Cli, SearchWithoutStoreGivesEmptySkeleton) {
  const auto r = run("search " + path("never.tkg") + " \"anything at all\"");
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(r.out, context_cases::golden(TKG_TEST_DIR, "empty"));
  EXPECT_FALSE(fs::exists(path("never.tkg")));
}

TEST_F(Cli, BenchReportHasEveryStage) {
  const auto report = path("bench.json");
  const auto r = run("bench synthetic:300:900 --queries 20 --iterations 2 --report " + report);
  ASSERT_EQ(r.status, 0) << r.out;
  std::ifstream in(report);
  const auto j = json::parse(in);
  for (const char* stage : {"search", "rerank", "construct", "total"}) {
    const auto& s = j["latency_ms"][stage];
    EXPECT_EQ(s["samples"], 40) << stage;
    for (const char* k : {"p25", "p50", "p75", "p95", "iqr", "mean", "max"}) EXPECT_TRUE(s[k].is_number()) << k;
    EXPECT_LE(s["p50"].get<double>(), s["p95"].get<double>());
  }
  EXPECT_GT(j["context_tokens"]["mean"].get<double>(), 0.0);
  EXPECT_EQ(j["graph"]["entities"], 300);
  EXPECT_EQ(j["graph"]["edges"], 900);
}

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run("generate " + path("a.jsonl") + " --messages 40 --seed 3").status, 0);
  ASSERT_EQ(run("generate " + path("b.jsonl") + " --messages 40 --seed 3").status, 0);
  std::ifstream a(path("a.jsonl")), b(path("b.jsonl"));
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  const auto text = sa.str();
  EXPECT_EQ(text, sb.str());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 40);
}

TEST_F(Cli, BadInputsExitNonZero) {
  EXPECT_NE(run("ingest " + path("x.tkg") + " " + path("missing.jsonl")).status, 0);
  std::ofstream(path("broken.jsonl")) << "{\"actor\": \"A\"}\nnot json\n";
  EXPECT_NE(run("ingest " + path("x.tkg") + " " + path("broken.jsonl")).status, 0);
  EXPECT_NE(run("search " + path("x.tkg") + " q --reranker nonsense").status, 0);
  EXPECT_NE(run("frobnicate").status, 0);
}
