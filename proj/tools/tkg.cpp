// Command-line front end: ingest transcripts, query a store, benchmark
// retrieval, generate synthetic transcripts and run the HTTP service.

#include <chrono>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "tkg/bench.hpp"
#include "tkg/engine.hpp"
#include "tkg/http_adapters.hpp"
#include "tkg/json_codec.hpp"
#include "tkg/mock_extractor.hpp"
#include "tkg/service.hpp"
#include "tkg/synthetic.hpp"
#include "tkg/transcript.hpp"

namespace {

using namespace tkg;

struct Adapters {
  std::shared_ptr<Extractor> extractor;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<CrossEncoder> cross_encoder;
};

Adapters make_adapters(const ServiceConfig& cfg) {
  HttpOptions http;
  http.timeout = std::chrono::milliseconds(cfg.extractor_timeout_ms);
  http.retries = cfg.extractor_retries;
  http.backoff = std::chrono::milliseconds(cfg.extractor_backoff_ms);
  Adapters a;
  if (cfg.extractor_url.empty())
    a.extractor = std::make_shared<DeterministicMockExtractor>();
  else
    a.extractor = std::make_shared<HttpExtractor>(cfg.extractor_url, http);
  if (cfg.embedder_url.empty())
    a.embedder = std::make_shared<HashingEmbedder>(cfg.embedding_dim);
  else
    a.embedder = std::make_shared<HttpEmbedder>(cfg.embedder_url, cfg.embedding_dim, http);
  if (cfg.cross_encoder_url.empty())
    a.cross_encoder = std::make_shared<JaccardCrossEncoder>();
  else
    a.cross_encoder = std::make_shared<HttpCrossEncoder>(cfg.cross_encoder_url, http);
  return a;
}

std::unique_ptr<Engine> open_engine(const std::filesystem::path& store, const ServiceConfig& cfg,
                                    const Adapters& a) {
  GraphConfig gc;
  gc.name = store.stem().string();
  gc.embedding_dim = cfg.embedding_dim;
  return std::make_unique<Engine>(Graph::open(store, gc), a.extractor, a.embedder, a.cross_encoder,
                                  cfg.engine_config());
}

// Loads a bench corpus: a store file, a transcript, or synthetic:ENTITIES:EDGES.
std::unique_ptr<Engine> load_corpus(const std::string& corpus, const ServiceConfig& cfg, const Adapters& a) {
  GraphConfig gc;
  gc.name = "bench";
  gc.embedding_dim = cfg.embedding_dim;
  if (corpus.rfind("synthetic:", 0) == 0) {
    synthetic::GraphSpec spec;
    const auto rest = corpus.substr(10);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected synthetic:ENTITIES:EDGES");
    spec.entities = std::stoul(rest.substr(0, colon));
    spec.edges = std::stoul(rest.substr(colon + 1));
    spec.episodes = std::max<std::size_t>(1, spec.entities / 2);
    auto engine = std::make_unique<Engine>(std::make_unique<Graph>(gc), a.extractor, a.embedder, a.cross_encoder,
                                           cfg.engine_config());
    synthetic::build_graph(engine->graph(), *a.embedder, spec);
    engine->refresh_communities();
    return engine;
  }
  const std::filesystem::path path(corpus);
  if (path.extension() == ".jsonl") {
    auto engine = std::make_unique<Engine>(std::make_unique<Graph>(gc), a.extractor, a.embedder, a.cross_encoder,
                                           cfg.engine_config());
    for (auto& ep : read_transcript(path)) engine->ingest(std::move(ep));
    engine->refresh_communities();
    return engine;
  }
  return std::make_unique<Engine>(Graph::load(path), a.extractor, a.embedder, a.cross_encoder, cfg.engine_config());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal knowledge-graph memory engine"};
  app.require_subcommand(1);
  std::optional<std::string> config_file;
  app.add_option("-c,--config", config_file, "key = value settings file");
  std::vector<std::string> overrides;
  app.add_option("-s,--set", overrides, "override one setting, KEY=VALUE");

  auto* ingest = app.add_subcommand("ingest", "ingest a JSONL transcript into a store file");
  std::string store, transcript, group = "default";
  bool refresh = false;
  ingest->add_option("store", store, "store file (.tkg), created if missing")->required();
  ingest->add_option("transcript", transcript, "JSONL transcript")->required()->check(CLI::ExistingFile);
  ingest->add_option("--group", group, "episode group");
  ingest->add_flag("--refresh-communities", refresh, "run a full community refresh at the end");

  auto* search = app.add_subcommand("search", "query a store file");
  std::string query, as_of, reranker, methods, centroid;
  std::size_t limit = 0;
  bool as_json = false, with_communities = true;
  search->add_option("store", store, "store file (a missing file searches an empty graph)")->required();
  search->add_option("query", query, "query text")->required();
  search->add_option("--limit", limit, "results per type");
  search->add_option("--as-of", as_of, "only facts valid at this ISO 8601 instant");
  search->add_option("--reranker", reranker, "rrf | mmr | episode_mentions | node_distance | cross_encoder");
  search->add_option("--methods", methods, "comma list of cosine, bm25, bfs");
  search->add_option("--centroid", centroid, "entity id for node_distance");
  search->add_flag("!--no-communities", with_communities, "omit the communities block");
  search->add_flag("--json", as_json, "print the full JSON result");

  auto* bench = app.add_subcommand("bench", "retrieval latency benchmark");
  std::string corpus, report_path;
  std::size_t query_count = 100, iterations = 3;
  bench->add_option("corpus", corpus, "store file, JSONL transcript, or synthetic:ENTITIES:EDGES")->required();
  bench->add_option("--queries", query_count, "number of generated queries");
  bench->add_option("--iterations", iterations, "timed passes over the queries");
  bench->add_option("--report", report_path, "write the JSON report here");

  auto* gen = app.add_subcommand("generate", "write a synthetic two-speaker transcript");
  std::size_t messages = 500, facts = 50;
  std::uint64_t seed = 7;
  std::string out_path, truth_path;
  gen->add_option("out", out_path, "JSONL output")->required();
  gen->add_option("--messages", messages);
  gen->add_option("--facts", facts);
  gen->add_option("--seed", seed);
  gen->add_option("--truth", truth_path, "write planted facts and queries as JSON");

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  std::optional<int> port;
  serve->add_option("--port", port);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = ServiceConfig::load(config_file ? std::optional<std::filesystem::path>(*config_file) : std::nullopt);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected KEY=VALUE: " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (port) cfg.listen_port = *port;
    cfg.validate();

    if (*serve) {
      MemoryService service(cfg);
      spdlog::info("listening on {}:{}", cfg.listen_address, cfg.listen_port);
      if (!service.listen()) {
        spdlog::error("could not bind {}:{}", cfg.listen_address, cfg.listen_port);
        return 1;
      }
      return 0;
    }

    if (*gen) {
      synthetic::ConversationSpec spec;
      spec.messages = messages;
      spec.planted_facts = facts;
      spec.seed = seed;
      const auto conv = synthetic::generate_conversation(spec);
      std::ofstream out(out_path);
      write_transcript(out, conv.messages);
      if (!truth_path.empty()) {
        json truth = json::array();
        for (const auto& f : conv.facts)
          truth.push_back({{"message", f.message_index}, {"query", f.query}, {"expected", f.expected_line}});
        std::ofstream(truth_path) << truth.dump(2) << "\n";
      }
      std::cout << "wrote " << conv.messages.size() << " messages, " << conv.facts.size() << " planted facts\n";
      return 0;
    }

    const auto adapters = make_adapters(cfg);

    if (*ingest) {
      auto engine = open_engine(store, cfg, adapters);
      std::size_t ok = 0, failed = 0, added = 0, invalidated = 0;
      for (auto& ep : read_transcript(transcript, group)) {
        try {
          const auto r = engine->ingest(std::move(ep));
          ++ok;
          added += r.edges_added;
          invalidated += r.edges_invalidated;
          for (const auto& w : r.warnings) spdlog::warn("{}", w);
        } catch (const IngestError& e) {
          ++failed;
          spdlog::error("{}", e.what());
        }
      }
      if (refresh) engine->refresh_communities();
      const auto snap = engine->snapshot();
      std::cout << "ingested " << ok << " episodes (" << failed << " failed), " << added << " facts added, "
                << invalidated << " invalidated\n"
                << "graph: " << snap->entities().size() << " entities, " << snap->edges().size() << " edges, "
                << snap->communities().size() << " communities\n";
      return failed == 0 ? 0 : 2;
    }

    if (*search) {
      GraphConfig gc;
      gc.embedding_dim = cfg.embedding_dim;
      auto graph = std::filesystem::exists(store) ? Graph::load(store) : std::make_unique<Graph>(gc);
      auto engine = std::make_unique<Engine>(std::move(graph), adapters.extractor, adapters.embedder,
                                             adapters.cross_encoder, cfg.engine_config());
      json body = {{"query", query}, {"include_communities", with_communities}};
      if (limit) body["limit"] = limit;
      if (!as_of.empty()) body["as_of"] = as_of;
      if (!reranker.empty()) body["reranker"] = reranker;
      if (!centroid.empty()) body["centroid"] = centroid;
      if (!methods.empty()) {
        json list = json::array();
        std::stringstream ss(methods);
        for (std::string m; std::getline(ss, m, ',');) list.push_back(m);
        body["methods"] = list;
      }
      const auto result = engine->retrieve(retrieval_request_from_json(body, cfg.default_request()));
      if (as_json)
        std::cout << to_json(result, true).dump(2) << "\n";
      else
        std::cout << result.context;
      for (const auto& w : result.warnings) spdlog::warn("{}", w);
      return 0;
    }

    if (*bench) {
      auto engine = load_corpus(corpus, cfg, adapters);
      const auto snap = engine->snapshot();
      const auto queries = synthetic::generate_queries(*snap, query_count, 99);
      const auto report = run_retrieval_bench(*snap, *adapters.embedder, adapters.cross_encoder.get(), queries,
                                              cfg.default_request(), iterations);
      std::cout << report.to_table();
      if (!report_path.empty()) std::ofstream(report_path) << report.to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
