#include "tkg/service.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "tkg/json_codec.hpp"
#include "tkg/mock_extractor.hpp"
#include "tkg/text.hpp"

extern char** environ;

namespace tkg {

// -- config -----------------------------------------------------------------

namespace {

[[noreturn]] void bad_config(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

long long parse_int(const std::string& key, const std::string& value, long long min) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    bad_config(key + ": expected an integer, got '" + value + "'");
  }
  if (used != value.size()) bad_config(key + ": expected an integer, got '" + value + "'");
  if (v < min) bad_config(key + ": must be at least " + std::to_string(min));
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_config(key + ": expected a number, got '" + value + "'");
  }
  if (used != value.size()) bad_config(key + ": expected a number, got '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  const auto v = to_lower_utf8(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_config(key + ": expected true or false, got '" + value + "'");
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace

void ServiceConfig::set(const std::string& key, const std::string& raw) {
  const auto value = unquote(trim(raw));
  auto sz = [&](std::size_t& field, long long min = 1) { field = static_cast<std::size_t>(parse_int(key, value, min)); };
  auto in = [&](int& field, long long min) { field = static_cast<int>(parse_int(key, value, min)); };
  if (key == "listen_address") listen_address = value;
  else if (key == "listen_port") in(listen_port, 0);
  else if (key == "store_path") store_path = value;
  else if (key == "extractor_url") extractor_url = value;
  else if (key == "extractor_timeout_ms") in(extractor_timeout_ms, 1);
  else if (key == "extractor_retries") in(extractor_retries, 0);
  else if (key == "extractor_backoff_ms") in(extractor_backoff_ms, 0);
  else if (key == "embedder_url") embedder_url = value;
  else if (key == "cross_encoder_url") cross_encoder_url = value;
  else if (key == "embedding_dim") sz(embedding_dim);
  else if (key == "search_limit") sz(search_limit);
  else if (key == "search_methods") search_methods = value;
  else if (key == "bfs_depth") sz(bfs_depth, 0);
  else if (key == "recency_episodes") sz(recency_episodes, 0);
  else if (key == "reranker") reranker = value;
  else if (key == "rrf_k") in(rrf_k, 1);
  else if (key == "mmr_lambda") mmr_lambda = parse_double(key, value);
  else if (key == "include_communities") include_communities = parse_bool(key, value);
  else if (key == "context_window") sz(context_window, 0);
  else if (key == "entity_candidates") sz(entity_candidates);
  else if (key == "contradiction_candidates") sz(contradiction_candidates);
  else if (key == "community_refresh_threshold") sz(community_refresh_threshold);
  else if (key == "community_summary_chunk") sz(community_summary_chunk, 2);
  else if (key == "graph_name_pattern") graph_name_pattern = value;
  else bad_config("unknown setting '" + key + "'");
}

void ServiceConfig::validate() const {
  if (listen_port > 65535) bad_config("listen_port out of range");
  try {
    std::regex re(graph_name_pattern);
  } catch (const std::regex_error& e) {
    bad_config("graph_name_pattern is not a valid regular expression: " + std::string(e.what()));
  }
  default_request();  // validates methods, reranker and limits
  for (const auto* url : {&extractor_url, &embedder_url, &cross_encoder_url})
    if (!url->empty() && url->find("://") == std::string::npos) bad_config("adapter URL needs a scheme: " + *url);
}

ServiceConfig ServiceConfig::from_file(const std::filesystem::path& path, ServiceConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      bad_config(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      bad_config(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ServiceConfig ServiceConfig::with_env(ServiceConfig base) {
  for (char** env = environ; env && *env; ++env) {
    std::string_view kv(*env);
    if (!kv.starts_with("TKG_")) continue;
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    std::string key(kv.substr(4, eq - 4));
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    base.set(key, std::string(kv.substr(eq + 1)));
  }
  return base;
}

ServiceConfig ServiceConfig::load(const std::optional<std::filesystem::path>& file) {
  ServiceConfig c;
  if (file) c = from_file(*file, c);
  c = with_env(c);
  c.validate();
  return c;
}

RetrievalRequest ServiceConfig::default_request() const {
  RetrievalRequest r;
  r.query.limit = search_limit;
  r.query.methods.clear();
  std::stringstream ss(search_methods);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    auto m = parse_search_method(item);
    if (!m) bad_config("search_methods: unknown method '" + trim(item) + "'");
    r.query.methods.insert(*m);
  }
  r.query.bfs_depth = bfs_depth;
  r.query.recency_episodes = recency_episodes;
  auto m = parse_rerank_method(reranker);
  if (!m) bad_config("reranker: unknown method '" + reranker + "'");
  if (*m == RerankMethod::NodeDistance) bad_config("reranker: node_distance needs a per-request centroid");
  r.reranker.method = *m;
  r.reranker.rrf_k = rrf_k;
  r.reranker.mmr_lambda = mmr_lambda;
  r.context.include_communities = include_communities;
  r.query.validate();
  r.reranker.validate();
  return r;
}

EngineConfig ServiceConfig::engine_config() const {
  EngineConfig c;
  c.pipeline.context_window = context_window;
  c.pipeline.entity_candidates = entity_candidates;
  c.pipeline.contradiction_candidates = contradiction_candidates;
  c.communities.staleness_threshold = community_refresh_threshold;
  c.communities.summary_chunk = community_summary_chunk;
  return c;
}

// -- registry ---------------------------------------------------------------

GraphRegistry::GraphRegistry(ServiceConfig config) : config_(std::move(config)) {
  config_.validate();
  HttpOptions http;
  http.timeout = std::chrono::milliseconds(config_.extractor_timeout_ms);
  http.retries = config_.extractor_retries;
  http.backoff = std::chrono::milliseconds(config_.extractor_backoff_ms);
  if (config_.extractor_url.empty())
    extractor_ = std::make_shared<DeterministicMockExtractor>();
  else
    extractor_ = std::make_shared<HttpExtractor>(config_.extractor_url, http);
  if (config_.embedder_url.empty())
    embedder_ = std::make_shared<HashingEmbedder>(config_.embedding_dim);
  else
    embedder_ = std::make_shared<HttpEmbedder>(config_.embedder_url, config_.embedding_dim, http);
  if (config_.cross_encoder_url.empty())
    cross_encoder_ = std::make_shared<JaccardCrossEncoder>();
  else
    cross_encoder_ = std::make_shared<HttpCrossEncoder>(config_.cross_encoder_url, http);
}

std::unique_ptr<Engine> GraphRegistry::make_engine(const std::string& name, bool create) {
  GraphConfig gc;
  gc.name = name;
  gc.embedding_dim = config_.embedding_dim;
  std::unique_ptr<Graph> graph;
  if (!config_.store_path.empty()) {
    const auto path = std::filesystem::path(config_.store_path) / (name + ".tkg");
    if (!create && !std::filesystem::exists(path)) return nullptr;
    graph = Graph::open(path, gc);
  } else {
    if (!create) return nullptr;
    graph = std::make_unique<Graph>(gc);
  }
  return std::make_unique<Engine>(std::move(graph), extractor_, embedder_, cross_encoder_, config_.engine_config());
}

Engine* GraphRegistry::find(const std::string& name) {
  if (!std::regex_match(name, std::regex(config_.graph_name_pattern))) return nullptr;
  std::lock_guard lock(mu_);
  if (auto it = engines_.find(name); it != engines_.end()) return it->second.get();
  auto engine = make_engine(name, false);
  if (!engine) return nullptr;
  return engines_.emplace(name, std::move(engine)).first->second.get();
}

Engine& GraphRegistry::get_or_create(const std::string& name) {
  if (!std::regex_match(name, std::regex(config_.graph_name_pattern)))
    throw Error(ErrorCode::InvalidArgument, "graph name '" + name + "' does not match " + config_.graph_name_pattern);
  std::lock_guard lock(mu_);
  if (auto it = engines_.find(name); it != engines_.end()) return *it->second;
  return *engines_.emplace(name, make_engine(name, true)).first->second;
}

// -- HTTP -------------------------------------------------------------------

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyContent:
    case ErrorCode::MissingActor:
    case ErrorCode::UnknownSeed:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::SelfLoop:
      return 400;
    case ErrorCode::DuplicateId:
    case ErrorCode::AlreadyIngested:
      return 409;
    case ErrorCode::UnknownNode:
    case ErrorCode::UnknownEdge:
    case ErrorCode::UnknownEpisode:
    case ErrorCode::UnknownCommunity:
      return 404;
    case ErrorCode::ExtractorFailure:
    case ErrorCode::AdapterUnavailable:
      return 502;
    default:
      return 500;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  reply(res, status, json{{"error", message}, {"code", code}});
}

void reply_error(httplib::Response& res, const Error& e) {
  reply_error(res, status_for(e.code()), std::string(to_string(e.code())), e.what());
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    reply_error(res, 400, "InvalidArgument", std::string("malformed JSON: ") + e.what());
    return std::nullopt;
  }
}

template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    reply_error(res, e);
  } catch (const std::exception& e) {
    reply_error(res, 500, "Internal", e.what());
  }
}

}  // namespace

MemoryService::MemoryService(ServiceConfig config)
    : registry_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

MemoryService::~MemoryService() { stop(); }

bool MemoryService::listen() {
  const auto& c = registry_.config();
  spdlog::info("listening on {}:{}", c.listen_address, c.listen_port);
  return server_->listen(c.listen_address, c.listen_port);
}

int MemoryService::bind_any_port(const std::string& address) { return server_->bind_to_any_port(address); }

void MemoryService::listen_after_bind() { server_->listen_after_bind(); }

void MemoryService::stop() {
  if (server_) server_->stop();
}

void MemoryService::install_routes() {
  auto& s = *server_;
  auto* reg = &registry_;

  s.Get("/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, json{{"status", "ok"}}); });

  s.Post(R"(/graphs/([^/]+)/episodes)", [reg](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req, res);
    if (!body) return;
    guarded(res, [&] {
      auto episode = episode_from_request(*body);
      auto& engine = reg->get_or_create(req.matches[1]);
      try {
        auto report = engine.ingest(std::move(episode));
        reply(res, 201, to_json(report));
      } catch (const IngestError& e) {
        spdlog::warn("ingest into '{}' failed: {}", std::string(req.matches[1]), e.what());
        reply(res, status_for(e.code()),
              json{{"error", e.what()}, {"code", std::string(to_string(e.code()))}, {"partial", to_json(e.partial())}});
      }
    });
  });

  s.Post(R"(/graphs/([^/]+)/search)", [reg](const httplib::Request& req, httplib::Response& res) {
    auto* engine = reg->find(req.matches[1]);
    if (!engine) return reply_error(res, 404, "UnknownGraph", "graph '" + std::string(req.matches[1]) + "' not found");
    auto body = parse_body(req, res);
    if (!body) return;
    guarded(res, [&] {
      const auto request = retrieval_request_from_json(*body, reg->config().default_request());
      try {
        reply(res, 200, to_json(engine->retrieve(request)));
      } catch (const Error& e) {
        // Unknown centroid or seed ids are request errors here.
        const bool client = e.code() == ErrorCode::UnknownNode || e.code() == ErrorCode::UnknownSeed;
        reply_error(res, client ? 400 : status_for(e.code()), std::string(to_string(e.code())), e.what());
      }
    });
  });

  auto lookup = [reg](auto fetch) {
    return [reg, fetch](const httplib::Request& req, httplib::Response& res) {
      auto* engine = reg->find(req.matches[1]);
      if (!engine) return reply_error(res, 404, "UnknownGraph", "graph '" + std::string(req.matches[1]) + "' not found");
      guarded(res, [&] {
        const std::string raw = req.matches[2];
        if (!Uuid::parse(raw)) return reply_error(res, 400, "InvalidArgument", "malformed id '" + raw + "'");
        auto body = fetch(*engine->snapshot(), *Uuid::parse(raw));
        if (!body) return reply_error(res, 404, "NotFound", "no object with id " + raw);
        reply(res, 200, *body);
      });
    };
  };
  s.Get(R"(/graphs/([^/]+)/entities/([^/]+))", lookup([](const GraphState& g, const Uuid& id) -> std::optional<json> {
          if (const auto* n = g.entity(NodeId{id})) return to_json(*n);
          return std::nullopt;
        }));
  s.Get(R"(/graphs/([^/]+)/edges/([^/]+))", lookup([](const GraphState& g, const Uuid& id) -> std::optional<json> {
          if (const auto* e = g.edge(EdgeId{id})) return to_json(*e);
          return std::nullopt;
        }));
  s.Get(R"(/graphs/([^/]+)/episodes/([^/]+))", lookup([](const GraphState& g, const Uuid& id) -> std::optional<json> {
          if (const auto* e = g.episode(EpisodeId{id})) return to_json(*e);
          return std::nullopt;
        }));
  s.Get(R"(/graphs/([^/]+)/communities/([^/]+))",
        lookup([](const GraphState& g, const Uuid& id) -> std::optional<json> {
          if (const auto* c = g.community(CommunityId{id})) return to_json(*c);
          return std::nullopt;
        }));

  s.Post(R"(/graphs/([^/]+)/communities/refresh)", [reg](const httplib::Request& req, httplib::Response& res) {
    auto* engine = reg->find(req.matches[1]);
    if (!engine) return reply_error(res, 404, "UnknownGraph", "graph '" + std::string(req.matches[1]) + "' not found");
    guarded(res, [&] { reply(res, 200, json{{"communities", engine->refresh_communities()}}); });
  });
}

}  // namespace tkg
