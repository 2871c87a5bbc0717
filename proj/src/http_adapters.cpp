#include "tkg/http_adapters.hpp"

#include <thread>

#include <httplib.h>

#include "tkg/error.hpp"

namespace tkg {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::ExtractorFailure, "malformed adapter response: " + what);
}

const json& need(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) malformed(std::string("missing '") + key + "'");
  return j.at(key);
}

std::string need_string(const json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_string()) malformed(std::string("'") + key + "' is not a string");
  return v.get<std::string>();
}

template <class Id>
Id need_id(const json& v, const char* what) {
  if (!v.is_string()) malformed(std::string(what) + " is not a string");
  auto id = Id::parse(v.get<std::string>());
  if (!id) malformed(std::string(what) + " is not a UUID");
  return *id;
}

json episode_json(const Episode& ep) {
  return json{{"id", ep.id.str()},
              {"kind", std::string(to_string(ep.kind))},
              {"content", ep.content},
              {"actor", ep.actor ? json(*ep.actor) : json(nullptr)},
              {"t_ref", format_iso8601(ep.t_ref)},
              {"t_ingested", format_iso8601(ep.t_ingested)},
              {"group", ep.group}};
}

Episode episode_from(const json& j) {
  Episode ep;
  ep.id = need_id<EpisodeId>(need(j, "id"), "episode id");
  auto kind = parse_episode_kind(need_string(j, "kind"));
  if (!kind) malformed("unknown episode kind");
  ep.kind = *kind;
  ep.content = need_string(j, "content");
  if (j.contains("actor") && !j.at("actor").is_null()) ep.actor = need_string(j, "actor");
  auto t = parse_iso8601(need_string(j, "t_ref"));
  if (!t) malformed("t_ref is not ISO 8601");
  ep.t_ref = *t;
  if (j.contains("t_ingested")) {
    auto ti = parse_iso8601(need_string(j, "t_ingested"));
    if (!ti) malformed("t_ingested is not ISO 8601");
    ep.t_ingested = *ti;
  }
  if (j.contains("group")) ep.group = need_string(j, "group");
  return ep;
}

json entities_json(std::span<const ExtractedEntity> list) {
  json out = json::array();
  for (const auto& e : list) out.push_back({{"name", e.name}, {"summary", e.summary}});
  return out;
}

std::vector<ExtractedEntity> entities_from(const json& j) {
  if (!j.is_array()) malformed("entity list is not an array");
  std::vector<ExtractedEntity> out;
  for (const auto& e : j) {
    ExtractedEntity x;
    x.name = need_string(e, "name");
    if (e.contains("summary") && !e.at("summary").is_null()) x.summary = need_string(e, "summary");
    out.push_back(std::move(x));
  }
  return out;
}

json opt_ts(const std::optional<Timestamp>& t) { return t ? json(format_iso8601(*t)) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return need_string(j, key);
}

}  // namespace

// -- wire -----------------------------------------------------------------

namespace wire {

json context_slots(const EpisodeContext& ctx) {
  json prev = json::array();
  for (const auto& p : ctx.previous) prev.push_back(episode_json(p));
  return json{{"current_message", episode_json(ctx.current)}, {"previous_messages", prev}};
}

EpisodeContext context_from_slots(const json& j) {
  EpisodeContext ctx;
  ctx.current = episode_from(need(j, "current_message"));
  const auto& prev = need(j, "previous_messages");
  if (!prev.is_array()) malformed("previous_messages is not an array");
  for (const auto& p : prev) ctx.previous.push_back(episode_from(p));
  return ctx;
}

json edge_view(const EdgeView& e) {
  return json{{"id", e.id.str()},
              {"source", e.source.str()},
              {"target", e.target.str()},
              {"source_name", e.source_name},
              {"target_name", e.target_name},
              {"predicate", e.predicate},
              {"fact", e.fact},
              {"valid_at", opt_ts(e.t_valid)},
              {"invalid_at", opt_ts(e.t_invalid)}};
}

EdgeView edge_view_from(const json& j) {
  EdgeView e;
  e.id = need_id<EdgeId>(need(j, "id"), "edge id");
  e.source = need_id<NodeId>(need(j, "source"), "source");
  e.target = need_id<NodeId>(need(j, "target"), "target");
  e.source_name = need_string(j, "source_name");
  e.target_name = need_string(j, "target_name");
  e.predicate = need_string(j, "predicate");
  e.fact = need_string(j, "fact");
  if (auto v = opt_string(j, "valid_at")) e.t_valid = parse_iso8601(*v);
  if (auto v = opt_string(j, "invalid_at")) e.t_invalid = parse_iso8601(*v);
  return e;
}

}  // namespace wire

// -- client ---------------------------------------------------------------

JsonHttpClient::JsonHttpClient(std::string base_url, HttpOptions options)
    : base_url_(std::move(base_url)), options_(options) {
  const auto scheme = base_url_.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidArgument, "adapter URL needs a scheme: " + base_url_);
  const auto path = base_url_.find('/', scheme + 3);
  scheme_host_port_ = base_url_.substr(0, path);
  prefix_ = path == std::string::npos ? std::string() : base_url_.substr(path);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

json JsonHttpClient::post(const std::string& path, const json& body) const {
  const auto payload = body.dump();
  std::string last_error;
  auto delay = options_.backoff;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    auto res = client.Post(prefix_ + path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400)
      throw Error(ErrorCode::ExtractorFailure,
                  base_url_ + path + " rejected the request: HTTP " + std::to_string(res->status) + " " + res->body);
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      malformed(e.what());
    }
  }
  throw Error(ErrorCode::AdapterUnavailable, base_url_ + path + " unavailable after " +
                                                 std::to_string(options_.retries + 1) + " attempts: " + last_error);
}

// -- extractor ------------------------------------------------------------

std::vector<ExtractedEntity> HttpExtractor::extract_entities(const EpisodeContext& ctx,
                                                             std::span<const ExtractedEntity> already_extracted) {
  auto body = wire::context_slots(ctx);
  body["already_extracted"] = entities_json(already_extracted);
  return entities_from(need(client_.post("/extract_entities", body), "entities"));
}

EntityResolution HttpExtractor::resolve_entity(const EpisodeContext& ctx, std::span<const EntityCandidate> existing,
                                               const ExtractedEntity& candidate) {
  auto body = wire::context_slots(ctx);
  json nodes = json::array();
  for (const auto& e : existing) nodes.push_back({{"id", e.id.str()}, {"name", e.name}, {"summary", e.summary}});
  body["existing_nodes"] = nodes;
  body["new_node"] = {{"name", candidate.name}, {"summary", candidate.summary}};
  const auto res = client_.post("/resolve_entity", body);
  const auto& dup = need(res, "duplicate");
  if (!dup.is_boolean()) malformed("'duplicate' is not a boolean");
  EntityResolution out;
  out.duplicate = dup.get<bool>();
  if (res.contains("id") && !res.at("id").is_null()) out.id = need_id<NodeId>(res.at("id"), "id");
  out.merged_name = opt_string(res, "merged_name");
  return out;
}

std::vector<ExtractedFact> HttpExtractor::extract_facts(const EpisodeContext& ctx,
                                                        std::span<const ExtractedEntity> entities) {
  auto body = wire::context_slots(ctx);
  body["entities"] = entities_json(entities);
  const json res = client_.post("/extract_facts", body);
  const auto& facts = need(res, "facts");
  if (!facts.is_array()) malformed("'facts' is not an array");
  std::vector<ExtractedFact> out;
  for (const auto& f : facts)
    out.push_back({need_string(f, "source"), need_string(f, "target"), need_string(f, "predicate"),
                   need_string(f, "fact")});
  return out;
}

FactResolution HttpExtractor::resolve_fact(std::span<const EdgeView> existing, const EdgeView& proposed) {
  json edges = json::array();
  for (const auto& e : existing) edges.push_back(wire::edge_view(e));
  const auto res = client_.post("/resolve_fact", {{"existing_edges", edges}, {"new_edge", wire::edge_view(proposed)}});
  const auto& dup = need(res, "duplicate");
  if (!dup.is_boolean()) malformed("'duplicate' is not a boolean");
  FactResolution out;
  out.duplicate = dup.get<bool>();
  if (res.contains("id") && !res.at("id").is_null()) out.id = need_id<EdgeId>(res.at("id"), "id");
  return out;
}

TemporalBounds HttpExtractor::extract_temporal(const EpisodeContext& ctx, Timestamp reference,
                                               const std::string& fact) {
  auto body = wire::context_slots(ctx);
  body["reference_timestamp"] = format_iso8601(reference);
  body["fact"] = fact;
  const auto res = client_.post("/extract_temporal", body);
  if (!res.is_object()) malformed("temporal response is not an object");
  return {opt_string(res, "valid_at"), opt_string(res, "invalid_at")};
}

std::vector<EdgeId> HttpExtractor::detect_contradictions(const EdgeView& proposed, std::span<const EdgeView> related) {
  json edges = json::array();
  for (const auto& e : related) edges.push_back(wire::edge_view(e));
  const auto res =
      client_.post("/detect_contradictions", {{"new_edge", wire::edge_view(proposed)}, {"existing_edges", edges}});
  const auto& ids = need(res, "contradicted");
  if (!ids.is_array()) malformed("'contradicted' is not an array");
  std::vector<EdgeId> out;
  for (const auto& id : ids) out.push_back(need_id<EdgeId>(id, "contradicted id"));
  return out;
}

std::string HttpExtractor::summarize(std::span<const std::string> texts) {
  return need_string(client_.post("/summarize", {{"texts", std::vector<std::string>(texts.begin(), texts.end())}}),
                     "summary");
}

std::string HttpExtractor::community_name(const std::string& summary) {
  return need_string(client_.post("/community_name", {{"summary", summary}}), "name");
}

// -- embedder / cross-encoder ---------------------------------------------

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidArgument, "adapter URL needs a scheme: " + url);
  const auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

}  // namespace

HttpEmbedder::HttpEmbedder(std::string url, std::size_t dim, HttpOptions options)
    : client_(split_url(url).first, options), dim_(dim) {
  path_ = split_url(url).second;
}

std::vector<float> HttpEmbedder::embed(std::string_view text) {
  const std::string t(text);
  return embed_batch(std::span<const std::string>(&t, 1)).front();
}

std::vector<std::vector<float>> HttpEmbedder::embed_batch(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  const auto res = client_.post(path_, {{"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  const auto& list = need(res, "embeddings");
  if (!list.is_array() || list.size() != texts.size()) malformed("expected one embedding per text");
  std::vector<std::vector<float>> out;
  out.reserve(list.size());
  for (const auto& v : list) {
    if (!v.is_array() || v.size() != dim_)
      throw Error(ErrorCode::DimensionMismatch, "embedding service returned a vector of the wrong dimension");
    std::vector<float> vec;
    vec.reserve(dim_);
    for (const auto& x : v) {
      if (!x.is_number()) malformed("embedding holds a non-number");
      vec.push_back(x.get<float>());
    }
    if (!normalize(vec)) malformed("embedding service returned a zero vector");
    out.push_back(std::move(vec));
  }
  return out;
}

HttpCrossEncoder::HttpCrossEncoder(std::string url, HttpOptions options) : client_(split_url(url).first, options) {
  path_ = split_url(url).second;
}

std::vector<double> HttpCrossEncoder::score(std::string_view query, std::span<const std::string> texts) {
  const auto res = client_.post(
      path_, {{"query", std::string(query)}, {"texts", std::vector<std::string>(texts.begin(), texts.end())}});
  const auto& scores = need(res, "scores");
  if (!scores.is_array() || scores.size() != texts.size()) malformed("expected one score per text");
  std::vector<double> out;
  for (const auto& s : scores) {
    if (!s.is_number()) malformed("score is not a number");
    out.push_back(s.get<double>());
  }
  return out;
}

// -- serving side ---------------------------------------------------------

namespace {

using Handler = std::function<json(const json&)>;

void route(httplib::Server& server, const std::string& path, Handler handler) {
  server.Post(path, [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    try {
      res.set_content(handler(body).dump(), "application/json");
    } catch (const Error& e) {
      res.status = e.code() == ErrorCode::ExtractorFailure || e.code() == ErrorCode::InvalidArgument ? 400 : 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

std::vector<EdgeView> edge_views(const json& j) {
  if (!j.is_array()) malformed("edge list is not an array");
  std::vector<EdgeView> out;
  for (const auto& e : j) out.push_back(wire::edge_view_from(e));
  return out;
}

std::vector<std::string> strings(const json& j, const char* key) {
  const auto& v = need(j, key);
  if (!v.is_array()) malformed(std::string("'") + key + "' is not an array");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) malformed(std::string("'") + key + "' holds a non-string");
    out.push_back(s.get<std::string>());
  }
  return out;
}

}  // namespace

void mount_extractor_routes(httplib::Server& server, std::shared_ptr<Extractor> ex, const std::string& prefix) {
  route(server, prefix + "/extract_entities", [ex](const json& j) {
    const auto ctx = wire::context_from_slots(j);
    const auto already = entities_from(need(j, "already_extracted"));
    return json{{"entities", entities_json(ex->extract_entities(ctx, already))}};
  });
  route(server, prefix + "/resolve_entity", [ex](const json& j) {
    const auto ctx = wire::context_from_slots(j);
    std::vector<EntityCandidate> existing;
    for (const auto& n : need(j, "existing_nodes"))
      existing.push_back({need_id<NodeId>(need(n, "id"), "id"), need_string(n, "name"), need_string(n, "summary")});
    const auto& nn = need(j, "new_node");
    const ExtractedEntity candidate{need_string(nn, "name"), need_string(nn, "summary")};
    const auto r = ex->resolve_entity(ctx, existing, candidate);
    return json{{"duplicate", r.duplicate},
                {"id", r.id ? json(r.id->str()) : json(nullptr)},
                {"merged_name", r.merged_name ? json(*r.merged_name) : json(nullptr)}};
  });
  route(server, prefix + "/extract_facts", [ex](const json& j) {
    const auto ctx = wire::context_from_slots(j);
    const auto entities = entities_from(need(j, "entities"));
    json facts = json::array();
    for (const auto& f : ex->extract_facts(ctx, entities))
      facts.push_back({{"source", f.source}, {"target", f.target}, {"predicate", f.predicate}, {"fact", f.fact}});
    return json{{"facts", facts}};
  });
  route(server, prefix + "/resolve_fact", [ex](const json& j) {
    const auto existing = edge_views(need(j, "existing_edges"));
    const auto r = ex->resolve_fact(existing, wire::edge_view_from(need(j, "new_edge")));
    return json{{"duplicate", r.duplicate}, {"id", r.id ? json(r.id->str()) : json(nullptr)}};
  });
  route(server, prefix + "/extract_temporal", [ex](const json& j) {
    const auto ctx = wire::context_from_slots(j);
    auto ref = parse_iso8601(need_string(j, "reference_timestamp"));
    if (!ref) malformed("reference_timestamp is not ISO 8601");
    const auto b = ex->extract_temporal(ctx, *ref, need_string(j, "fact"));
    return json{{"valid_at", b.valid_at ? json(*b.valid_at) : json(nullptr)},
                {"invalid_at", b.invalid_at ? json(*b.invalid_at) : json(nullptr)}};
  });
  route(server, prefix + "/detect_contradictions", [ex](const json& j) {
    const auto related = edge_views(need(j, "existing_edges"));
    json ids = json::array();
    for (const auto& id : ex->detect_contradictions(wire::edge_view_from(need(j, "new_edge")), related))
      ids.push_back(id.str());
    return json{{"contradicted", ids}};
  });
  route(server, prefix + "/summarize", [ex](const json& j) {
    const auto texts = strings(j, "texts");
    return json{{"summary", ex->summarize(texts)}};
  });
  route(server, prefix + "/community_name",
        [ex](const json& j) { return json{{"name", ex->community_name(need_string(j, "summary"))}}; });
}

void mount_embedder_route(httplib::Server& server, std::shared_ptr<Embedder> embedder, const std::string& path) {
  route(server, path, [embedder](const json& j) {
    const auto texts = strings(j, "texts");
    return json{{"embeddings", embedder->embed_batch(texts)}};
  });
}

void mount_cross_encoder_route(httplib::Server& server, std::shared_ptr<CrossEncoder> scorer,
                               const std::string& path) {
  route(server, path, [scorer](const json& j) {
    const auto texts = strings(j, "texts");
    return json{{"scores", scorer->score(need_string(j, "query"), texts)}};
  });
}

}  // namespace tkg
