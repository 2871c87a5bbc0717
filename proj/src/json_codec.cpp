#include "tkg/json_codec.hpp"

#include <set>

namespace tkg {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); }

template <class Id>
std::string id_str(const Id& id) {
  return id.str();
}

template <class Id>
Id parse_id(const json& j, const char* what) {
  if (!j.is_string()) bad(std::string(what) + " must be a UUID string");
  auto id = Id::parse(j.get<std::string>());
  if (!id) bad(std::string(what) + " is not a valid UUID: " + j.get<std::string>());
  return *id;
}

template <class Id>
std::optional<Id> optional_id(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return parse_id<Id>(j.at(key), key);
}

template <class Id>
json id_list(const std::vector<Id>& ids) {
  json out = json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

template <class Id>
std::vector<Id> parse_id_list(const json& j, const char* key) {
  std::vector<Id> out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  if (!j.at(key).is_array()) bad(std::string(key) + " must be an array");
  for (const auto& x : j.at(key)) out.push_back(parse_id<Id>(x, key));
  return out;
}

const json& field(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string string_field(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Timestamp timestamp_field(const json& j, const char* key) {
  auto t = optional_timestamp(j, key);
  if (!t) bad(std::string("missing field '") + key + "'");
  return *t;
}

std::vector<float> floats(const json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array()) bad(std::string("field '") + key + "' must be an array of numbers");
  std::vector<float> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) bad(std::string("field '") + key + "' must be an array of numbers");
    out.push_back(x.get<float>());
  }
  return out;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items())
    if (!ok.count(k)) bad("unknown field '" + k + "'");
}

std::size_t positive(const json& j, const char* key, bool allow_zero = false) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) bad(std::string("field '") + key + "' must be an integer");
  const auto n = v.get<std::int64_t>();
  if (n < (allow_zero ? 0 : 1)) bad(std::string("field '") + key + "' is out of range");
  return static_cast<std::size_t>(n);
}

}  // namespace

json timestamp_or_null(const std::optional<Timestamp>& t) { return t ? json(format_iso8601(*t)) : json(nullptr); }

std::optional<Timestamp> optional_timestamp(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto& v = j.at(key);
  if (!v.is_string()) bad(std::string("field '") + key + "' must be an ISO 8601 string");
  auto t = parse_iso8601(v.get<std::string>());
  if (!t) bad(std::string("field '") + key + "' is not ISO 8601: " + v.get<std::string>());
  return t;
}

json to_json(const Episode& ep) {
  return json{{"id", ep.id.str()},
              {"kind", std::string(to_string(ep.kind))},
              {"content", ep.content},
              {"actor", ep.actor ? json(*ep.actor) : json(nullptr)},
              {"t_ref", format_iso8601(ep.t_ref)},
              {"t_ingested", format_iso8601(ep.t_ingested)},
              {"group", ep.group}};
}

json to_json(const EntityNode& node, bool with_embedding) {
  json j{{"id", node.id.str()},
         {"name", node.name},
         {"summary", node.summary},
         {"community", node.community ? json(node.community->str()) : json(nullptr)}};
  if (with_embedding) j["name_embedding"] = node.name_embedding;
  return j;
}

json to_json(const SemanticEdge& edge, bool with_embedding) {
  json j{{"id", edge.id.str()},
         {"source", edge.source.str()},
         {"target", edge.target.str()},
         {"predicate", edge.predicate},
         {"fact", edge.fact},
         {"fact_group", edge.fact_group ? json(edge.fact_group->str()) : json(nullptr)},
         {"t_created", format_iso8601(edge.t_created)},
         {"t_expired", timestamp_or_null(edge.t_expired)},
         {"t_valid", timestamp_or_null(edge.t_valid)},
         {"t_invalid", timestamp_or_null(edge.t_invalid)},
         {"episodes", id_list(edge.episodes)}};
  if (with_embedding) j["fact_embedding"] = edge.fact_embedding;
  return j;
}

json to_json(const CommunityNode& c, bool with_embedding) {
  json j{{"id", c.id.str()},
         {"name", c.name},
         {"summary", c.summary},
         {"members", id_list(c.members)},
         {"dirty", c.dirty}};
  if (with_embedding) j["name_embedding"] = c.name_embedding;
  return j;
}

json to_json(const IngestReport& r) {
  return json{{"episode", r.episode.str()},
              {"entities_added", r.entities_added},
              {"entities_merged", r.entities_merged},
              {"edges_added", r.edges_added},
              {"edges_merged", r.edges_merged},
              {"edges_invalidated", r.edges_invalidated},
              {"entities", id_list(r.entities)},
              {"edges", id_list(r.edges)},
              {"invalidated", id_list(r.invalidated)},
              {"warnings", r.warnings},
              {"communities_refreshed", r.communities_refreshed}};
}

json to_json(const RetrievalResult& r, bool with_timings) {
  json edges = json::array(), entities = json::array(), communities = json::array();
  for (const auto& e : r.edges) edges.push_back(to_json(e, false));
  for (const auto& n : r.entities) entities.push_back(to_json(n, false));
  for (const auto& c : r.communities) communities.push_back(to_json(c, false));
  json j{{"edges", edges},
         {"entities", entities},
         {"communities", communities},
         {"context", r.context},
         {"rerank_fell_back", r.rerank_fell_back},
         {"warnings", r.warnings}};
  if (with_timings)
    j["timings"] = json{{"search_ms", r.timings.search_ms},
                        {"rerank_ms", r.timings.rerank_ms},
                        {"construct_ms", r.timings.construct_ms},
                        {"total_ms", r.timings.total_ms}};
  return j;
}

EntityNode entity_from_json(const json& j) {
  EntityNode n;
  n.id = parse_id<NodeId>(field(j, "id"), "id");
  n.name = string_field(j, "name");
  n.summary = string_field(j, "summary");
  n.name_embedding = floats(j, "name_embedding");
  n.community = optional_id<CommunityId>(j, "community");
  return n;
}

SemanticEdge edge_from_json(const json& j) {
  SemanticEdge e;
  e.id = parse_id<EdgeId>(field(j, "id"), "id");
  e.source = parse_id<NodeId>(field(j, "source"), "source");
  e.target = parse_id<NodeId>(field(j, "target"), "target");
  e.predicate = string_field(j, "predicate");
  e.fact = string_field(j, "fact");
  e.fact_embedding = floats(j, "fact_embedding");
  e.fact_group = optional_id<FactGroupId>(j, "fact_group");
  e.t_created = timestamp_field(j, "t_created");
  e.t_expired = optional_timestamp(j, "t_expired");
  e.t_valid = optional_timestamp(j, "t_valid");
  e.t_invalid = optional_timestamp(j, "t_invalid");
  e.episodes = parse_id_list<EpisodeId>(j, "episodes");
  return e;
}

CommunityNode community_from_json(const json& j) {
  CommunityNode c;
  c.id = parse_id<CommunityId>(field(j, "id"), "id");
  c.name = string_field(j, "name");
  c.summary = string_field(j, "summary");
  c.name_embedding = floats(j, "name_embedding");
  c.members = parse_id_list<NodeId>(j, "members");
  const auto& d = field(j, "dirty");
  if (!d.is_boolean()) bad("field 'dirty' must be a boolean");
  c.dirty = d.get<bool>();
  return c;
}

Episode episode_from_request(const json& j) {
  if (!j.is_object()) bad("episode body must be a JSON object");
  reject_unknown(j, {"id", "kind", "content", "actor", "t_ref", "group"});
  Episode ep;
  if (auto id = optional_id<EpisodeId>(j, "id")) ep.id = *id;
  if (j.contains("kind") && !j.at("kind").is_null()) {
    if (!j.at("kind").is_string()) bad("field 'kind' must be a string");
    auto kind = parse_episode_kind(j.at("kind").get<std::string>());
    if (!kind) bad("unknown episode kind '" + j.at("kind").get<std::string>() + "'");
    ep.kind = *kind;
  }
  ep.content = string_field(j, "content");
  if (j.contains("actor") && !j.at("actor").is_null()) ep.actor = string_field(j, "actor");
  ep.t_ref = timestamp_field(j, "t_ref");
  if (j.contains("group")) ep.group = string_field(j, "group");
  return ep;
}

RetrievalRequest retrieval_request_from_json(const json& j, const RetrievalRequest& defaults) {
  if (!j.is_object()) bad("search body must be a JSON object");
  reject_unknown(j, {"query", "limit", "methods", "as_of", "seed_nodes", "seed_episodes", "bfs_depth",
                     "recency_seeding", "recency_episodes", "reranker", "rrf_k", "mmr_lambda", "centroid",
                     "include_communities", "embedding"});
  RetrievalRequest r = defaults;
  r.query.text = string_field(j, "query");
  if (j.contains("limit")) r.query.limit = positive(j, "limit");
  if (j.contains("methods")) {
    const auto& m = j.at("methods");
    if (!m.is_array()) bad("field 'methods' must be an array");
    r.query.methods.clear();
    for (const auto& x : m) {
      if (!x.is_string()) bad("field 'methods' must hold strings");
      auto method = parse_search_method(x.get<std::string>());
      if (!method) bad("unknown search method '" + x.get<std::string>() + "'");
      r.query.methods.insert(*method);
    }
  }
  if (j.contains("as_of")) r.query.as_of = optional_timestamp(j, "as_of");
  if (j.contains("seed_nodes")) r.query.seed_nodes = parse_id_list<NodeId>(j, "seed_nodes");
  if (j.contains("seed_episodes")) r.query.seed_episodes = parse_id_list<EpisodeId>(j, "seed_episodes");
  if (j.contains("bfs_depth")) r.query.bfs_depth = positive(j, "bfs_depth", true);
  if (j.contains("recency_episodes")) r.query.recency_episodes = positive(j, "recency_episodes", true);
  if (j.contains("recency_seeding")) {
    if (!j.at("recency_seeding").is_boolean()) bad("field 'recency_seeding' must be a boolean");
    r.query.recency_seeding = j.at("recency_seeding").get<bool>();
  }
  if (j.contains("embedding")) r.query.embedding = floats(j, "embedding");
  if (j.contains("reranker")) {
    auto m = parse_rerank_method(string_field(j, "reranker"));
    if (!m) bad("unknown reranker '" + j.at("reranker").get<std::string>() + "'");
    r.reranker.method = *m;
  }
  if (j.contains("rrf_k")) r.reranker.rrf_k = static_cast<int>(positive(j, "rrf_k"));
  if (j.contains("mmr_lambda")) {
    if (!j.at("mmr_lambda").is_number()) bad("field 'mmr_lambda' must be a number");
    r.reranker.mmr_lambda = j.at("mmr_lambda").get<double>();
  }
  r.reranker.centroid = optional_id<NodeId>(j, "centroid");
  if (j.contains("include_communities")) {
    if (!j.at("include_communities").is_boolean()) bad("field 'include_communities' must be a boolean");
    r.context.include_communities = j.at("include_communities").get<bool>();
  }
  r.query.validate();
  r.reranker.validate();
  return r;
}

}  // namespace tkg
