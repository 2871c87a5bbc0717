#include "tkg/graph.hpp"

#include <algorithm>
#include <cmath>

#include "tkg/storage.hpp"
#include "tkg/text.hpp"

namespace tkg {

namespace {

template <class Id>
void insert_sorted(std::vector<Id>& v, const Id& id) {
  auto it = std::lower_bound(v.begin(), v.end(), id);
  if (it == v.end() || *it != id) v.insert(it, id);
}

template <class Id>
void erase_sorted(std::vector<Id>& v, const Id& id) {
  auto it = std::lower_bound(v.begin(), v.end(), id);
  if (it != v.end() && *it == id) v.erase(it);
}

template <class Id, class T>
const T* lookup(const Table<Id, T>& table, const Id& id) {
  auto it = table.find(id);
  return it == table.end() ? nullptr : it->second.get();
}

template <class Id, class T>
bool tables_equal(const Table<Id, T>& a, const Table<Id, T>& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
    if (ia->first != ib->first || !(*ia->second == *ib->second)) return false;
  return true;
}

std::string profile_text(const EntityNode& n) { return n.name + " " + n.summary; }

}  // namespace

// -- GraphState -------------------------------------------------------------

GraphState::GraphState(GraphConfig config)
    : config_(std::move(config)),
      meta_(std::make_shared<const GraphMeta>()),
      episodes_(std::make_shared<const Table<EpisodeId, Episode>>()),
      episode_order_(std::make_shared<const std::vector<EpisodeId>>()),
      entities_(std::make_shared<const Table<NodeId, EntityNode>>()),
      edges_(std::make_shared<const Table<EdgeId, SemanticEdge>>()),
      adjacency_(std::make_shared<const Adjacency>()),
      episodic_(std::make_shared<const EpisodicLinks>()),
      communities_(std::make_shared<const Table<CommunityId, CommunityNode>>()),
      fact_groups_(std::make_shared<const std::map<FactGroupId, std::string>>()),
      fact_text_(std::make_shared<const InvertedIndex<EdgeId>>()),
      entity_name_text_(std::make_shared<const InvertedIndex<NodeId>>()),
      entity_profile_text_(std::make_shared<const InvertedIndex<NodeId>>()),
      community_name_text_(std::make_shared<const InvertedIndex<CommunityId>>()),
      fact_vec_(std::make_shared<const VectorIndex<EdgeId>>(config_.embedding_dim)),
      entity_vec_(std::make_shared<const VectorIndex<NodeId>>(config_.embedding_dim)),
      community_vec_(std::make_shared<const VectorIndex<CommunityId>>(config_.embedding_dim)) {
  if (config_.embedding_dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

const Episode* GraphState::episode(const EpisodeId& id) const { return lookup(*episodes_, id); }
const EntityNode* GraphState::entity(const NodeId& id) const { return lookup(*entities_, id); }
const SemanticEdge* GraphState::edge(const EdgeId& id) const { return lookup(*edges_, id); }
const CommunityNode* GraphState::community(const CommunityId& id) const { return lookup(*communities_, id); }

const EpisodicEdge* GraphState::episodic_edge(const EdgeId& id) const {
  auto it = episodic_->edges.find(id);
  return it == episodic_->edges.end() ? nullptr : &it->second;
}

const Episode& GraphState::require_episode(const EpisodeId& id) const {
  if (auto* p = episode(id)) return *p;
  throw Error(ErrorCode::UnknownEpisode, id.str());
}
const EntityNode& GraphState::require_entity(const NodeId& id) const {
  if (auto* p = entity(id)) return *p;
  throw Error(ErrorCode::UnknownNode, id.str());
}
const SemanticEdge& GraphState::require_edge(const EdgeId& id) const {
  if (auto* p = edge(id)) return *p;
  throw Error(ErrorCode::UnknownEdge, id.str());
}
const CommunityNode& GraphState::require_community(const CommunityId& id) const {
  if (auto* p = community(id)) return *p;
  throw Error(ErrorCode::UnknownCommunity, id.str());
}

std::vector<EpisodeId> GraphState::recent_episodes(std::size_t n) const {
  const auto& order = *episode_order_;
  const std::size_t k = std::min(n, order.size());
  return std::vector<EpisodeId>(order.end() - static_cast<std::ptrdiff_t>(k), order.end());
}

std::vector<const SemanticEdge*> GraphState::edges_between(const NodeId& a, const NodeId& b) const {
  std::vector<const SemanticEdge*> out;
  auto ia = incident_edges(a);
  auto ib = incident_edges(b);
  const auto& scan = ia.size() <= ib.size() ? ia : ib;
  for (const auto& eid : scan) {
    const auto* e = edge(eid);
    if ((e->source == a && e->target == b) || (e->source == b && e->target == a)) out.push_back(e);
  }
  return out;
}

std::span<const EdgeId> GraphState::incident_edges(const NodeId& n) const {
  auto it = adjacency_->find(n);
  if (it == adjacency_->end()) return {};
  return it->second;
}

std::vector<NodeId> GraphState::neighbors(const NodeId& n) const {
  std::vector<NodeId> out;
  for (const auto& eid : incident_edges(n)) {
    const auto* e = edge(eid);
    out.push_back(e->source == n ? e->target : e->source);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::span<const EpisodeId> GraphState::episodes_of(const NodeId& entity) const {
  auto it = episodic_->episodes_of_entity.find(entity);
  if (it == episodic_->episodes_of_entity.end()) return {};
  return it->second;
}

std::span<const NodeId> GraphState::entities_of(const EpisodeId& episode) const {
  auto it = episodic_->entities_of_episode.find(episode);
  if (it == episodic_->entities_of_episode.end()) return {};
  return it->second;
}

bool GraphState::same_content(const GraphState& other) const {
  return config_ == other.config_ && *meta_ == *other.meta_ && tables_equal(*episodes_, *other.episodes_) &&
         *episode_order_ == *other.episode_order_ && tables_equal(*entities_, *other.entities_) &&
         tables_equal(*edges_, *other.edges_) && episodic_->edges == other.episodic_->edges &&
         tables_equal(*communities_, *other.communities_);
}

// -- Transaction ------------------------------------------------------------

GraphMeta& Transaction::meta_mut() { return cow_mut(draft_->meta_); }

Timestamp Transaction::now() {
  auto& meta = meta_mut();
  const auto t = std::max(clock_->now().ms, meta.last_ingest_ms);
  meta.last_ingest_ms = t;
  return Timestamp{t};
}

Uuid Transaction::next_uuid() {
  auto& meta = meta_mut();
  const auto seed = draft_->config_.id_seed != 0 ? draft_->config_.id_seed : fnv1a64(draft_->config_.name);
  IdGenerator gen(seed, meta.id_counter);
  const auto id = gen.next();
  meta.id_counter = gen.counter();
  return id;
}

void Transaction::record(Mutation::Kind kind, const Uuid& id) { log_.push_back(Mutation{kind, id}); }

void Transaction::check_embedding(std::span<const float> v, const char* what) const {
  if (v.size() != draft_->config_.embedding_dim)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has dimension " + std::to_string(v.size()) +
                                                  ", graph uses " + std::to_string(draft_->config_.embedding_dim));
  const double n = l2_norm(v);
  if (std::abs(n - 1.0) > 1e-6)
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not unit norm (" + std::to_string(n) + ")");
}

EpisodeId Transaction::add_episode(Episode ep) {
  if (trim(ep.content).empty()) throw Error(ErrorCode::EmptyContent, "episode content is empty");
  if (ep.kind == EpisodeKind::Message && (!ep.actor || trim(*ep.actor).empty()))
    throw Error(ErrorCode::MissingActor, "message episodes need an actor");
  if (ep.id.is_nil()) ep.id = new_id<EpisodeId>();
  if (draft_->episode(ep.id)) throw Error(ErrorCode::DuplicateId, "episode " + ep.id.str() + " already stored");
  ep.t_ingested = now();
  const auto id = ep.id;
  cow_mut(draft_->episodes_).emplace(id, std::make_shared<const Episode>(std::move(ep)));
  cow_mut(draft_->episode_order_).push_back(id);
  record(Mutation::Kind::Episode, id.value);
  return id;
}

NodeId Transaction::upsert_entity(EntityNode node) {
  if (trim(node.name).empty()) throw Error(ErrorCode::InvalidArgument, "entity name is empty");
  check_embedding(node.name_embedding, "name embedding");
  if (node.community && !draft_->community(*node.community))
    throw Error(ErrorCode::DanglingReference, "community " + node.community->str() + " does not exist");
  if (node.id.is_nil()) node.id = new_id<NodeId>();
  const auto id = node.id;
  const EntityNode* old = draft_->entity(id);
  const bool name_changed = !old || old->name != node.name;
  const bool profile_changed = name_changed || old->summary != node.summary;
  const bool vector_changed = !old || old->name_embedding != node.name_embedding;
  if (name_changed) cow_mut(draft_->entity_name_text_).upsert(id, node.name);
  if (profile_changed) cow_mut(draft_->entity_profile_text_).upsert(id, profile_text(node));
  if (vector_changed) cow_mut(draft_->entity_vec_).upsert(id, node.name_embedding);
  cow_mut(draft_->entities_)[id] = std::make_shared<const EntityNode>(std::move(node));
  record(Mutation::Kind::Entity, id.value);
  return id;
}

EdgeId Transaction::upsert_edge(SemanticEdge edge) {
  if (!draft_->entity(edge.source))
    throw Error(ErrorCode::DanglingReference, "source entity " + edge.source.str() + " does not exist");
  if (!draft_->entity(edge.target))
    throw Error(ErrorCode::DanglingReference, "target entity " + edge.target.str() + " does not exist");
  if (edge.id.is_nil()) edge.id = new_id<EdgeId>();
  check_edge_invariants(edge);
  for (const auto& ep : edge.episodes)
    if (!draft_->episode(ep)) throw Error(ErrorCode::DanglingReference, "episode " + ep.str() + " does not exist");
  check_embedding(edge.fact_embedding, "fact embedding");
  if (edge.fact_group) {
    auto it = draft_->fact_groups_->find(*edge.fact_group);
    if (it != draft_->fact_groups_->end() && it->second != edge.fact)
      throw Error(ErrorCode::InvariantViolation, "fact group " + edge.fact_group->str() + " carries different text");
  }
  const auto id = edge.id;
  const SemanticEdge* old = draft_->edge(id);
  if (old) {
    if (old->t_valid != edge.t_valid || old->t_created != edge.t_created)
      throw Error(ErrorCode::InvariantViolation, "t_valid and t_created of edge " + id.str() + " are immutable");
    if ((old->t_invalid && !edge.t_invalid) || (old->t_expired && !edge.t_expired))
      throw Error(ErrorCode::InvariantViolation, "t_invalid and t_expired of edge " + id.str() + " cannot be cleared");
  }
  auto& adj = cow_mut(draft_->adjacency_);
  if (old && (old->source != edge.source || old->target != edge.target)) {
    erase_sorted(adj[old->source], id);
    erase_sorted(adj[old->target], id);
  }
  insert_sorted(adj[edge.source], id);
  insert_sorted(adj[edge.target], id);
  if (!old || old->fact != edge.fact) cow_mut(draft_->fact_text_).upsert(id, edge.fact);
  if (!old || old->fact_embedding != edge.fact_embedding) cow_mut(draft_->fact_vec_).upsert(id, edge.fact_embedding);
  if (edge.fact_group) cow_mut(draft_->fact_groups_).emplace(*edge.fact_group, edge.fact);
  cow_mut(draft_->edges_)[id] = std::make_shared<const SemanticEdge>(std::move(edge));
  record(Mutation::Kind::Edge, id.value);
  return id;
}

EdgeId Transaction::link_episode(const EpisodeId& episode, const NodeId& entity) {
  if (!draft_->episode(episode))
    throw Error(ErrorCode::DanglingReference, "episode " + episode.str() + " does not exist");
  if (!draft_->entity(entity)) throw Error(ErrorCode::DanglingReference, "entity " + entity.str() + " does not exist");
  if (auto it = draft_->episodic_->by_pair.find({episode, entity}); it != draft_->episodic_->by_pair.end())
    return it->second;
  const auto id = new_id<EdgeId>();
  auto& links = cow_mut(draft_->episodic_);
  links.edges.emplace(id, EpisodicEdge{id, episode, entity});
  links.by_pair.emplace(std::make_pair(episode, entity), id);
  insert_sorted(links.episodes_of_entity[entity], episode);
  insert_sorted(links.entities_of_episode[episode], entity);
  record(Mutation::Kind::EpisodicEdge, id.value);
  return id;
}

CommunityId Transaction::upsert_community(CommunityNode community) {
  if (community.members.empty()) throw Error(ErrorCode::InvalidArgument, "community has no members");
  check_embedding(community.name_embedding, "community name embedding");
  std::sort(community.members.begin(), community.members.end());
  community.members.erase(std::unique(community.members.begin(), community.members.end()), community.members.end());
  for (const auto& m : community.members)
    if (!draft_->entity(m)) throw Error(ErrorCode::DanglingReference, "member " + m.str() + " does not exist");
  if (community.id.is_nil()) community.id = new_id<CommunityId>();
  const auto id = community.id;
  const CommunityNode* old = draft_->community(id);
  if (!old || old->name != community.name) cow_mut(draft_->community_name_text_).upsert(id, community.name);
  if (!old || old->name_embedding != community.name_embedding)
    cow_mut(draft_->community_vec_).upsert(id, community.name_embedding);
  cow_mut(draft_->communities_)[id] = std::make_shared<const CommunityNode>(std::move(community));
  record(Mutation::Kind::Community, id.value);
  return id;
}

void Transaction::remove_community(const CommunityId& id) {
  if (!draft_->community(id)) throw Error(ErrorCode::UnknownCommunity, id.str());
  cow_mut(draft_->communities_).erase(id);
  cow_mut(draft_->community_name_text_).remove(id);
  cow_mut(draft_->community_vec_).remove(id);
  record(Mutation::Kind::CommunityRemoved, id.value);
}

void Transaction::set_staleness(std::uint64_t value) { meta_mut().staleness = value; }

// -- Graph ------------------------------------------------------------------

Graph::Graph(GraphConfig config, std::shared_ptr<const Clock> clock)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : std::make_shared<const SystemClock>()),
      current_(std::make_shared<const GraphState>(config_)) {}

Graph::~Graph() = default;

std::unique_ptr<Graph> Graph::load(const std::filesystem::path& path, std::shared_ptr<const Clock> clock) {
  auto state = storage::read_store(path);
  auto g = std::make_unique<Graph>(state->config(), std::move(clock));
  g->install(std::move(state));
  return g;
}

std::unique_ptr<Graph> Graph::open(const std::filesystem::path& path, GraphConfig config,
                                   std::shared_ptr<const Clock> clock) {
  std::unique_ptr<Graph> g;
  if (std::filesystem::exists(path)) {
    std::uintmax_t valid = 0;
    auto state = storage::read_store(path, &valid);
    if (valid < std::filesystem::file_size(path)) std::filesystem::resize_file(path, valid);
    g = std::make_unique<Graph>(state->config(), std::move(clock));
    g->install(std::move(state));
  } else {
    g = std::make_unique<Graph>(std::move(config), std::move(clock));
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto bytes = storage::file_header();
    auto body = storage::encode_commit(*g->current_, nullptr, true);
    bytes.insert(bytes.end(), body.begin(), body.end());
    Journal(path).append(bytes);
  }
  g->journal_ = std::make_unique<Journal>(path);
  return g;
}

void Graph::persist(const std::filesystem::path& path) const {
  auto state = snapshot();
  auto bytes = storage::file_header();
  auto body = storage::encode_commit(*state, nullptr, true);
  bytes.insert(bytes.end(), body.begin(), body.end());
  auto tmp = path;
  tmp += ".tmp";
  std::filesystem::remove(tmp);
  Journal(tmp).append(bytes);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

GraphSnapshot Graph::snapshot() const {
  std::lock_guard lock(state_mu_);
  return current_;
}

std::shared_ptr<GraphState> Graph::clone_current() const {
  std::lock_guard lock(state_mu_);
  return std::make_shared<GraphState>(*current_);
}

void Graph::commit(Transaction& tx) {
  if (tx.log_.empty()) {
    install(std::move(tx.draft_));
    return;
  }
  ++cow_mut(tx.draft_->meta_).commits;
  if (journal_) journal_->append(storage::encode_commit(*tx.draft_, &tx.log_, false));
  install(std::move(tx.draft_));
}

void Graph::install(std::shared_ptr<const GraphState> state) {
  std::lock_guard lock(state_mu_);
  current_ = std::move(state);
}

EpisodeId Graph::add_episode(Episode ep) {
  return write([&](Transaction& tx) { return tx.add_episode(std::move(ep)); });
}
NodeId Graph::upsert_entity(EntityNode node) {
  return write([&](Transaction& tx) { return tx.upsert_entity(std::move(node)); });
}
EdgeId Graph::upsert_edge(SemanticEdge edge) {
  return write([&](Transaction& tx) { return tx.upsert_edge(std::move(edge)); });
}
EdgeId Graph::link_episode(const EpisodeId& episode, const NodeId& entity) {
  return write([&](Transaction& tx) { return tx.link_episode(episode, entity); });
}

std::vector<SemanticEdge> Graph::edges_between(const NodeId& a, const NodeId& b) const {
  auto s = snapshot();
  s->require_entity(a);
  s->require_entity(b);
  std::vector<SemanticEdge> out;
  for (const auto* e : s->edges_between(a, b)) out.push_back(*e);
  return out;
}

}  // namespace tkg
