#include "tkg/storage.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <unistd.h>
#include <zlib.h>

namespace tkg {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void uuid(const Uuid& u) {
    u64(u.hi);
    u64(u.lo);
  }
  template <class Tag>
  void id(const StrongId<Tag>& v) {
    uuid(v.value);
  }
  void ts(Timestamp t) { i64(t.ms); }
  void opt_ts(const std::optional<Timestamp>& t) {
    u8(t ? 1 : 0);
    if (t) ts(*t);
  }
  void floats(const std::vector<float>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (float f : v) u32(std::bit_cast<std::uint32_t>(f));
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  bool done() const noexcept { return pos_ == in_.size(); }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Uuid uuid() {
    Uuid u;
    u.hi = u64();
    u.lo = u64();
    return u;
  }
  template <class Id>
  Id id() {
    return Id{uuid()};
  }
  Timestamp ts() { return Timestamp{i64()}; }
  std::optional<Timestamp> opt_ts() {
    if (u8() == 0) return std::nullopt;
    return ts();
  }
  std::vector<float> floats() {
    const auto n = u32();
    need(static_cast<std::size_t>(n) * 4);
    std::vector<float> v(n);
    for (auto& f : v) f = std::bit_cast<float>(u32());
    return v;
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::CorruptStore, "record payload is shorter than its fields");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void put_record(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& payload) {
  Writer w(out);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  w.u32(storage::crc32(payload));
}

template <class Fn>
void emit(std::vector<std::uint8_t>& out, storage::RecordType type, Fn&& body) {
  std::vector<std::uint8_t> payload;
  Writer w(payload);
  w.u8(static_cast<std::uint8_t>(type));
  body(w);
  put_record(out, payload);
}

void write_episode(Writer& w, const Episode& e) {
  w.id(e.id);
  w.u8(static_cast<std::uint8_t>(e.kind));
  w.str(e.content);
  w.u8(e.actor ? 1 : 0);
  if (e.actor) w.str(*e.actor);
  w.ts(e.t_ref);
  w.ts(e.t_ingested);
  w.str(e.group);
}

void write_entity(Writer& w, const EntityNode& n) {
  w.id(n.id);
  w.str(n.name);
  w.str(n.summary);
  w.floats(n.name_embedding);
  w.u8(n.community ? 1 : 0);
  if (n.community) w.id(*n.community);
}

void write_edge(Writer& w, const SemanticEdge& e) {
  w.id(e.id);
  w.id(e.source);
  w.id(e.target);
  w.str(e.predicate);
  w.str(e.fact);
  w.floats(e.fact_embedding);
  w.u8(e.fact_group ? 1 : 0);
  if (e.fact_group) w.id(*e.fact_group);
  w.ts(e.t_created);
  w.opt_ts(e.t_expired);
  w.opt_ts(e.t_valid);
  w.opt_ts(e.t_invalid);
  w.u32(static_cast<std::uint32_t>(e.episodes.size()));
  for (const auto& ep : e.episodes) w.id(ep);
}

void write_episodic(Writer& w, const EpisodicEdge& e) {
  w.id(e.id);
  w.id(e.episode);
  w.id(e.entity);
}

void write_community(Writer& w, const CommunityNode& c) {
  w.id(c.id);
  w.str(c.name);
  w.str(c.summary);
  w.floats(c.name_embedding);
  w.u8(c.dirty ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(c.members.size()));
  for (const auto& m : c.members) w.id(m);
}

void write_meta(Writer& w, const GraphMeta& m) {
  w.u64(m.id_counter);
  w.u64(m.staleness);
  w.i64(m.last_ingest_ms);
  w.u64(m.commits);
}

}  // namespace

/// Raw access used by the codec: replays records into tables and rebuilds
/// every derived structure afterwards.
struct StoreAccess {
  static void apply(GraphState& s, std::span<const std::uint8_t> payload, std::set<EpisodeId>& seen_episodes) {
    Reader r(payload);
    const auto type = static_cast<storage::RecordType>(r.u8());
    switch (type) {
      case storage::RecordType::Config: {
        GraphConfig c;
        c.name = r.str();
        c.embedding_dim = r.u64();
        c.id_seed = r.u64();
        if (c.embedding_dim == 0) throw Error(ErrorCode::CorruptStore, "config record has zero dimension");
        s = GraphState(c);
        seen_episodes.clear();
        break;
      }
      case storage::RecordType::Episode: {
        Episode e;
        e.id = r.id<EpisodeId>();
        const auto kind = r.u8();
        if (kind > 2) throw Error(ErrorCode::CorruptStore, "unknown episode kind");
        e.kind = static_cast<EpisodeKind>(kind);
        e.content = r.str();
        if (r.u8()) e.actor = r.str();
        e.t_ref = r.ts();
        e.t_ingested = r.ts();
        e.group = r.str();
        const auto id = e.id;
        cow_mut(s.episodes_)[id] = std::make_shared<const Episode>(std::move(e));
        if (seen_episodes.insert(id).second) cow_mut(s.episode_order_).push_back(id);
        break;
      }
      case storage::RecordType::Entity: {
        EntityNode n;
        n.id = r.id<NodeId>();
        n.name = r.str();
        n.summary = r.str();
        n.name_embedding = r.floats();
        if (r.u8()) n.community = r.id<CommunityId>();
        const auto id = n.id;
        cow_mut(s.entities_)[id] = std::make_shared<const EntityNode>(std::move(n));
        break;
      }
      case storage::RecordType::Edge: {
        SemanticEdge e;
        e.id = r.id<EdgeId>();
        e.source = r.id<NodeId>();
        e.target = r.id<NodeId>();
        e.predicate = r.str();
        e.fact = r.str();
        e.fact_embedding = r.floats();
        if (r.u8()) e.fact_group = r.id<FactGroupId>();
        e.t_created = r.ts();
        e.t_expired = r.opt_ts();
        e.t_valid = r.opt_ts();
        e.t_invalid = r.opt_ts();
        const auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) e.episodes.push_back(r.id<EpisodeId>());
        const auto id = e.id;
        cow_mut(s.edges_)[id] = std::make_shared<const SemanticEdge>(std::move(e));
        break;
      }
      case storage::RecordType::EpisodicEdge: {
        EpisodicEdge e;
        e.id = r.id<EdgeId>();
        e.episode = r.id<EpisodeId>();
        e.entity = r.id<NodeId>();
        cow_mut(s.episodic_).edges[e.id] = e;
        break;
      }
      case storage::RecordType::Community: {
        CommunityNode c;
        c.id = r.id<CommunityId>();
        c.name = r.str();
        c.summary = r.str();
        c.name_embedding = r.floats();
        c.dirty = r.u8() != 0;
        const auto n = r.u32();
        for (std::uint32_t i = 0; i < n; ++i) c.members.push_back(r.id<NodeId>());
        const auto id = c.id;
        cow_mut(s.communities_)[id] = std::make_shared<const CommunityNode>(std::move(c));
        break;
      }
      case storage::RecordType::CommunityRemoved:
        cow_mut(s.communities_).erase(r.id<CommunityId>());
        break;
      case storage::RecordType::Meta: {
        GraphMeta m;
        m.id_counter = r.u64();
        m.staleness = r.u64();
        m.last_ingest_ms = r.i64();
        m.commits = r.u64();
        s.meta_ = std::make_shared<const GraphMeta>(m);
        break;
      }
      case storage::RecordType::Commit:
        break;
      default:
        throw Error(ErrorCode::CorruptStore, "unknown record type " + std::to_string(static_cast<int>(type)));
    }
    if (!r.done()) throw Error(ErrorCode::CorruptStore, "record has trailing bytes");
  }

  static void rebuild_derived(GraphState& s) {
    const auto dim = s.config_.embedding_dim;
    GraphState::Adjacency adj;
    std::map<FactGroupId, std::string> groups;
    InvertedIndex<EdgeId> fact_text;
    InvertedIndex<NodeId> name_text, profile_text;
    InvertedIndex<CommunityId> community_text;
    VectorIndex<EdgeId> fact_vec(dim);
    VectorIndex<NodeId> entity_vec(dim);
    VectorIndex<CommunityId> community_vec(dim);

    for (const auto& [id, n] : *s.entities_) {
      name_text.upsert(id, n->name);
      profile_text.upsert(id, n->name + " " + n->summary);
      entity_vec.upsert(id, n->name_embedding);
    }
    for (const auto& [id, e] : *s.edges_) {
      if (!s.entity(e->source) || !s.entity(e->target))
        throw Error(ErrorCode::CorruptStore, "edge " + id.str() + " references a missing entity");
      adj[e->source].push_back(id);
      adj[e->target].push_back(id);
      fact_text.upsert(id, e->fact);
      fact_vec.upsert(id, e->fact_embedding);
      if (e->fact_group) groups.emplace(*e->fact_group, e->fact);
    }
    for (const auto& [id, c] : *s.communities_) {
      community_text.upsert(id, c->name);
      community_vec.upsert(id, c->name_embedding);
    }
    GraphState::EpisodicLinks links;
    links.edges = s.episodic_->edges;
    for (const auto& [id, e] : links.edges) {
      links.by_pair[{e.episode, e.entity}] = id;
      links.episodes_of_entity[e.entity].push_back(e.episode);
      links.entities_of_episode[e.episode].push_back(e.entity);
    }
    for (auto& [k, v] : links.episodes_of_entity) std::sort(v.begin(), v.end());
    for (auto& [k, v] : links.entities_of_episode) std::sort(v.begin(), v.end());

    s.adjacency_ = std::make_shared<const GraphState::Adjacency>(std::move(adj));
    s.fact_groups_ = std::make_shared<const std::map<FactGroupId, std::string>>(std::move(groups));
    s.episodic_ = std::make_shared<const GraphState::EpisodicLinks>(std::move(links));
    s.fact_text_ = std::make_shared<const InvertedIndex<EdgeId>>(std::move(fact_text));
    s.entity_name_text_ = std::make_shared<const InvertedIndex<NodeId>>(std::move(name_text));
    s.entity_profile_text_ = std::make_shared<const InvertedIndex<NodeId>>(std::move(profile_text));
    s.community_name_text_ = std::make_shared<const InvertedIndex<CommunityId>>(std::move(community_text));
    s.fact_vec_ = std::make_shared<const VectorIndex<EdgeId>>(std::move(fact_vec));
    s.entity_vec_ = std::make_shared<const VectorIndex<NodeId>>(std::move(entity_vec));
    s.community_vec_ = std::make_shared<const VectorIndex<CommunityId>>(std::move(community_vec));
  }
};

namespace storage {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

std::vector<std::uint8_t> file_header() {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  Writer(out).u32(kFormatVersion);
  return out;
}

std::vector<std::uint8_t> encode_commit(const GraphState& state, const std::vector<Mutation>* mutations,
                                        bool include_config) {
  std::vector<std::uint8_t> out;
  if (include_config) {
    emit(out, RecordType::Config, [&](Writer& w) {
      w.str(state.config().name);
      w.u64(state.config().embedding_dim);
      w.u64(state.config().id_seed);
    });
  }
  if (!mutations) {
    for (const auto& id : state.episode_order())
      emit(out, RecordType::Episode, [&](Writer& w) { write_episode(w, state.require_episode(id)); });
    for (const auto& [id, n] : state.entities())
      emit(out, RecordType::Entity, [&](Writer& w) { write_entity(w, *n); });
    for (const auto& [id, e] : state.edges()) emit(out, RecordType::Edge, [&](Writer& w) { write_edge(w, *e); });
    for (const auto& [id, e] : state.episodic_edges())
      emit(out, RecordType::EpisodicEdge, [&](Writer& w) { write_episodic(w, e); });
    for (const auto& [id, c] : state.communities())
      emit(out, RecordType::Community, [&](Writer& w) { write_community(w, *c); });
  } else {
    // Final state of each touched object, once, in first-touch order.
    std::set<std::pair<int, Uuid>> written;
    for (const auto& m : *mutations) {
      if (!written.insert({static_cast<int>(m.kind), m.id}).second) continue;
      switch (m.kind) {
        case Mutation::Kind::Episode:
          emit(out, RecordType::Episode, [&](Writer& w) { write_episode(w, state.require_episode(EpisodeId{m.id})); });
          break;
        case Mutation::Kind::Entity:
          emit(out, RecordType::Entity, [&](Writer& w) { write_entity(w, state.require_entity(NodeId{m.id})); });
          break;
        case Mutation::Kind::Edge:
          emit(out, RecordType::Edge, [&](Writer& w) { write_edge(w, state.require_edge(EdgeId{m.id})); });
          break;
        case Mutation::Kind::EpisodicEdge:
          emit(out, RecordType::EpisodicEdge,
               [&](Writer& w) { write_episodic(w, *state.episodic_edge(EdgeId{m.id})); });
          break;
        case Mutation::Kind::Community:
        case Mutation::Kind::CommunityRemoved: {
          const CommunityId cid{m.id};
          if (const auto* c = state.community(cid))
            emit(out, RecordType::Community, [&](Writer& w) { write_community(w, *c); });
          else
            emit(out, RecordType::CommunityRemoved, [&](Writer& w) { w.id(cid); });
          break;
        }
      }
    }
  }
  emit(out, RecordType::Meta, [&](Writer& w) { write_meta(w, state.meta()); });
  emit(out, RecordType::Commit, [](Writer&) {});
  return out;
}

std::shared_ptr<GraphState> read_store(const std::filesystem::path& path, std::uintmax_t* valid_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "cannot read " + path.string());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::CorruptStore, path.string() + " is not a graph store");
  Reader header(std::span<const std::uint8_t>(bytes.data() + 4, 4));
  const auto version = header.u32();
  if (version != kFormatVersion)
    throw Error(ErrorCode::VersionMismatch,
                "store format " + std::to_string(version) + ", expected " + std::to_string(kFormatVersion));

  auto state = std::make_shared<GraphState>(GraphConfig{});
  bool configured = false;
  std::set<EpisodeId> seen;
  std::vector<std::span<const std::uint8_t>> group;
  std::size_t pos = 8, committed_end = 8;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 4) break;
    const std::uint32_t len = Reader(std::span<const std::uint8_t>(bytes.data() + pos, 4)).u32();
    if (bytes.size() - pos - 4 < static_cast<std::size_t>(len) + 4) break;
    std::span<const std::uint8_t> payload(bytes.data() + pos + 4, len);
    const std::uint32_t stored = Reader(std::span<const std::uint8_t>(bytes.data() + pos + 4 + len, 4)).u32();
    if (len == 0 || crc32(payload) != stored)
      throw Error(ErrorCode::CorruptStore, "checksum mismatch at offset " + std::to_string(pos));
    pos += 8 + len;
    group.push_back(payload);
    if (static_cast<RecordType>(payload[0]) == RecordType::Commit) {
      for (const auto& p : group) {
        if (static_cast<RecordType>(p[0]) == RecordType::Config) configured = true;
        else if (!configured) throw Error(ErrorCode::CorruptStore, "records precede the config record");
        StoreAccess::apply(*state, p, seen);
      }
      group.clear();
      committed_end = pos;
    }
  }
  if (!configured) throw Error(ErrorCode::CorruptStore, path.string() + " holds no committed config");
  StoreAccess::rebuild_derived(*state);
  if (valid_bytes) *valid_bytes = committed_end;
  return state;
}

}  // namespace storage

Journal::Journal(const std::filesystem::path& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for append");
}

Journal::~Journal() {
  if (file_) std::fclose(file_);
}

void Journal::append(std::span<const std::uint8_t> bytes) {
  if (std::fwrite(bytes.data(), 1, bytes.size(), file_) != bytes.size() || std::fflush(file_) != 0)
    throw Error(ErrorCode::Io, "write to " + path_.string() + " failed");
  if (::fsync(::fileno(file_)) != 0) throw Error(ErrorCode::Io, "fsync of " + path_.string() + " failed");
}

}  // namespace tkg
