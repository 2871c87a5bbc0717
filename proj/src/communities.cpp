#include "tkg/communities.hpp"

#include <algorithm>
#include <unordered_map>

#include "tkg/text.hpp"

namespace tkg {

std::map<CommunityId, std::vector<NodeId>> CommunityAssignment::groups() const {
  std::map<CommunityId, std::vector<NodeId>> out;
  for (const auto& [node, c] : membership) out[c].push_back(node);  // membership is ordered, so lists are sorted
  return out;
}

std::size_t CommunityAssignment::community_count() const { return groups().size(); }

CommunityId community_id_for_label(const NodeId& label) {
  return CommunityId{derive_uuid(label.value, "community")};
}

namespace {

/// Plurality label among `votes`, ties to the smallest label.
std::uint32_t plurality(std::vector<std::uint32_t>& votes) {
  std::sort(votes.begin(), votes.end());
  std::uint32_t best = votes.front();
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < votes.size();) {
    std::size_t j = i;
    while (j < votes.size() && votes[j] == votes[i]) ++j;
    if (j - i > best_count) {
      best_count = j - i;
      best = votes[i];
    }
    i = j;
  }
  return best;
}

}  // namespace

CommunityAssignment detect_communities(const GraphState& g, std::size_t max_iterations, PropagationStats* stats) {
  CommunityAssignment out;
  out.staleness = 0;
  PropagationStats local;
  const auto& entities = g.entities();
  std::vector<NodeId> nodes;
  nodes.reserve(entities.size());
  for (const auto& [id, _] : entities) nodes.push_back(id);
  if (nodes.empty()) {
    local.converged = true;
    if (stats) *stats = local;
    return out;
  }
  auto index_of = [&](const NodeId& id) {
    return static_cast<std::uint32_t>(std::lower_bound(nodes.begin(), nodes.end(), id) - nodes.begin());
  };
  std::vector<std::vector<std::uint32_t>> adj(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& nb : g.neighbors(nodes[i])) adj[i].push_back(index_of(nb));

  // Labels are node indices; node order is id order, so the smallest label
  // is the smallest id.
  std::vector<std::uint32_t> label(nodes.size()), next(nodes.size()), before(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) label[i] = static_cast<std::uint32_t>(i);
  before = label;
  bool self_vote = false;
  std::vector<std::uint32_t> votes;
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (adj[i].empty()) {
        next[i] = label[i];
        continue;
      }
      votes.clear();
      for (auto nb : adj[i]) votes.push_back(label[nb]);
      if (self_vote) votes.push_back(label[i]);
      next[i] = plurality(votes);
    }
    local.iterations = iter + 1;
    if (next == label) {
      local.converged = true;
      break;
    }
    // Synchronous updates can oscillate with period two (bipartite parts);
    // from then on each node's own label also votes.
    if (!self_vote && iter > 0 && next == before) {
      self_vote = true;
      local.cycle_broken = true;
    }
    before = label;
    label.swap(next);
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    out.membership.emplace(nodes[i], community_id_for_label(nodes[label[i]]));
  if (stats) *stats = local;
  return out;
}

CommunityAssignment current_assignment(const GraphState& g) {
  CommunityAssignment out;
  for (const auto& [id, n] : g.entities())
    if (n->community) out.membership.emplace(id, *n->community);
  out.staleness = g.meta().staleness;
  return out;
}

CommunityId CommunityManager::extend_with_node(Transaction& tx, const NodeId& node) {
  const auto& g = tx.state();
  const auto& entity = g.require_entity(node);
  std::map<CommunityId, std::size_t> counts;
  for (const auto& nb : g.neighbors(node)) {
    const auto* n = g.entity(nb);
    if (n && n->community && nb != node) ++counts[*n->community];
  }
  std::optional<CommunityId> target;
  std::size_t best = 0;
  for (const auto& [c, k] : counts) {
    if (k > best) {
      best = k;
      target = c;
    }
  }

  // Leave a previous community first.
  if (entity.community && (!target || *entity.community != *target)) {
    if (const auto* old = g.community(*entity.community)) {
      CommunityNode updated = *old;
      std::erase(updated.members, node);
      if (updated.members.empty()) {
        EntityNode detached = entity;
        detached.community.reset();
        tx.upsert_entity(std::move(detached));
        tx.remove_community(updated.id);
      } else {
        updated.dirty = true;
        tx.upsert_community(std::move(updated));
      }
    }
  }

  const auto& current = tx.state().require_entity(node);
  CommunityNode community;
  if (target) {
    community = tx.state().require_community(*target);
    community.members.push_back(node);
    community.dirty = true;
  } else {
    community.id = community_id_for_label(node);
    if (const auto* clash = tx.state().community(community.id)) {
      community = *clash;
      community.members.push_back(node);
    } else {
      community.name = current.name;
      community.summary = current.summary;
      community.name_embedding = current.name_embedding;
      community.members = {node};
    }
    community.dirty = true;
  }
  const auto id = tx.upsert_community(std::move(community));
  if (current.community != id) {
    EntityNode updated = current;
    updated.community = id;
    tx.upsert_entity(std::move(updated));
  }
  tx.set_staleness(tx.state().meta().staleness + 1);
  return id;
}

CommunityNode CommunityManager::refresh_summaries(const GraphState& g, const CommunityNode& community, bool* ok) {
  if (ok) *ok = true;
  try {
    std::vector<std::string> level;
    for (const auto& m : community.members) {
      const auto& n = g.require_entity(m);
      level.push_back(n.summary.empty() ? n.name : n.summary);
    }
    const std::size_t chunk = std::max<std::size_t>(config_.summary_chunk, 2);
    do {
      std::vector<std::string> partial;
      for (std::size_t i = 0; i < level.size(); i += chunk) {
        const auto end = std::min(level.size(), i + chunk);
        partial.push_back(
            summarizer_->summarize(std::span<const std::string>(level.data() + i, end - i)));
      }
      level = std::move(partial);
    } while (level.size() > 1);
    CommunityNode out = community;
    out.summary = level.empty() ? std::string() : level.front();
    out.name = summarizer_->community_name(out.summary);
    if (trim(out.name).empty()) throw Error(ErrorCode::ExtractorFailure, "empty community name");
    out.name_embedding = embedder_->embed(out.name);
    out.dirty = false;
    return out;
  } catch (const std::exception&) {
    if (ok) *ok = false;
    return community;
  }
}

std::size_t CommunityManager::refresh_dirty(Graph& graph) {
  auto snap = graph.snapshot();
  std::vector<CommunityNode> refreshed;
  for (const auto& [id, c] : snap->communities()) {
    if (!c->dirty) continue;
    bool ok = false;
    auto updated = refresh_summaries(*snap, *c, &ok);
    if (ok) refreshed.push_back(std::move(updated));
  }
  if (refreshed.empty()) return 0;
  return graph.write([&](Transaction& tx) {
    std::size_t n = 0;
    for (auto& c : refreshed) {
      const auto* live = tx.state().community(c.id);
      // Skip communities that changed while the summaries were computed.
      if (!live || live->members != c.members) continue;
      tx.upsert_community(std::move(c));
      ++n;
    }
    return n;
  });
}

namespace {

struct PlannedCommunity {
  CommunityNode node;
  bool summarized = false;
};

}  // namespace

std::size_t CommunityManager::full_refresh(Graph& graph) {
  auto snap = graph.snapshot();

  auto plan = [&](const GraphState& g, const CommunityAssignment& assignment, bool summarize) {
    std::vector<PlannedCommunity> out;
    for (auto& [id, members] : assignment.groups()) {
      PlannedCommunity p;
      p.node.id = id;
      p.node.members = members;
      const auto* existing = g.community(id);
      if (existing && existing->members == members && !existing->dirty) {
        p.node = *existing;
        p.summarized = true;
      } else {
        // Seed from the smallest member so the node is usable even if the
        // summarizer fails.
        const auto& first = g.require_entity(members.front());
        p.node.name = first.name;
        p.node.summary = first.summary;
        p.node.name_embedding = first.name_embedding;
        p.node.dirty = true;
        if (summarize) {
          bool ok = false;
          auto s = refresh_summaries(g, p.node, &ok);
          if (ok) {
            p.node = std::move(s);
            p.summarized = true;
          }
        }
      }
      out.push_back(std::move(p));
    }
    return out;
  };

  auto assignment = detect_communities(*snap, config_.max_iterations);
  auto planned = plan(*snap, assignment, true);
  const auto commits = snap->meta().commits;

  return graph.write([&](Transaction& tx) {
    if (tx.state().meta().commits != commits) {
      // The graph moved on; recompute membership on the live state and
      // reuse whatever summaries still match.
      std::map<CommunityId, PlannedCommunity> reuse;
      for (auto& p : planned) reuse.emplace(p.node.id, std::move(p));
      assignment = detect_communities(tx.state(), config_.max_iterations);
      planned = plan(tx.state(), assignment, false);
      for (auto& p : planned) {
        auto it = reuse.find(p.node.id);
        if (it != reuse.end() && it->second.node.members == p.node.members) p = std::move(it->second);
      }
    }
    for (auto& p : planned) tx.upsert_community(std::move(p.node));
    for (const auto& [node, c] : assignment.membership) {
      const auto& n = tx.state().require_entity(node);
      if (n.community == c) continue;
      EntityNode updated = n;
      updated.community = c;
      tx.upsert_entity(std::move(updated));
    }
    std::vector<CommunityId> stale;
    const auto groups = assignment.groups();
    for (const auto& [id, _] : tx.state().communities())
      if (!groups.count(id)) stale.push_back(id);
    for (const auto& id : stale) tx.remove_community(id);
    tx.set_staleness(0);
    return groups.size();
  });
}

bool CommunityManager::maybe_full_refresh(Graph& graph) {
  if (graph.snapshot()->meta().staleness < config_.staleness_threshold) return false;
  full_refresh(graph);
  return true;
}

}  // namespace tkg
