#include "tkg/pipeline.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>

#include "tkg/text.hpp"

namespace tkg {

EdgeView make_edge_view(const GraphState& g, const SemanticEdge& edge) {
  EdgeView v;
  v.id = edge.id;
  v.source = edge.source;
  v.target = edge.target;
  if (const auto* s = g.entity(edge.source)) v.source_name = s->name;
  if (const auto* t = g.entity(edge.target)) v.target_name = t->name;
  v.predicate = edge.predicate;
  v.fact = edge.fact;
  v.t_valid = edge.t_valid;
  v.t_invalid = edge.t_invalid;
  return v;
}

namespace {

std::string fold(std::string_view s) { return to_lower_utf8(trim(s)); }

/// Applies extractor bounds; invalid or reversed bounds leave both unset.
void apply_bounds(SemanticEdge& edge, const TemporalBounds& bounds, std::vector<std::string>* warnings) {
  std::optional<Timestamp> valid, invalid;
  bool bad = false;
  if (bounds.valid_at) {
    valid = parse_iso8601(*bounds.valid_at);
    bad |= !valid;
  }
  if (bounds.invalid_at) {
    invalid = parse_iso8601(*bounds.invalid_at);
    bad |= !invalid;
  }
  if (bad) {
    if (warnings) warnings->push_back("invalid timestamp for fact '" + edge.fact + "'; temporal fields left unset");
    return;
  }
  if (valid && invalid && *invalid < *valid) {
    if (warnings) warnings->push_back("valid_at after invalid_at for fact '" + edge.fact + "'; temporal fields left unset");
    return;
  }
  edge.t_valid = valid;
  edge.t_invalid = invalid;
}

}  // namespace

EpisodeContext IngestPipeline::episode_context(const GraphState& g, const Episode& current) const {
  EpisodeContext ctx;
  ctx.current = current;
  const auto& order = g.episode_order();
  std::vector<EpisodeId> ids;
  for (auto it = order.rbegin(); it != order.rend() && ids.size() < config_.context_window; ++it)
    if (*it != current.id) ids.push_back(*it);
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) ctx.previous.push_back(g.require_episode(*it));
  return ctx;
}

IngestReport IngestPipeline::ingest(Episode episode) {
  IngestReport report;
  if (!episode.id.is_nil() && graph_->snapshot()->episode(episode.id)) {
    report.episode = episode.id;
    throw IngestError(ErrorCode::AlreadyIngested, "episode " + episode.id.str() + " was already ingested", report);
  }
  try {
    graph_->write([&](Transaction& tx) {
      report = IngestReport{};
      const auto id = tx.add_episode(std::move(episode));
      report.episode = id;
      const auto ctx = episode_context(tx.state(), tx.state().require_episode(id));
      auto entities = extract_and_resolve_entities(tx, ctx, report);
      for (const auto& e : entities) tx.link_episode(id, e.node);
      extract_and_resolve_facts(tx, ctx, entities, report);
      if (communities_) {
        for (const auto& e : entities)
          if (e.created) communities_->extend_with_node(tx, e.node);
      }
    });
  } catch (const IngestError&) {
    throw;
  } catch (const Error& e) {
    auto code = e.code() == ErrorCode::DuplicateId ? ErrorCode::AlreadyIngested : e.code();
    throw IngestError(code, e.message(), report);
  } catch (const std::exception& e) {
    throw IngestError(ErrorCode::ExtractorFailure, e.what(), report);
  }
  return report;
}

std::vector<ResolvedEntity> IngestPipeline::extract_and_resolve_entities(Transaction& tx, const EpisodeContext& ctx,
                                                                         IngestReport& report) {
  auto first = extractor_->extract_entities(ctx, {});
  auto missed = extractor_->extract_entities(ctx, first);
  first.insert(first.end(), std::make_move_iterator(missed.begin()), std::make_move_iterator(missed.end()));

  std::vector<ExtractedEntity> extracted;
  std::set<std::string> seen;
  std::optional<std::string> speaker;
  if (ctx.current.actor && !trim(*ctx.current.actor).empty()) {
    speaker = trim(*ctx.current.actor);
    std::string summary;
    for (const auto& e : first)
      if (fold(e.name) == fold(*speaker)) summary = e.summary;
    extracted.push_back({*speaker, summary});
    seen.insert(fold(*speaker));
  }
  for (auto& e : first) {
    if (trim(e.name).empty()) {
      report.warnings.push_back("extractor returned an entity with an empty name");
      continue;
    }
    if (!seen.insert(fold(e.name)).second) continue;
    e.name = trim(e.name);
    extracted.push_back(std::move(e));
  }

  std::vector<std::string> names;
  for (const auto& e : extracted) names.push_back(e.name);
  auto embeddings = embedder_->embed_batch(names);
  if (embeddings.size() != names.size()) throw Error(ErrorCode::ExtractorFailure, "embedder returned a short batch");

  std::vector<ResolvedEntity> out;
  for (std::size_t i = 0; i < extracted.size(); ++i) {
    const auto& e = extracted[i];
    const auto& g = tx.state();
    std::vector<EntityCandidate> candidates;
    std::set<NodeId> picked;
    auto add = [&](const NodeId& id) {
      if (!picked.insert(id).second) return;
      const auto& n = g.require_entity(id);
      candidates.push_back({id, n.name, n.summary});
    };
    for (const auto& [id, _] : g.entity_vector_index().top_k(embeddings[i], config_.entity_candidates)) add(id);
    for (const auto& [id, _] : g.entity_profile_text_index().search(e.name, config_.entity_candidates)) add(id);

    std::optional<NodeId> match;
    std::string merged_name;
    if (!candidates.empty()) {
      auto res = extractor_->resolve_entity(ctx, candidates, e);
      if (res.duplicate) {
        if (res.id && picked.count(*res.id)) {
          match = res.id;
          merged_name = res.merged_name && !trim(*res.merged_name).empty() ? trim(*res.merged_name)
                                                                           : g.require_entity(*res.id).name;
        } else {
          report.warnings.push_back("entity resolution for '" + e.name + "' named an unknown candidate");
        }
      }
    }
    // The speaker node must keep the actor's name.
    if (match && speaker && i == 0 && fold(merged_name) != fold(*speaker)) match.reset();

    if (match) {
      EntityNode node = g.require_entity(*match);
      if (node.name != merged_name) {
        node.name = merged_name;
        node.name_embedding = embedder_->embed(merged_name);
      }
      if (!e.summary.empty() && node.summary != e.summary) {
        if (node.summary.empty()) {
          node.summary = e.summary;
        } else {
          const std::string parts[] = {node.summary, e.summary};
          node.summary = extractor_->summarize(parts);
        }
      }
      tx.upsert_entity(std::move(node));
      ++report.entities_merged;
      out.push_back({e, *match, false});
    } else {
      EntityNode node;
      node.name = e.name;
      node.summary = e.summary;
      node.name_embedding = std::move(embeddings[i]);
      const auto id = tx.upsert_entity(std::move(node));
      ++report.entities_added;
      out.push_back({e, id, true});
    }
    if (std::find(report.entities.begin(), report.entities.end(), out.back().node) == report.entities.end())
      report.entities.push_back(out.back().node);
  }
  return out;
}

std::vector<EdgeId> IngestPipeline::extract_and_resolve_facts(Transaction& tx, const EpisodeContext& ctx,
                                                              std::span<const ResolvedEntity> entities,
                                                              IngestReport& report) {
  std::vector<ExtractedEntity> extracted;
  std::map<std::string, NodeId> by_name;
  for (const auto& e : entities) {
    extracted.push_back(e.extracted);
    by_name.emplace(fold(e.extracted.name), e.node);
  }
  auto proposals = extractor_->extract_facts(ctx, extracted);

  struct Proposal {
    NodeId source, target;
    std::string predicate, fact;
  };
  // Group by fact text; a text spanning more than two entities becomes a
  // fact group with one edge per pair.
  std::vector<std::string> texts;
  std::map<std::string, std::vector<NodeId>> nodes_of;
  std::map<std::string, std::string> predicate_of;
  for (const auto& p : proposals) {
    auto s = by_name.find(fold(p.source));
    auto t = by_name.find(fold(p.target));
    if (s == by_name.end() || t == by_name.end()) {
      report.warnings.push_back("fact '" + p.fact + "' references an entity outside the episode; skipped");
      continue;
    }
    if (s->second == t->second) {
      report.warnings.push_back("fact '" + p.fact + "' links an entity to itself; skipped");
      continue;
    }
    if (trim(p.fact).empty() || trim(p.predicate).empty()) {
      report.warnings.push_back("fact without text or predicate; skipped");
      continue;
    }
    auto [it, inserted] = nodes_of.try_emplace(p.fact);
    if (inserted) {
      texts.push_back(p.fact);
      predicate_of.emplace(p.fact, p.predicate);
    }
    for (const auto& n : {s->second, t->second})
      if (std::find(it->second.begin(), it->second.end(), n) == it->second.end()) it->second.push_back(n);
  }

  std::vector<Proposal> lowered;
  std::map<std::string, FactGroupId> groups;
  for (const auto& text : texts) {
    const auto& nodes = nodes_of[text];
    if (nodes.size() > 2) groups.emplace(text, tx.new_id<FactGroupId>());
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = a + 1; b < nodes.size(); ++b) lowered.push_back({nodes[a], nodes[b], predicate_of[text], text});
  }
  // Only pairs the extractor actually related are kept for plain facts.
  if (!lowered.empty()) {
    std::set<std::tuple<std::string, NodeId, NodeId>> proposed;
    for (const auto& p : proposals) {
      auto s = by_name.find(fold(p.source));
      auto t = by_name.find(fold(p.target));
      if (s == by_name.end() || t == by_name.end()) continue;
      proposed.emplace(p.fact, s->second, t->second);
      proposed.emplace(p.fact, t->second, s->second);
    }
    std::erase_if(lowered, [&](const Proposal& p) {
      return !groups.count(p.fact) && !proposed.count({p.fact, p.source, p.target});
    });
  }
  if (lowered.empty()) return {};

  auto fact_vectors = embedder_->embed_batch(texts);
  if (fact_vectors.size() != texts.size()) throw Error(ErrorCode::ExtractorFailure, "embedder returned a short batch");
  std::map<std::string, std::size_t> text_index;
  for (std::size_t i = 0; i < texts.size(); ++i) text_index.emplace(texts[i], i);

  // Temporal annotation only depends on the fact text; fan out per text.
  std::vector<TemporalBounds> bounds(texts.size());
  const auto reference = ctx.current.t_ref;
  if (config_.parallel_calls && texts.size() > 1) {
    std::vector<std::future<TemporalBounds>> pending;
    for (const auto& t : texts)
      pending.push_back(std::async(std::launch::async,
                                   [this, &ctx, reference, &t] { return extractor_->extract_temporal(ctx, reference, t); }));
    for (std::size_t i = 0; i < pending.size(); ++i) bounds[i] = pending[i].get();
  } else {
    for (std::size_t i = 0; i < texts.size(); ++i) bounds[i] = extractor_->extract_temporal(ctx, reference, texts[i]);
  }

  std::vector<EdgeId> out;
  const auto episode = ctx.current.id;
  for (const auto& p : lowered) {
    const auto ti = text_index.at(p.fact);
    SemanticEdge edge;
    edge.source = p.source;
    edge.target = p.target;
    edge.predicate = p.predicate;
    edge.fact = p.fact;
    edge.fact_embedding = fact_vectors[ti];
    if (auto g = groups.find(p.fact); g != groups.end()) edge.fact_group = g->second;
    edge.episodes = {episode};

    const auto& g = tx.state();
    std::vector<EdgeView> existing;
    for (const auto* e : g.edges_between(p.source, p.target)) existing.push_back(make_edge_view(g, *e));
    if (!existing.empty()) {
      auto res = extractor_->resolve_fact(existing, make_edge_view(g, edge));
      if (res.duplicate && res.id) {
        const auto* dup = g.edge(*res.id);
        const bool on_pair = std::any_of(existing.begin(), existing.end(), [&](const EdgeView& v) { return v.id == *res.id; });
        if (dup && on_pair) {
          SemanticEdge merged = *dup;
          if (std::find(merged.episodes.begin(), merged.episodes.end(), episode) == merged.episodes.end())
            merged.episodes.push_back(episode);
          tx.upsert_edge(std::move(merged));
          ++report.edges_merged;
          report.edges.push_back(*res.id);
          out.push_back(*res.id);
          continue;
        }
        report.warnings.push_back("fact resolution for '" + p.fact + "' named an edge outside the pair");
      }
    }

    apply_bounds(edge, bounds[ti], &report.warnings);
    edge.t_created = tx.now();
    const auto id = tx.upsert_edge(std::move(edge));
    ++report.edges_added;
    report.edges.push_back(id);
    out.push_back(id);
    for (const auto& inv : invalidate_contradicted(tx, tx.state().require_edge(id), &report.warnings)) {
      report.invalidated.push_back(inv);
      ++report.edges_invalidated;
    }
  }
  return out;
}

SemanticEdge IngestPipeline::annotate_temporal(SemanticEdge edge, const EpisodeContext& ctx,
                                               std::vector<std::string>* warnings) {
  apply_bounds(edge, extractor_->extract_temporal(ctx, ctx.current.t_ref, edge.fact), warnings);
  return edge;
}

std::vector<EdgeId> IngestPipeline::invalidate_contradicted(Transaction& tx, const SemanticEdge& new_edge,
                                                            std::vector<std::string>* warnings) {
  const auto& g = tx.state();
  std::vector<std::pair<double, EdgeId>> scored;
  std::set<EdgeId> considered;
  for (const auto& endpoint : {new_edge.source, new_edge.target}) {
    for (const auto& eid : g.incident_edges(endpoint)) {
      if (eid == new_edge.id || !considered.insert(eid).second) continue;
      const auto& e = g.require_edge(eid);
      if (e.t_expired) continue;  // already retired on T'
      scored.emplace_back(cosine(e.fact_embedding, new_edge.fact_embedding), eid);
    }
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > config_.contradiction_candidates) scored.resize(config_.contradiction_candidates);
  if (scored.empty()) return {};

  std::vector<EdgeView> related;
  std::set<EdgeId> allowed;
  for (const auto& [_, id] : scored) {
    related.push_back(make_edge_view(g, g.require_edge(id)));
    allowed.insert(id);
  }
  const auto contradicted = extractor_->detect_contradictions(make_edge_view(g, new_edge), related);

  const Timestamp new_start = new_edge.t_valid ? *new_edge.t_valid : new_edge.t_created;
  const auto lo = [](const std::optional<Timestamp>& t) { return t ? t->ms : std::numeric_limits<std::int64_t>::min(); };
  const auto hi = [](const std::optional<Timestamp>& t) { return t ? t->ms : std::numeric_limits<std::int64_t>::max(); };
  std::vector<EdgeId> out;
  std::set<EdgeId> done;
  for (const auto& id : contradicted) {
    if (id == new_edge.id || !done.insert(id).second) continue;
    if (!allowed.count(id)) {
      if (warnings) warnings->push_back("contradiction names edge " + id.str() + " outside the candidate set");
      continue;
    }
    const auto& old = tx.state().require_edge(id);
    const bool overlaps = lo(old.t_valid) < hi(new_edge.t_invalid) && lo(new_edge.t_valid) < hi(old.t_invalid);
    if (!overlaps) continue;
    // An edge that starts after the new one is not superseded by it.
    if (old.t_valid && *old.t_valid > new_start) continue;
    if (old.t_invalid && *old.t_invalid <= new_start) continue;
    SemanticEdge updated = old;
    updated.t_invalid = new_start;
    updated.t_expired = tx.now();
    tx.upsert_edge(std::move(updated));
    out.push_back(id);
  }
  return out;
}

}  // namespace tkg
