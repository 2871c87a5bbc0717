#include "tkg/context.hpp"

namespace tkg {

std::string format_fact_line(const SemanticEdge& edge) {
  const std::string from = edge.t_valid ? format_date_or_datetime(*edge.t_valid) : "unknown";
  const std::string to = edge.t_invalid ? format_date_or_datetime(*edge.t_invalid) : "present";
  return edge.fact + " (Date range: " + from + " - " + to + ")";
}

std::string format_entity_line(const EntityNode& entity) { return entity.name + ": " + entity.summary; }

std::string build_context(std::span<const SemanticEdge> edges, std::span<const EntityNode> entities,
                          std::span<const CommunityNode> communities, const ContextOptions& options) {
  std::string facts, ents;
  for (const auto& e : edges) {
    if (!facts.empty()) facts += '\n';
    facts += format_fact_line(e);
  }
  for (const auto& n : entities) {
    if (!ents.empty()) ents += '\n';
    ents += format_entity_line(n);
  }
  std::string out =
      "FACTS and ENTITIES represent relevant context to the current conversation.\n"
      "These are the most relevant facts and their valid date ranges. If the fact is about an event, the event "
      "takes place during this time.\n"
      "format: FACT (Date range: from - to)\n"
      "<FACTS>\n" +
      facts +
      "\n</FACTS>\n"
      "These are the most relevant entities\n"
      "ENTITY_NAME: entity summary\n"
      "<ENTITIES>\n" +
      ents + "\n</ENTITIES>\n";
  if (options.include_communities && !communities.empty()) {
    out += "These are the most relevant community summaries\n<COMMUNITIES>\n";
    for (std::size_t i = 0; i < communities.size(); ++i) {
      if (i) out += '\n';
      out += communities[i].summary;
    }
    out += "\n</COMMUNITIES>\n";
  }
  return out;
}

}  // namespace tkg
