#include "tkg/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "tkg/text.hpp"

namespace tkg {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (values[hi] - values[lo]) * (rank - static_cast<double>(lo));
}

LatencySummary summarize_latencies(std::vector<double> values) {
  LatencySummary s;
  s.samples = values.size();
  if (values.empty()) return s;
  s.p25 = percentile(values, 25);
  s.p50 = percentile(values, 50);
  s.p75 = percentile(values, 75);
  s.p95 = percentile(values, 95);
  s.iqr = s.p75 - s.p25;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

namespace {

nlohmann::json summary_json(const LatencySummary& s) {
  return {{"samples", s.samples}, {"p25", s.p25}, {"p50", s.p50}, {"p75", s.p75},
          {"p95", s.p95},         {"iqr", s.iqr}, {"mean", s.mean}, {"max", s.max}};
}

}  // namespace

nlohmann::json BenchReport::to_json() const {
  return {{"graph", {{"entities", entities}, {"edges", edges}, {"episodes", episodes}, {"communities", communities}}},
          {"queries", queries},
          {"iterations", iterations},
          {"latency_ms",
           {{"search", summary_json(search)},
            {"rerank", summary_json(rerank)},
            {"construct", summary_json(construct)},
            {"total", summary_json(total)}}},
          {"context_tokens", summary_json(context_tokens)}};
}

std::string BenchReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "graph: %zu entities, %zu edges, %zu episodes, %zu communities\n", entities, edges,
                episodes, communities);
  out += line;
  std::snprintf(line, sizeof line, "%zu queries x %zu iterations\n\n", queries, iterations);
  out += line;
  std::snprintf(line, sizeof line, "%-16s %9s %9s %9s %9s %9s\n", "stage", "p50", "p95", "IQR", "mean", "max");
  out += line;
  auto row = [&](const char* name, const LatencySummary& s) {
    std::snprintf(line, sizeof line, "%-16s %9.3f %9.3f %9.3f %9.3f %9.3f\n", name, s.p50, s.p95, s.iqr, s.mean, s.max);
    out += line;
  };
  row("search (ms)", search);
  row("rerank (ms)", rerank);
  row("construct (ms)", construct);
  row("total (ms)", total);
  row("context tokens", context_tokens);
  return out;
}

BenchReport run_retrieval_bench(const GraphState& g, Embedder& embedder, CrossEncoder* cross_encoder,
                                std::span<const std::string> queries, const RetrievalRequest& base,
                                std::size_t iterations) {
  BenchReport report;
  report.queries = queries.size();
  report.iterations = iterations;
  report.entities = g.entities().size();
  report.edges = g.edges().size();
  report.episodes = g.episodes().size();
  report.communities = g.communities().size();
  std::vector<double> search, rerank, construct, total, tokens;
  auto run = [&](const std::string& q, bool record) {
    RetrievalRequest req = base;
    req.query.text = q;
    const auto r = retrieve(g, req, embedder, cross_encoder);
    if (!record) return;
    search.push_back(r.timings.search_ms);
    rerank.push_back(r.timings.rerank_ms);
    construct.push_back(r.timings.construct_ms);
    total.push_back(r.timings.total_ms);
    tokens.push_back(static_cast<double>(whitespace_token_count(r.context)));
  };
  for (const auto& q : queries) run(q, false);
  for (std::size_t it = 0; it < iterations; ++it)
    for (const auto& q : queries) run(q, true);
  report.search = summarize_latencies(std::move(search));
  report.rerank = summarize_latencies(std::move(rerank));
  report.construct = summarize_latencies(std::move(construct));
  report.total = summarize_latencies(std::move(total));
  report.context_tokens = summarize_latencies(std::move(tokens));
  return report;
}

}  // namespace tkg
