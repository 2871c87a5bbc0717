#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tkg/engine.hpp"

namespace tkg {

struct LatencySummary {
  std::size_t samples = 0;
  double p25 = 0, p50 = 0, p75 = 0, p95 = 0;
  double iqr = 0;
  double mean = 0;
  double max = 0;
};

/// Percentiles by linear interpolation between closest ranks.
double percentile(std::vector<double> values, double p);
LatencySummary summarize_latencies(std::vector<double> values);

struct BenchReport {
  std::size_t queries = 0;
  std::size_t iterations = 0;
  std::size_t entities = 0;
  std::size_t edges = 0;
  std::size_t episodes = 0;
  std::size_t communities = 0;
  LatencySummary search, rerank, construct, total;
  LatencySummary context_tokens;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Runs every query `iterations` times (after one untimed warm-up pass)
/// against one snapshot and collects per-stage server-side latencies.
BenchReport run_retrieval_bench(const GraphState& g, Embedder& embedder, CrossEncoder* cross_encoder,
                                std::span<const std::string> queries, const RetrievalRequest& base,
                                std::size_t iterations = 1);

}  // namespace tkg
