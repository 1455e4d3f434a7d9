#pragma once

#include "sketchret/retrieval.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace sketchret {

struct GroundTruth {
  std::map<std::string, std::set<std::string>> relevant;  // query id -> relevant object ids
  std::size_t gallery_size = 0;
};

using Relevant = std::set<std::string>;

// Single-query metrics over a best-first id list with binary relevance. Every one of them
// throws std::invalid_argument on an empty ranking, duplicate ids or an empty relevant set.
double nearest_neighbor(std::span<const std::string> ranking, const Relevant& rel);
/// |relevant in top k| / k; shorter lists still divide by k.
double p_at_k(std::span<const std::string> ranking, const Relevant& rel, int k = 10);
/// DCG over the whole list divided by the DCG of m relevant items placed first.
double ndcg(std::span<const std::string> ranking, const Relevant& rel);
/// Sum over relevant hits of precision * (1/m). `divide_by_hits` additionally divides by the
/// number of relevant items retrieved.
double average_precision(std::span<const std::string> ranking, const Relevant& rel, bool divide_by_hits = false);
double first_tier(std::span<const std::string> ranking, const Relevant& rel);
double second_tier(std::span<const std::string> ranking, const Relevant& rel);
/// Non-relevant items among the first `cutoff` (or the whole list if shorter) divided by
/// gallery_size - m; 0 when every gallery item is relevant.
double fallout_rate(std::span<const std::string> ranking, const Relevant& rel, std::size_t gallery_size,
                    int cutoff = 10);

struct EvalOptions {
  int p_k = 10;
  int fr_cutoff = 10;
  bool map_divide_by_hits = false;
};

struct QueryMetrics {
  std::string query_id;
  double nn = 0, p_at_10 = 0, ndcg = 0, map = 0, ft = 0, st = 0, fr = 0;
};

struct MetricsReport {
  QueryMetrics mean;  // macro-average, query_id empty
  std::vector<QueryMetrics> per_query;
};

/// Throws on an empty query set or a query without ground truth.
MetricsReport evaluate_all(std::span<const RankedList> rankings, const GroundTruth& gt, const EvalOptions& opt = {});

/// `query_id,object_id` rows; a header line of exactly that text is skipped.
GroundTruth parse_ground_truth_csv(std::string_view text, std::size_t gallery_size);
GroundTruth load_ground_truth_csv(const std::string& path, std::size_t gallery_size);
std::string ground_truth_csv(const GroundTruth& gt);

std::string leaderboard_csv(const std::vector<std::pair<std::string, MetricsReport>>& runs);
std::string per_query_csv(const MetricsReport& report);

/// Interpolated precision at recall 0, 0.1, ..., 1 averaged over queries.
std::vector<std::pair<double, double>> pr_curve_11pt(std::span<const RankedList> rankings, const GroundTruth& gt);
std::string pr_curve_csv(const std::vector<std::pair<double, double>>& curve);

}  // namespace sketchret
