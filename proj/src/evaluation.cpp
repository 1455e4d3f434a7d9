#include "sketchret/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sketchret {

namespace {

void check(std::span<const std::string> ranking, const Relevant& rel) {
  if (ranking.empty()) throw std::invalid_argument("empty ranking");
  if (rel.empty()) throw std::invalid_argument("query has no relevant items");
  std::set<std::string> seen;
  for (const auto& id : ranking) {
    if (!seen.insert(id).second) throw std::invalid_argument("ranking lists " + id + " twice");
  }
}

std::size_t hits_in_top(std::span<const std::string> ranking, const Relevant& rel, std::size_t n) {
  n = std::min(n, ranking.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += rel.count(ranking[i]);
  return hits;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double nearest_neighbor(std::span<const std::string> ranking, const Relevant& rel) {
  check(ranking, rel);
  return rel.count(ranking.front()) ? 1.0 : 0.0;
}

double p_at_k(std::span<const std::string> ranking, const Relevant& rel, int k) {
  check(ranking, rel);
  if (k < 1) throw std::invalid_argument("p_at_k: k must be positive");
  return static_cast<double>(hits_in_top(ranking, rel, static_cast<std::size_t>(k))) / k;
}

double ndcg(std::span<const std::string> ranking, const Relevant& rel) {
  check(ranking, rel);
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (rel.count(ranking[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double ideal = 0.0;
  for (std::size_t i = 0; i < rel.size(); ++i) ideal += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / ideal;
}

double average_precision(std::span<const std::string> ranking, const Relevant& rel, bool divide_by_hits) {
  check(ranking, rel);
  const double m = static_cast<double>(rel.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (!rel.count(ranking[i])) continue;
    ++hits;
    sum += (static_cast<double>(hits) / static_cast<double>(i + 1)) * (1.0 / m);
  }
  if (divide_by_hits) return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
  return sum;
}

double first_tier(std::span<const std::string> ranking, const Relevant& rel) {
  check(ranking, rel);
  return static_cast<double>(hits_in_top(ranking, rel, rel.size())) / static_cast<double>(rel.size());
}

double second_tier(std::span<const std::string> ranking, const Relevant& rel) {
  check(ranking, rel);
  return static_cast<double>(hits_in_top(ranking, rel, 2 * rel.size())) / static_cast<double>(rel.size());
}

double fallout_rate(std::span<const std::string> ranking, const Relevant& rel, std::size_t gallery_size, int cutoff) {
  check(ranking, rel);
  if (cutoff < 1) throw std::invalid_argument("fallout_rate: cutoff must be positive");
  if (gallery_size < rel.size()) throw std::invalid_argument("fallout_rate: gallery smaller than relevant set");
  if (gallery_size == rel.size()) return 0.0;
  const std::size_t n = std::min(static_cast<std::size_t>(cutoff), ranking.size());
  const std::size_t non_relevant = n - hits_in_top(ranking, rel, n);
  return static_cast<double>(non_relevant) / static_cast<double>(gallery_size - rel.size());
}

MetricsReport evaluate_all(std::span<const RankedList> rankings, const GroundTruth& gt, const EvalOptions& opt) {
  if (rankings.empty()) throw std::invalid_argument("evaluate_all: empty query set");
  MetricsReport report;
  for (const auto& list : rankings) {
    const auto it = gt.relevant.find(list.query_id);
    if (it == gt.relevant.end()) throw std::invalid_argument("no ground truth for query " + list.query_id);
    const auto ids = list.ids();
    QueryMetrics q;
    q.query_id = list.query_id;
    q.nn = nearest_neighbor(ids, it->second);
    q.p_at_10 = p_at_k(ids, it->second, opt.p_k);
    q.ndcg = ndcg(ids, it->second);
    q.map = average_precision(ids, it->second, opt.map_divide_by_hits);
    q.ft = first_tier(ids, it->second);
    q.st = second_tier(ids, it->second);
    q.fr = fallout_rate(ids, it->second, gt.gallery_size, opt.fr_cutoff);
    report.per_query.push_back(q);
  }
  auto& m = report.mean;
  for (const auto& q : report.per_query) {
    m.nn += q.nn;
    m.p_at_10 += q.p_at_10;
    m.ndcg += q.ndcg;
    m.map += q.map;
    m.ft += q.ft;
    m.st += q.st;
    m.fr += q.fr;
  }
  const double n = static_cast<double>(report.per_query.size());
  for (double* v : {&m.nn, &m.p_at_10, &m.ndcg, &m.map, &m.ft, &m.st, &m.fr}) *v /= n;
  return report;
}

GroundTruth parse_ground_truth_csv(std::string_view text, std::size_t gallery_size) {
  GroundTruth gt;
  gt.gallery_size = gallery_size;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line == "query_id,object_id")) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size() ||
        line.find(',', comma + 1) != std::string::npos) {
      throw std::invalid_argument("ground truth line " + std::to_string(line_no) + ": expected query_id,object_id");
    }
    gt.relevant[line.substr(0, comma)].insert(line.substr(comma + 1));
  }
  if (gt.relevant.empty()) throw std::invalid_argument("ground truth is empty");
  return gt;
}

GroundTruth load_ground_truth_csv(const std::string& path, std::size_t gallery_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open ground truth " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ground_truth_csv(ss.str(), gallery_size);
}

std::string ground_truth_csv(const GroundTruth& gt) {
  std::string out = "query_id,object_id\n";
  for (const auto& [q, ids] : gt.relevant) {
    for (const auto& id : ids) out += q + ',' + id + '\n';
  }
  return out;
}

std::string leaderboard_csv(const std::vector<std::pair<std::string, MetricsReport>>& runs) {
  std::string out = "Team/Run,NN,P@10,NDCG,mAP,FT,ST,FR\n";
  for (const auto& [name, r] : runs) {
    const auto& m = r.mean;
    out += name + ',' + fmt(m.nn) + ',' + fmt(m.p_at_10) + ',' + fmt(m.ndcg) + ',' + fmt(m.map) + ',' + fmt(m.ft) + ',' +
           fmt(m.st) + ',' + fmt(m.fr) + '\n';
  }
  return out;
}

std::string per_query_csv(const MetricsReport& report) {
  std::string out = "query_id,NN,P@10,NDCG,mAP,FT,ST,FR\n";
  for (const auto& q : report.per_query) {
    out += q.query_id + ',' + fmt(q.nn) + ',' + fmt(q.p_at_10) + ',' + fmt(q.ndcg) + ',' + fmt(q.map) + ',' + fmt(q.ft) +
           ',' + fmt(q.st) + ',' + fmt(q.fr) + '\n';
  }
  return out;
}

std::vector<std::pair<double, double>> pr_curve_11pt(std::span<const RankedList> rankings, const GroundTruth& gt) {
  if (rankings.empty()) throw std::invalid_argument("pr_curve_11pt: empty query set");
  std::vector<double> sums(11, 0.0);
  for (const auto& list : rankings) {
    const auto it = gt.relevant.find(list.query_id);
    if (it == gt.relevant.end()) throw std::invalid_argument("no ground truth for query " + list.query_id);
    const auto& rel = it->second;
    check(list.ids(), rel);
    std::vector<std::pair<double, double>> points;  // (recall, precision) at every rank
    std::size_t hits = 0;
    for (std::size_t i = 0; i < list.ranking.size(); ++i) {
      hits += rel.count(list.ranking[i].object_id);
      points.emplace_back(static_cast<double>(hits) / static_cast<double>(rel.size()),
                          static_cast<double>(hits) / static_cast<double>(i + 1));
    }
    for (int level = 0; level <= 10; ++level) {
      const double r = level / 10.0;
      double best = 0.0;
      for (const auto& [recall, precision] : points) {
        if (recall >= r - 1e-12) best = std::max(best, precision);
      }
      sums[static_cast<std::size_t>(level)] += best;
    }
  }
  std::vector<std::pair<double, double>> curve;
  for (int level = 0; level <= 10; ++level) {
    curve.emplace_back(level / 10.0, sums[static_cast<std::size_t>(level)] / static_cast<double>(rankings.size()));
  }
  return curve;
}

std::string pr_curve_csv(const std::vector<std::pair<double, double>>& curve) {
  std::string out = "recall,precision\n";
  for (const auto& [r, p] : curve) out += fmt(r) + ',' + fmt(p) + '\n';
  return out;
}

}  // namespace sketchret
