#include "sketchret/retrieval.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sketchret {

namespace {

// Zero-norm vectors cannot be compared by angle; they rank as the worst possible match.
double safe_cosine(const FeatureVector& a, const FeatureVector& b) {
  if (a.is_zero() || b.is_zero()) return -1.0;
  return cosine_sim(a, b);
}

bool better(double a, double b, ScoreOrder order) { return order == ScoreOrder::HigherIsBetter ? a > b : a < b; }

}  // namespace

double score_min_l2(const FeatureVector& query, std::span<const FeatureVector> views) {
  if (views.empty()) throw std::invalid_argument("score_min_l2: empty view list");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : views) best = std::min(best, l2_distance(query, v));
  return best;
}

double score_top6_sum_max(const FeatureVector& query, std::span<const std::vector<FeatureVector>> groups, int top) {
  if (groups.empty()) throw std::invalid_argument("score_top6_sum_max: no view groups");
  if (top < 1) throw std::invalid_argument("score_top6_sum_max: top must be positive");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("score_top6_sum_max: empty view group");
    std::vector<double> sims;
    sims.reserve(g.size());
    for (const auto& v : g) sims.push_back(safe_cosine(query, v));
    const auto n = std::min<std::size_t>(sims.size(), static_cast<std::size_t>(top));
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(n), sims.end(), std::greater<>());
    best = std::max(best, std::accumulate(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(n), 0.0));
  }
  return best;
}

double fuse_scores(double a, double b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("fuse_scores: alpha must lie in [0, 1]");
  return alpha * a + (1.0 - alpha) * b;
}

std::vector<double> normalize_scores(std::span<const double> scores, ScoreOrder order) {
  std::vector<double> out(scores.size(), 1.0);
  if (scores.empty()) return out;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double t = (scores[i] - *lo) / range;
    out[i] = order == ScoreOrder::HigherIsBetter ? t : 1.0 - t;
  }
  return out;
}

DescriptorScorer::DescriptorScorer(std::shared_ptr<const GalleryIndex> index, Aggregation aggregation)
    : index_(std::move(index)), aggregation_(aggregation) {
  if (!index_) throw std::invalid_argument("DescriptorScorer: null index");
  if (index_->entries.empty()) throw std::invalid_argument("DescriptorScorer: empty gallery");
  ids_ = index_->object_ids();
}

ScoreOrder DescriptorScorer::order() const {
  return aggregation_ == Aggregation::MinL2 ? ScoreOrder::LowerIsBetter : ScoreOrder::HigherIsBetter;
}

std::vector<double> DescriptorScorer::score(const ViewImage& query) const {
  return score(compute_descriptor(query, index_->descriptor));
}

std::vector<double> DescriptorScorer::score(const FeatureVector& query) const {
  if (query.tag != index_->descriptor.tag) {
    throw std::invalid_argument("descriptor mismatch: query is " + std::string(tag_name(query.tag)) + ", index is " +
                                std::string(tag_name(index_->descriptor.tag)));
  }
  std::vector<double> out;
  out.reserve(index_->entries.size());
  for (const auto& e : index_->entries) {
    if (aggregation_ == Aggregation::MinL2) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& g : e.groups) best = std::min(best, score_min_l2(query, g));
      out.push_back(best);
    } else {
      out.push_back(score_top6_sum_max(query, e.groups));
    }
  }
  return out;
}

EmbeddingScorer::EmbeddingScorer(std::shared_ptr<const GalleryIndex> index, std::vector<Model> models)
    : index_(std::move(index)), models_(std::move(models)) {
  if (!index_) throw std::invalid_argument("EmbeddingScorer: null index");
  if (models_.empty()) throw std::invalid_argument("EmbeddingScorer: empty model list");
  ids_ = index_->object_ids();
  for (const auto& m : models_) {
    std::vector<nn::Vector> embeddings;
    for (const auto& e : index_->entries) {
      std::vector<std::vector<float>> views;
      for (const auto& g : e.groups) {
        for (const auto& f : g) views.push_back(f.values);
      }
      const int views_per_ring = e.groups.empty() ? 0 : static_cast<int>(e.groups.front().size());
      nn::Vector z = embed_object(m, ring_features(views, static_cast<int>(e.groups.size()), views_per_ring));
      const double norm = z.norm();
      if (!(norm > 0.0)) throw std::runtime_error("EmbeddingScorer: zero object embedding for " + e.object_id);
      embeddings.push_back(z / norm);
    }
    object_embeddings_.push_back(std::move(embeddings));
  }
}

std::vector<double> EmbeddingScorer::score(const ViewImage& query) const {
  return score(compute_descriptor(query, index_->descriptor));
}

std::vector<double> EmbeddingScorer::score(const FeatureVector& query) const {
  if (query.tag != index_->descriptor.tag) throw std::invalid_argument("descriptor mismatch between query and index");
  nn::Vector x(static_cast<Eigen::Index>(query.size()));
  for (std::size_t i = 0; i < query.size(); ++i) x(static_cast<Eigen::Index>(i)) = query.values[i];
  std::vector<double> out(ids_.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t m = 0; m < models_.size(); ++m) {
    const nn::Vector s = embed_sketch(models_[m], x);
    const double norm = s.norm();
    for (std::size_t o = 0; o < ids_.size(); ++o) {
      const double sim = norm > 0.0 ? std::clamp(object_embeddings_[m][o].dot(s) / norm, -1.0, 1.0) : -1.0;
      out[o] = std::max(out[o], sim);
    }
  }
  return out;
}

FusedScorer::FusedScorer(std::shared_ptr<const Scorer> a, std::shared_ptr<const Scorer> b, double alpha)
    : a_(std::move(a)), b_(std::move(b)), alpha_(alpha) {
  if (!a_ || !b_) throw std::invalid_argument("FusedScorer: null scorer");
  if (a_->object_ids() != b_->object_ids()) throw std::invalid_argument("FusedScorer: scorers cover different galleries");
  fuse_scores(0.0, 0.0, alpha_);  // validates alpha
}

std::vector<double> FusedScorer::score(const ViewImage& query) const {
  const auto ra = a_->score(query);
  const auto rb = b_->score(query);
  const auto na = normalize_scores(ra, a_->order());
  const auto nb = normalize_scores(rb, b_->order());
  std::vector<double> out(na.size());
  for (std::size_t i = 0; i < na.size(); ++i) out[i] = fuse_scores(na[i], nb[i], alpha_);
  return out;
}

std::vector<std::string> RankedList::ids() const {
  std::vector<std::string> out;
  out.reserve(ranking.size());
  for (const auto& r : ranking) out.push_back(r.object_id);
  return out;
}

RankedList rank_scores(const std::string& query_id, const std::vector<std::string>& ids, std::span<const double> scores,
                       ScoreOrder order) {
  if (ids.size() != scores.size()) throw std::invalid_argument("rank_scores: id/score count mismatch");
  RankedList list{query_id, order, {}};
  list.ranking.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) list.ranking.push_back({ids[i], scores[i]});
  std::sort(list.ranking.begin(), list.ranking.end(), [order](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return better(a.score, b.score, order);
    return a.object_id < b.object_id;
  });
  return list;
}

RankedList rank(const std::string& query_id, const ViewImage& query, const Scorer& scorer, bool tta_flip) {
  auto scores = scorer.score(query);
  if (tta_flip) {
    const auto flipped = scorer.score(flip_horizontal(query));
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (better(flipped[i], scores[i], scorer.order())) scores[i] = flipped[i];
    }
  }
  return rank_scores(query_id, scorer.object_ids(), scores, scorer.order());
}

std::string rankings_csv(std::span<const RankedList> lists) {
  std::ostringstream os;
  os.precision(10);
  os << "query_id,rank,object_id,score\n";
  for (const auto& l : lists) {
    for (std::size_t i = 0; i < l.ranking.size(); ++i) {
      os << l.query_id << ',' << i + 1 << ',' << l.ranking[i].object_id << ',' << l.ranking[i].score << '\n';
    }
  }
  return os.str();
}

nlohmann::json rankings_json(std::span<const RankedList> lists) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : lists) {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& r : l.ranking) ranking.push_back({{"object_id", r.object_id}, {"score", r.score}});
    out.push_back({{"query_id", l.query_id},
                   {"order", l.order == ScoreOrder::HigherIsBetter ? "similarity" : "distance"},
                   {"ranking", ranking}});
  }
  return out;
}

}  // namespace sketchret
