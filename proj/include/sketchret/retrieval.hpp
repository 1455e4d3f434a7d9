#pragma once

#include "sketchret/descriptors.hpp"
#include "sketchret/embedder.hpp"
#include "sketchret/renderer.hpp"
#include "sketchret/sketchify.hpp"

#include "json.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sketchret {

struct GalleryEntry {
  std::string object_id;
  std::vector<std::vector<FeatureVector>> groups;  // one group per ring or camera setup
};

struct GalleryIndex {
  DescriptorParams descriptor;
  std::vector<int> group_ids;  // ring indices or setup numbers, shared by all entries
  std::vector<GalleryEntry> entries;
  nlohmann::json build_info = nlohmann::json::object();

  /// Unique ids, one group per group id, identical group sizes and descriptor dims.
  void validate() const;
  std::vector<std::string> object_ids() const;
  std::size_t find(const std::string& object_id) const;  // throws std::out_of_range
};

/// Sketchified, preprocessed gallery view. A view without edges (seen edge-on, or shaded
/// too close to the background) becomes a blank canvas, whose descriptor is all zeros.
ViewImage gallery_view_image(const ViewImage& rendered, const SketchParams& sp, const PreprocessParams& pp);

/// Sketchifies and describes every rendered view of one object.
GalleryEntry index_entry(const RingSet& rings, const SketchParams& sp, const PreprocessParams& pp,
                         const DescriptorParams& dp);

// Index file: "SKIX", u32 version, u32 tag, u32 hog cell/block/bins, u32 dim,
// u32 group count + i32 group ids, u32 views per group, str build_info JSON, u64 entry count,
// then per entry: str object_id and every view vector as float32.
std::vector<std::uint8_t> encode_index(const GalleryIndex& index);
GalleryIndex decode_index(std::span<const std::uint8_t> bytes);
void save_index(const GalleryIndex& index, const std::string& path);
GalleryIndex load_index(const std::string& path);

/// min over views of the L2 distance (lower is better).
double score_min_l2(const FeatureVector& query, std::span<const FeatureVector> views);

/// Per group: sum of the `top` largest cosine similarities (all of them when the group is
/// smaller); the result is the largest group score.
double score_top6_sum_max(const FeatureVector& query, std::span<const std::vector<FeatureVector>> groups,
                          int top = 6);

/// alpha a + (1 - alpha) b; alpha must lie in [0, 1].
double fuse_scores(double a, double b, double alpha);

enum class ScoreOrder { HigherIsBetter, LowerIsBetter };

/// Maps scores onto [0, 1] with 1 = best: min-max for similarities, 1 - min-max for
/// distances. A constant score list maps to all ones.
std::vector<double> normalize_scores(std::span<const double> scores, ScoreOrder order);

/// Scores every gallery object for one preprocessed query image.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScoreOrder order() const = 0;
  virtual const std::vector<std::string>& object_ids() const = 0;
  virtual std::vector<double> score(const ViewImage& query) const = 0;
};

enum class Aggregation { MinL2, Top6SumMax };

class DescriptorScorer : public Scorer {
 public:
  DescriptorScorer(std::shared_ptr<const GalleryIndex> index, Aggregation aggregation);

  ScoreOrder order() const override;
  const std::vector<std::string>& object_ids() const override { return ids_; }
  std::vector<double> score(const ViewImage& query) const override;
  /// Throws std::invalid_argument when the query tag differs from the index tag.
  std::vector<double> score(const FeatureVector& query) const;

 private:
  std::shared_ptr<const GalleryIndex> index_;
  Aggregation aggregation_;
  std::vector<std::string> ids_;
};

/// Max-vote over fold models of cosine(object embedding, sketch embedding). Object
/// embeddings are computed once at construction.
class EmbeddingScorer : public Scorer {
 public:
  EmbeddingScorer(std::shared_ptr<const GalleryIndex> index, std::vector<Model> models);

  ScoreOrder order() const override { return ScoreOrder::HigherIsBetter; }
  const std::vector<std::string>& object_ids() const override { return ids_; }
  std::vector<double> score(const ViewImage& query) const override;
  std::vector<double> score(const FeatureVector& query) const;

 private:
  std::shared_ptr<const GalleryIndex> index_;
  std::vector<Model> models_;
  std::vector<std::string> ids_;
  std::vector<std::vector<nn::Vector>> object_embeddings_;  // [model][object], unit length
};

/// alpha * normalized(a) + (1 - alpha) * normalized(b); both scorers must list the same ids.
class FusedScorer : public Scorer {
 public:
  FusedScorer(std::shared_ptr<const Scorer> a, std::shared_ptr<const Scorer> b, double alpha);

  ScoreOrder order() const override { return ScoreOrder::HigherIsBetter; }
  const std::vector<std::string>& object_ids() const override { return a_->object_ids(); }
  std::vector<double> score(const ViewImage& query) const override;

 private:
  std::shared_ptr<const Scorer> a_;
  std::shared_ptr<const Scorer> b_;
  double alpha_;
};

struct RankedEntry {
  std::string object_id;
  double score = 0.0;
};

/// Best first. For LowerIsBetter lists `score` is a distance and increases down the list.
struct RankedList {
  std::string query_id;
  ScoreOrder order = ScoreOrder::HigherIsBetter;
  std::vector<RankedEntry> ranking;

  std::vector<std::string> ids() const;
};

/// Sorts best first; ties go to the lexicographically smaller object id.
RankedList rank_scores(const std::string& query_id, const std::vector<std::string>& ids,
                       std::span<const double> scores, ScoreOrder order);

/// With tta_flip the mirrored query is scored as well and the better score kept per object.
RankedList rank(const std::string& query_id, const ViewImage& query, const Scorer& scorer, bool tta_flip);

std::string rankings_csv(std::span<const RankedList> lists);
nlohmann::json rankings_json(std::span<const RankedList> lists);

}  // namespace sketchret
