#pragma once

#include "sketchret/renderer.hpp"
#include "sketchret/sketchify.hpp"

#include <string>
#include <vector>

namespace sketchret {

struct AugmentParams {
  std::vector<int> rings{2, 3, 4};
  std::vector<double> ring_probs{0.2, 0.6, 0.2};
  double edge_removal_fraction = 0.2;
  double flip_prob = 0.5;
  double rotation_range = 15.0;  // degrees, symmetric
  int queries_per_object = 3;
  /// Independent flip / rotation / edge-removal draws per sampled query.
  int variants_per_query = 8;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct TrainingQuery {
  ViewImage image;  // dark strokes on white, same size as the rendered view
  std::string object_id;
  int ring = 0;
  int view = 0;
  EdgeMethod method = EdgeMethod::Canny;
  bool flipped = false;
  double rotation_deg = 0.0;

  std::string transform_log() const;
};

/// Ring drawn from `p.ring_probs`.
int sample_ring(const AugmentParams& p, Rng& rng);

/// For each of `queries_per_object` draws: ring by probability, view uniformly, edge method
/// uniformly; then per variant a random horizontal flip, rotation in +-rotation_range and
/// random_edge_removal. Queries are labelled with `object_id` (the rings may belong to the
/// object's cluster representative).
std::vector<TrainingQuery> generate_training_queries(const RingSet& rings, const std::string& object_id,
                                                     const AugmentParams& p, const SketchParams& sp,
                                                     Rng& rng);
std::vector<TrainingQuery> generate_training_queries(const RingSet& rings, const AugmentParams& p,
                                                     const SketchParams& sp, Rng& rng);

/// Groups objects by k-means over their descriptors and picks, per group, the member with
/// the most vertices. Returns the representative index of every object.
struct Grouping {
  std::vector<int> label;
  std::vector<std::size_t> representative;
};
Grouping group_representatives(const std::vector<std::vector<float>>& descriptors,
                               const std::vector<std::size_t>& vertex_counts, int group_count, Rng& rng);

/// One JSON-lines manifest record.
std::string manifest_line(const TrainingQuery& q, const std::string& image_path, std::uint64_t seed);

}  // namespace sketchret
