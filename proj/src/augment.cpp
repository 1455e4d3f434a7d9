#include "sketchret/augment.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace sketchret {

void AugmentParams::validate() const {
  if (rings.empty() || rings.size() != ring_probs.size()) {
    throw std::invalid_argument("augment params: rings and ring_probs differ in length");
  }
  double sum = 0.0;
  for (double pr : ring_probs) {
    if (pr < 0.0) throw std::invalid_argument("augment params: negative ring probability");
    sum += pr;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("augment params: ring_probs must sum to 1");
  if (edge_removal_fraction < 0.0 || edge_removal_fraction > 1.0 || flip_prob < 0.0 || flip_prob > 1.0) {
    throw std::invalid_argument("augment params: fractions must lie in [0,1]");
  }
  if (queries_per_object < 1 || variants_per_query < 1 || rotation_range < 0.0) {
    throw std::invalid_argument("augment params: bad counts or rotation range");
  }
}

std::string TrainingQuery::transform_log() const {
  std::ostringstream os;
  os << "ring=" << ring << ";view=" << view << ";edges=" << (method == EdgeMethod::Canny ? "canny" : "laplacian")
     << ";flip=" << (flipped ? 1 : 0) << ";rotate=" << rotation_deg;
  return os.str();
}

int sample_ring(const AugmentParams& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.rings.size(); ++i) {
    acc += p.ring_probs[i];
    if (u < acc) return p.rings[i];
  }
  return p.rings.back();
}

std::vector<TrainingQuery> generate_training_queries(const RingSet& rings, const std::string& object_id,
                                                     const AugmentParams& p, const SketchParams& sp,
                                                     Rng& rng) {
  p.validate();
  for (int r : p.rings) {
    auto it = rings.rings.find(r);
    if (it == rings.rings.end() || it->second.empty()) {
      throw std::invalid_argument("generate_training_queries: ring " + std::to_string(r) + " missing");
    }
  }
  std::vector<TrainingQuery> out;
  out.reserve(static_cast<std::size_t>(p.queries_per_object) * p.variants_per_query);
  for (int q = 0; q < p.queries_per_object; ++q) {
    const int ring = sample_ring(p, rng);
    const auto& views = rings.rings.at(ring);
    const int view = static_cast<int>(uniform_index(rng, views.size()));
    const EdgeMethod method = uniform_index(rng, 2) == 0 ? EdgeMethod::Canny : EdgeMethod::Laplacian;
    const ViewImage& shaded = views[static_cast<std::size_t>(view)].image;
    const ViewImage edges = method == EdgeMethod::Canny ? canny(shaded, sp) : laplacian_edge(invert(shaded), sp);

    for (int v = 0; v < p.variants_per_query; ++v) {
      TrainingQuery tq;
      tq.object_id = object_id;
      tq.ring = ring;
      tq.view = view;
      tq.method = method;
      tq.flipped = uniform01(rng) < p.flip_prob;
      tq.rotation_deg = uniform_real(rng, -p.rotation_range, p.rotation_range);
      ViewImage img = tq.flipped ? flip_horizontal(edges) : edges;
      if (tq.rotation_deg != 0.0) img = rotate_image(img, tq.rotation_deg, 0);
      img = random_edge_removal(img, p.edge_removal_fraction, rng);
      tq.image = invert(img);
      tq.image.kind = ImageKind::Sketch;
      out.push_back(std::move(tq));
    }
  }
  return out;
}

std::vector<TrainingQuery> generate_training_queries(const RingSet& rings, const AugmentParams& p,
                                                     const SketchParams& sp, Rng& rng) {
  return generate_training_queries(rings, rings.object_id, p, sp, rng);
}

Grouping group_representatives(const std::vector<std::vector<float>>& descriptors,
                               const std::vector<std::size_t>& vertex_counts, int group_count, Rng& rng) {
  const std::size_t n = descriptors.size();
  if (n == 0 || vertex_counts.size() != n) throw std::invalid_argument("group_representatives: size mismatch");
  if (group_count < 1 || static_cast<std::size_t>(group_count) > n) {
    throw std::invalid_argument("group_representatives: group count out of range");
  }
  const std::size_t dim = descriptors.front().size();
  for (const auto& d : descriptors) {
    if (d.size() != dim) throw std::invalid_argument("group_representatives: ragged descriptors");
  }
  auto dist2 = [&](const std::vector<double>& c, const std::vector<float>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += (c[i] - x[i]) * (c[i] - x[i]);
    return s;
  };

  // k-means++ seeding
  std::vector<std::vector<double>> centroids;
  const auto& first = descriptors[uniform_index(rng, n)];
  centroids.emplace_back(first.begin(), first.end());
  while (centroids.size() < static_cast<std::size_t>(group_count)) {
    std::vector<double> d2(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, dist2(c, descriptors[i]));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (pick = 0; pick + 1 < n && u >= d2[pick]; ++pick) u -= d2[pick];
    } else {
      pick = uniform_index(rng, n);
    }
    centroids.emplace_back(descriptors[pick].begin(), descriptors[pick].end());
  }

  Grouping g{std::vector<int>(n, -1), std::vector<std::size_t>(n, 0)};
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = dist2(centroids[0], descriptors[i]);
      for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = dist2(centroids[c], descriptors[i]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (g.label[i] != best) {
        g.label[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      std::vector<double> sum(dim, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (g.label[i] != static_cast<int>(c)) continue;
        for (std::size_t k = 0; k < dim; ++k) sum[k] += descriptors[i][k];
        ++count;
      }
      if (count == 0) continue;  // keep the previous centroid
      for (auto& s : sum) s /= static_cast<double>(count);
      centroids[c] = std::move(sum);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    // Most vertices wins; ties go to the lowest index.
    std::size_t rep = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (g.label[j] == g.label[i] && (rep == n || vertex_counts[j] > vertex_counts[rep])) rep = j;
    }
    g.representative[i] = rep;
  }
  return g;
}

std::string manifest_line(const TrainingQuery& q, const std::string& image_path, std::uint64_t seed) {
  nlohmann::json j;
  j["query_image_path"] = image_path;
  j["object_id"] = q.object_id;
  j["ring"] = q.ring;
  j["transform_log"] = q.transform_log();
  j["seed"] = seed;
  return j.dump();
}

}  // namespace sketchret
