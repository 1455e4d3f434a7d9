#pragma once

#include "sketchret/nn.hpp"

#include "json.hpp"

#include <span>
#include <string>
#include <vector>

namespace sketchret {

struct ModelConfig {
  int object_feature_dim = 16;  // U: per-view descriptor length
  int sketch_feature_dim = 16;  // V
  int model_dim = 64;           // d
  int hidden_dim = 128;
  int embed_dim = 64;  // P
  int ring_count = 3;
  int views_per_ring = 12;
  double dropout = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Object tower (views -> ring encoder -> object encoders -> projection) and sketch head.
struct Model {
  ModelConfig config;
  nn::ObjectEncoderParams object;
  nn::MlpParams sketch;
};

Model init_model(const ModelConfig& config, Rng& rng);

template <class F, class First, class... Rest>
  requires nn::Param<First, Model>
void for_each_param(F&& f, First& a, Rest&... rest) {
  nn::for_each_param(f, "object", a.object, rest.object...);
  nn::for_each_param(f, "sketch", a.sketch, rest.sketch...);
}

Model zero_gradients(const Model& model);

nn::Vector embed_object(const Model& m, const nn::RingFeatures& rings);
nn::Vector embed_sketch(const Model& m, const nn::Vector& feature);

/// Gallery view features (ring-major, views_per_ring each) as encoder input.
nn::RingFeatures ring_features(std::span<const std::vector<float>> views, int ring_count, int views_per_ring);

/// Largest score; the max-voting rule over fold models.
double max_vote(std::span<const double> scores);

/// max over models of cosine(object embedding, sketch embedding), eval mode.
double ensemble_similarity(std::span<const Model> models, const nn::RingFeatures& object,
                           const nn::Vector& sketch_feature);

}  // namespace sketchret
