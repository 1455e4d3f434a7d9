#include "sketchret/embedder.hpp"

#include <algorithm>
#include <stdexcept>

namespace sketchret {

void ModelConfig::validate() const {
  if (object_feature_dim < 1 || sketch_feature_dim < 1 || model_dim < 1 || hidden_dim < 1 || embed_dim < 1 ||
      ring_count < 1 || views_per_ring < 1) {
    throw std::invalid_argument("model config: dimensions must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("model config: dropout must lie in [0,1)");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"object_feature_dim", object_feature_dim},
          {"sketch_feature_dim", sketch_feature_dim},
          {"model_dim", model_dim},
          {"hidden_dim", hidden_dim},
          {"embed_dim", embed_dim},
          {"ring_count", ring_count},
          {"views_per_ring", views_per_ring},
          {"dropout", dropout}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.object_feature_dim = j.value("object_feature_dim", c.object_feature_dim);
  c.sketch_feature_dim = j.value("sketch_feature_dim", c.sketch_feature_dim);
  c.model_dim = j.value("model_dim", c.model_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.ring_count = j.value("ring_count", c.ring_count);
  c.views_per_ring = j.value("views_per_ring", c.views_per_ring);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

Model init_model(const ModelConfig& c, Rng& rng) {
  c.validate();
  Model m;
  m.config = c;
  m.object.view_input = nn::init_mlp(c.object_feature_dim, c.hidden_dim, c.model_dim, 0.0, rng);
  m.object.ring_encoder = nn::init_t_encoder(c.model_dim, rng);
  m.object.object_encoders[0] = nn::init_t_encoder(c.model_dim, rng);
  m.object.object_encoders[1] = nn::init_t_encoder(c.model_dim, rng);
  m.object.projection = nn::init_mlp(c.model_dim, c.hidden_dim, c.embed_dim, c.dropout, rng);
  m.object.ring_count = c.ring_count;
  m.object.views_per_ring = c.views_per_ring;
  m.sketch = nn::init_mlp(c.sketch_feature_dim, c.hidden_dim, c.embed_dim, c.dropout, rng);
  return m;
}

Model zero_gradients(const Model& model) {
  Model g = model;
  for_each_param([](const std::string&, auto& x) { x.setZero(); }, g);
  return g;
}

nn::Vector embed_object(const Model& m, const nn::RingFeatures& rings) {
  return nn::object_embed(m.object, rings, false, nullptr);
}

nn::Vector embed_sketch(const Model& m, const nn::Vector& feature) {
  if (feature.size() != m.config.sketch_feature_dim) throw std::invalid_argument("embed_sketch: dimension mismatch");
  return nn::mlp_forward(m.sketch, feature, false, nullptr);
}

nn::RingFeatures ring_features(std::span<const std::vector<float>> views, int ring_count, int views_per_ring) {
  if (views.size() != static_cast<std::size_t>(ring_count) * views_per_ring) {
    throw std::invalid_argument("ring_features: expected " + std::to_string(ring_count * views_per_ring) +
                                " views, got " + std::to_string(views.size()));
  }
  const auto dim = static_cast<Eigen::Index>(views.empty() ? 0 : views.front().size());
  nn::RingFeatures out;
  for (int r = 0; r < ring_count; ++r) {
    nn::Matrix m(views_per_ring, dim);
    for (int v = 0; v < views_per_ring; ++v) {
      const auto& f = views[static_cast<std::size_t>(r) * views_per_ring + v];
      if (static_cast<Eigen::Index>(f.size()) != dim) throw std::invalid_argument("ring_features: ragged views");
      for (Eigen::Index k = 0; k < dim; ++k) m(v, k) = f[static_cast<std::size_t>(k)];
    }
    out.push_back(std::move(m));
  }
  return out;
}

double max_vote(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("max_vote: no scores");
  return *std::max_element(scores.begin(), scores.end());
}

double ensemble_similarity(std::span<const Model> models, const nn::RingFeatures& object,
                           const nn::Vector& sketch_feature) {
  if (models.empty()) throw std::invalid_argument("ensemble_similarity: empty model list");
  std::vector<double> scores;
  scores.reserve(models.size());
  for (const auto& m : models) {
    const nn::Vector a = embed_object(m, object);
    const nn::Vector b = embed_sketch(m, sketch_feature);
    const double denom = a.norm() * b.norm();
    if (!(denom > 0.0)) throw std::invalid_argument("ensemble_similarity: zero embedding");
    scores.push_back(a.dot(b) / denom);
  }
  return max_vote(scores);
}

}  // namespace sketchret
