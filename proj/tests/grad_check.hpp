#pragma once

#include "sketchret/contrastive.hpp"
#include "sketchret/training.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace grad_check {

using namespace sketchret;

/// |a - b| / max(|a|, |b|) over whole gradient vectors; 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Random labels in [0, classes) guaranteed to contain at least one repeated label, so some
/// anchors have more than one positive and every anchor has a negative.
inline std::vector<int> random_labels(Rng& rng, int count, int classes) {
  std::vector<int> labels(static_cast<std::size_t>(count));
  for (;;) {
    for (auto& l : labels) l = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(classes)));
    bool repeated = false;
    bool varied = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        repeated |= labels[i] == labels[j];
        varied |= labels[i] != labels[j];
      }
    }
    if (repeated && varied) return labels;
  }
}

struct Result {
  double rel_error = 0.0;
  std::size_t parameters = 0;
  std::size_t max_positives = 0;  // largest P_i in the batch (loss checks only)
};

/// Central differences of nt_xent_loss against its analytic gradient on one random batch
/// of 2N embeddings of dimension P.
inline Result nt_xent_check(Rng& rng, int n, int p, double temperature, bool include_positive) {
  ContrastiveBatch b;
  b.embeddings = nn::Matrix(2 * n, p);
  for (Eigen::Index i = 0; i < b.embeddings.size(); ++i) b.embeddings.data()[i] = standard_normal(rng);
  b.positives = positives_from_labels(random_labels(rng, 2 * n, std::max(2, n)));
  b.temperature = temperature;
  b.include_positive_in_denominator = include_positive;
  const LossResult analytic = nt_xent_loss(b);

  const double h = 1e-6;
  std::vector<double> num;
  std::vector<double> ana;
  for (Eigen::Index i = 0; i < b.embeddings.size(); ++i) {
    ContrastiveBatch plus = b;
    ContrastiveBatch minus = b;
    plus.embeddings.data()[i] += h;
    minus.embeddings.data()[i] -= h;
    num.push_back((nt_xent_loss(plus).loss - nt_xent_loss(minus).loss) / (2 * h));
    ana.push_back(analytic.grad.data()[i]);
  }
  std::size_t most = 0;
  for (const auto& pi : b.positives) most = std::max(most, pi.size());
  return {relative_error(ana, num), num.size(), most};
}

/// Small model (model_dim d) with every weight and bias drawn at random, plus a toy
/// training set, so a gradient check exercises all parameters.
struct Instance {
  Model model;
  TrainingData data;
  TrainConfig cfg;
  std::vector<std::size_t> batch;
};

inline Instance random_instance(Rng& rng, int d, int batch_size = 4) {
  Instance in;
  ModelConfig& mc = in.cfg.model;
  mc.object_feature_dim = 6;
  mc.sketch_feature_dim = 5;
  mc.model_dim = d;
  mc.hidden_dim = 12;
  mc.embed_dim = 7;
  mc.ring_count = 3;
  mc.views_per_ring = 12;
  mc.dropout = 0.1;
  in.cfg.temperature = 0.5;
  Rng init(derive_seed(rng(), "init"));
  in.model = init_model(mc, init);
  // non-trivial biases and layer-norm parameters
  for_each_param(
      [&](const std::string&, auto& x) {
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += 0.3 * standard_normal(rng);
      },
      in.model);

  const int objects = 3;
  for (int o = 0; o < objects; ++o) {
    nn::RingFeatures rings;
    for (int r = 0; r < mc.ring_count; ++r) {
      nn::Matrix views(mc.views_per_ring, mc.object_feature_dim);
      for (Eigen::Index i = 0; i < views.size(); ++i) views.data()[i] = uniform01(rng);
      rings.push_back(views);
    }
    in.data.objects.push_back(rings);
  }
  const std::vector<int> labels = random_labels(rng, batch_size, objects);
  for (int b = 0; b < batch_size; ++b) {
    TrainingPair pair;
    pair.sketch = nn::Vector(mc.sketch_feature_dim);
    for (Eigen::Index i = 0; i < pair.sketch.size(); ++i) pair.sketch[i] = uniform01(rng);
    pair.object = static_cast<std::size_t>(labels[static_cast<std::size_t>(b)]);
    pair.label = labels[static_cast<std::size_t>(b)];
    in.data.pairs.push_back(pair);
    in.batch.push_back(static_cast<std::size_t>(b));
  }
  return in;
}

/// Central differences through input MLP, ring encoder, both object encoders, projection,
/// sketch head and loss, compared with the backpropagated gradient of batch_loss.
inline Result model_check(Instance& in) {
  Model grad = zero_gradients(in.model);
  batch_loss(in.model, in.data, in.batch, in.cfg, false, nullptr, &grad);

  std::vector<double> ana;
  std::vector<double> num;
  const double h = 1e-6;
  for_each_param(
      [&](const std::string&, auto& x, auto& g) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          const double keep = x.data()[i];
          x.data()[i] = keep + h;
          const double up = batch_loss(in.model, in.data, in.batch, in.cfg, false, nullptr, nullptr);
          x.data()[i] = keep - h;
          const double down = batch_loss(in.model, in.data, in.batch, in.cfg, false, nullptr, nullptr);
          x.data()[i] = keep;
          num.push_back((up - down) / (2 * h));
          ana.push_back(g.data()[i]);
        }
      },
      in.model, grad);
  return {relative_error(ana, num), num.size()};
}

}  // namespace grad_check
