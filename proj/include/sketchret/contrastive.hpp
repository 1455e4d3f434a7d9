#pragma once

#include "sketchret/nn.hpp"

#include <vector>

namespace sketchret {

/// 2N embeddings (rows) with their positive index sets. Positive sets must be symmetric and
/// exclude the anchor itself.
struct ContrastiveBatch {
  nn::Matrix embeddings;
  std::vector<std::vector<int>> positives;
  double temperature = 0.1;
  /// false: the denominator sums over k != i, k not in P_i (positives excluded, loss can go
  /// negative). true: standard NT-Xent denominator over every k != i.
  bool include_positive_in_denominator = false;
};

struct LossResult {
  double loss = 0.0;
  nn::Matrix grad;  // dL / d embeddings
  std::size_t pair_count = 0;
};

inline constexpr double kNormEps = 1e-12;

/// Mean over ordered positive pairs (i, j) of
///   -log( exp(sim(z_i, z_j) / tau) / sum_k exp(sim(z_i, z_k) / tau) )
/// with cosine similarity, plus analytic gradients for every embedding. Embeddings are scaled
/// by 1 / max(|z|, kNormEps), so a zero row has similarity 0 to everything.
LossResult nt_xent_loss(const ContrastiveBatch& batch);

/// P_i = { k != i : labels[k] == labels[i] }.
std::vector<std::vector<int>> positives_from_labels(const std::vector<int>& labels);

}  // namespace sketchret
