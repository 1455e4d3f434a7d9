#include "sketchret/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sketchret {

std::vector<std::vector<int>> positives_from_labels(const std::vector<int>& labels) {
  std::vector<std::vector<int>> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (k != i && labels[k] == labels[i]) out[i].push_back(static_cast<int>(k));
    }
  }
  return out;
}

LossResult nt_xent_loss(const ContrastiveBatch& batch) {
  const auto& z = batch.embeddings;
  const Eigen::Index n = z.rows();
  if (!(batch.temperature > 0.0)) throw std::invalid_argument("nt_xent_loss: temperature must be positive");
  if (static_cast<Eigen::Index>(batch.positives.size()) != n) {
    throw std::invalid_argument("nt_xent_loss: one positive set per embedding required");
  }

  std::vector<std::vector<bool>> is_pos(n, std::vector<bool>(n, false));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j : batch.positives[i]) {
      if (j < 0 || j >= n || j == i) throw std::invalid_argument("nt_xent_loss: bad positive index");
      is_pos[i][j] = true;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (is_pos[i][j] != is_pos[j][i]) throw std::invalid_argument("nt_xent_loss: positive sets not symmetric");
    }
  }

  // Rows are divided by max(|z|, eps); a ReLU head with dropout can emit an exact zero.
  const nn::Vector norms = z.rowwise().norm();
  const nn::Vector scale = norms.cwiseMax(kNormEps);
  const nn::Matrix unit = scale.cwiseInverse().asDiagonal() * z;
  const nn::Matrix sim = unit * unit.transpose();
  const double inv_tau = 1.0 / batch.temperature;

  std::size_t pairs = 0;
  for (const auto& p : batch.positives) pairs += p.size();
  if (pairs == 0) throw std::invalid_argument("nt_xent_loss: batch has no positive pairs");
  const double inv_pairs = 1.0 / static_cast<double>(pairs);

  // dsim(i, k): derivative of the mean loss w.r.t. sim(z_i, z_k) as used in row i.
  nn::Matrix dsim = nn::Matrix::Zero(n, n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pos = batch.positives[i];
    if (pos.empty()) continue;
    double top = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i || (!batch.include_positive_in_denominator && is_pos[i][k])) continue;
      top = std::max(top, sim(i, k) * inv_tau);
      any = true;
    }
    if (!any) throw std::invalid_argument("nt_xent_loss: anchor " + std::to_string(i) + " has no negatives");
    double denom = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i || (!batch.include_positive_in_denominator && is_pos[i][k])) continue;
      denom += std::exp(sim(i, k) * inv_tau - top);
    }
    const double log_denom = top + std::log(denom);
    const double weight = static_cast<double>(pos.size()) * inv_pairs;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i || (!batch.include_positive_in_denominator && is_pos[i][k])) continue;
      dsim(i, k) += weight * inv_tau * std::exp(sim(i, k) * inv_tau - log_denom);
    }
    for (int j : pos) {
      total += log_denom - sim(i, j) * inv_tau;
      dsim(i, j) -= inv_pairs * inv_tau;
    }
  }

  const nn::Matrix dunit = (dsim + dsim.transpose()) * unit;
  LossResult result;
  result.loss = total * inv_pairs;
  result.pair_count = pairs;
  result.grad.resize(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms(i) < kNormEps) {
      result.grad.row(i) = dunit.row(i) / kNormEps;
      continue;
    }
    const double radial = dunit.row(i).dot(unit.row(i));
    result.grad.row(i) = (dunit.row(i) - radial * unit.row(i)) / norms(i);
  }
  return result;
}

}  // namespace sketchret
