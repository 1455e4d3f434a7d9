#pragma once

#include "sketchret/embedder.hpp"
#include "sketchret/optim.hpp"

#include "json.hpp"

#include <span>
#include <string>
#include <vector>

namespace sketchret {

struct TrainConfig {
  AdamWConfig adamw;
  int step_size = 10;  // StepLR
  double gamma = 0.5;
  int epochs = 30;
  int batch_size = 16;  // N links per batch -> 2N embeddings
  int folds = 5;
  std::uint64_t seed = 0;
  double temperature = 0.1;
  bool include_positive_in_denominator = false;
  int threads = 1;  // folds trained concurrently
  ModelConfig model;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// A sketch feature linked to a gallery object. Samples sharing a label are positives of
/// each other (sketch-sketch, sketch-object and object-object).
struct TrainingPair {
  nn::Vector sketch;
  std::size_t object = 0;
  int label = 0;
};

struct TrainingData {
  std::vector<nn::RingFeatures> objects;
  std::vector<TrainingPair> pairs;
};

struct EpochRecord {
  int fold = 0;
  int epoch = 0;  // 0 = before the first update
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct FoldResult {
  Model model;
  std::vector<std::size_t> validation;  // pair indices held out
  std::vector<EpochRecord> log;
};

/// Seeded shuffle of 0..n-1 cut into k nearly equal disjoint folds.
std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, int k, Rng& rng);

/// Mean contrastive loss over one batch of pairs; objects first, sketches second. When
/// `grad` is given the gradients of every parameter are accumulated into it.
double batch_loss(const Model& model, const TrainingData& data, std::span<const std::size_t> batch,
                  const TrainConfig& cfg, bool train_mode, Rng* rng, Model* grad);

/// Eval-mode loss averaged over consecutive chunks of batch_size; NaN when no chunk has two
/// distinct labels.
double evaluate_loss(const Model& model, const TrainingData& data, std::span<const std::size_t> pairs,
                     const TrainConfig& cfg);

std::vector<FoldResult> train_kfold(const TrainingData& data, const TrainConfig& cfg);

std::string training_log_csv(const std::vector<FoldResult>& folds);

}  // namespace sketchret
