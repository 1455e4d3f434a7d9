#include "sketchret/training.hpp"

#include "sketchret/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sketchret {

void TrainConfig::validate() const {
  if (!(adamw.lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("train config: gamma must lie in [0,1]");
  if (folds < 2) throw std::invalid_argument("train config: need at least 2 folds");
  if (step_size < 1 || epochs < 0 || batch_size < 2) throw std::invalid_argument("train config: bad schedule");
  if (!(temperature > 0.0)) throw std::invalid_argument("train config: temperature must be positive");
  model.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", adamw.lr},
          {"weight_decay", adamw.weight_decay},
          {"beta1", adamw.beta1},
          {"beta2", adamw.beta2},
          {"eps", adamw.eps},
          {"step_size", step_size},
          {"gamma", gamma},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"folds", folds},
          {"seed", seed},
          {"temperature", temperature},
          {"include_positive_in_denominator", include_positive_in_denominator},
          {"threads", threads},
          {"model", model.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.adamw.lr = j.value("lr", c.adamw.lr);
  c.adamw.weight_decay = j.value("weight_decay", c.adamw.weight_decay);
  c.adamw.beta1 = j.value("beta1", c.adamw.beta1);
  c.adamw.beta2 = j.value("beta2", c.adamw.beta2);
  c.adamw.eps = j.value("eps", c.adamw.eps);
  c.step_size = j.value("step_size", c.step_size);
  c.gamma = j.value("gamma", c.gamma);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.folds = j.value("folds", c.folds);
  c.seed = j.value("seed", c.seed);
  c.temperature = j.value("temperature", c.temperature);
  c.include_positive_in_denominator = j.value("include_positive_in_denominator", c.include_positive_in_denominator);
  c.threads = j.value("threads", c.threads);
  if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
  return c;
}

std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, int k, Rng& rng) {
  if (k < 2 || n < static_cast<std::size_t>(k)) throw std::invalid_argument("kfold_partition: too few samples");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) folds[i * k / n].push_back(order[i]);
  return folds;
}

double batch_loss(const Model& model, const TrainingData& data, std::span<const std::size_t> batch,
                  const TrainConfig& cfg, bool train_mode, Rng* rng, Model* grad) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const int p = model.config.embed_dim;
  ContrastiveBatch cb;
  cb.temperature = cfg.temperature;
  cb.include_positive_in_denominator = cfg.include_positive_in_denominator;
  cb.embeddings.resize(2 * n, p);
  std::vector<int> labels(static_cast<std::size_t>(2 * n));
  std::vector<nn::ObjectCache> object_caches(batch.size());
  std::vector<nn::MlpCache> sketch_caches(batch.size());

  for (Eigen::Index b = 0; b < n; ++b) {
    const TrainingPair& pair = data.pairs.at(batch[static_cast<std::size_t>(b)]);
    cb.embeddings.row(b) = nn::object_embed(model.object, data.objects.at(pair.object), train_mode, rng,
                                            &object_caches[static_cast<std::size_t>(b)])
                               .transpose();
    cb.embeddings.row(n + b) =
        nn::mlp_forward(model.sketch, nn::Matrix(pair.sketch.transpose()), train_mode, rng,
                        &sketch_caches[static_cast<std::size_t>(b)]);
    labels[static_cast<std::size_t>(b)] = pair.label;
    labels[static_cast<std::size_t>(n + b)] = pair.label;
  }
  cb.positives = positives_from_labels(labels);
  const LossResult r = nt_xent_loss(cb);

  if (grad != nullptr) {
    for (Eigen::Index b = 0; b < n; ++b) {
      nn::object_embed_backward(model.object, object_caches[static_cast<std::size_t>(b)],
                                r.grad.row(b).transpose(), grad->object);
      nn::mlp_backward(model.sketch, sketch_caches[static_cast<std::size_t>(b)], r.grad.row(n + b), grad->sketch);
    }
  }
  return r.loss;
}

namespace {

bool has_two_labels(const TrainingData& data, std::span<const std::size_t> batch) {
  for (std::size_t i = 1; i < batch.size(); ++i) {
    if (data.pairs[batch[i]].label != data.pairs[batch[0]].label) return true;
  }
  return false;
}

FoldResult train_fold(const TrainingData& data, const TrainConfig& cfg, int fold,
                      const std::vector<std::vector<std::size_t>>& folds) {
  FoldResult result;
  result.validation = folds[static_cast<std::size_t>(fold)];
  std::vector<std::size_t> train;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (static_cast<int>(f) != fold) train.insert(train.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(train.begin(), train.end());

  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(fold) + 1));
  result.model = init_model(cfg.model, rng);
  AdamState state(result.model);

  result.log.push_back({fold, 0, step_lr(cfg.adamw.lr, cfg.step_size, cfg.gamma, 0),
                        evaluate_loss(result.model, data, train, cfg),
                        evaluate_loss(result.model, data, result.validation, cfg)});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = step_lr(cfg.adamw.lr, cfg.step_size, cfg.gamma, epoch);
    shuffle(train.begin(), train.end(), rng);
    double sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(train.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::span<const std::size_t> batch(train.data() + start, end - start);
      // a batch needs at least one negative per anchor
      if (batch.size() < 2 || !has_two_labels(data, batch)) continue;
      Model grad = zero_gradients(result.model);
      sum += batch_loss(result.model, data, batch, cfg, true, &rng, &grad);
      ++batches;
      adamw_step(result.model, grad, state, cfg.adamw, lr);
    }
    result.log.push_back({fold, epoch + 1, lr,
                          batches > 0 ? sum / batches : std::numeric_limits<double>::quiet_NaN(),
                          evaluate_loss(result.model, data, result.validation, cfg)});
  }
  return result;
}

}  // namespace

double evaluate_loss(const Model& model, const TrainingData& data, std::span<const std::size_t> pairs,
                     const TrainConfig& cfg) {
  double sum = 0.0;
  int chunks = 0;
  for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(pairs.size(), start + static_cast<std::size_t>(cfg.batch_size));
    auto chunk = pairs.subspan(start, end - start);
    if (chunk.size() < 2 || !has_two_labels(data, chunk)) continue;
    sum += batch_loss(model, data, chunk, cfg, false, nullptr, nullptr);
    ++chunks;
  }
  return chunks > 0 ? sum / chunks : std::numeric_limits<double>::quiet_NaN();
}

std::vector<FoldResult> train_kfold(const TrainingData& data, const TrainConfig& cfg) {
  cfg.validate();
  std::set<int> labels;
  for (const auto& p : data.pairs) {
    if (p.object >= data.objects.size()) throw std::invalid_argument("train_kfold: pair references unknown object");
    labels.insert(p.label);
  }
  if (data.pairs.size() < static_cast<std::size_t>(2 * cfg.folds) || labels.size() < static_cast<std::size_t>(cfg.folds)) {
    throw std::invalid_argument("train_kfold: too few samples for " + std::to_string(cfg.folds) + " folds");
  }
  Rng split_rng(derive_seed(cfg.seed, "folds"));
  const auto folds = kfold_partition(data.pairs.size(), cfg.folds, split_rng);

  std::vector<FoldResult> results(static_cast<std::size_t>(cfg.folds));
  const int threads = std::max(1, std::min(cfg.threads, cfg.folds));
  if (threads == 1) {
    for (int f = 0; f < cfg.folds; ++f) results[static_cast<std::size_t>(f)] = train_fold(data, cfg, f, folds);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.folds));
    std::vector<std::jthread> workers;
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (int f = t; f < cfg.folds; f += threads) {
          try {
            results[static_cast<std::size_t>(f)] = train_fold(data, cfg, f, folds);
          } catch (...) {
            errors[static_cast<std::size_t>(f)] = std::current_exception();
          }
        }
      });
    }
    workers.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return results;
}

std::string training_log_csv(const std::vector<FoldResult>& folds) {
  std::ostringstream os;
  os.precision(9);
  os << "epoch,fold,lr,train_loss,val_loss\n";
  for (const auto& f : folds) {
    for (const auto& r : f.log) os << r.epoch << ',' << r.fold << ',' << r.lr << ',' << r.train_loss << ',' << r.val_loss << '\n';
  }
  return os.str();
}

}  // namespace sketchret
