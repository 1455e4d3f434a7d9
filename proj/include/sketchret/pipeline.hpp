#pragma once

#include "sketchret/augment.hpp"
#include "sketchret/evaluation.hpp"
#include "sketchret/retrieval.hpp"
#include "sketchret/training.hpp"

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace sketchret {

namespace fs = std::filesystem;

/// Bad configuration or command-line input (exit code 1). Everything else that escapes a
/// command is treated as a data error (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RetrievalConfig {
  /// min_l2 | top6_sum_max | embedding | fused. A scorer spec may carry a descriptor
  /// suffix, e.g. "min_l2:hog"; without one the primary descriptor is used.
  std::string scorer = "min_l2";
  std::string fuse_a = "embedding";
  std::string fuse_b = "min_l2:hog";
  double alpha = 0.7;
  bool tta_flip = false;
  int top_k = 10;
};

struct PipelineConfig {
  fs::path mesh_dir;
  fs::path queries_dir;
  fs::path ground_truth;
  fs::path output_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  std::string reorient_axis = "x";
  double reorient_degrees = 0.0;
  RenderConfig render;
  SketchParams sketch;
  PreprocessParams preprocess;
  AugmentParams augment;
  DescriptorParams descriptor;
  TrainConfig train;
  RetrievalConfig retrieval;
  EvalOptions evaluation;
  std::string run_name = "sketchret";

  void validate() const;
  nlohmann::json to_json() const;
  /// Relative paths are resolved against `base_dir`. Throws ConfigError.
  static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base_dir = {});
};

/// Reads a JSON config file; `overrides` are "a.b.c=value" strings applied before parsing
/// (value parsed as JSON when possible, otherwise taken as a string).
PipelineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides = {});
PipelineConfig config_with_overrides(const nlohmann::json& base, const std::vector<std::string>& overrides,
                                     const fs::path& base_dir = {});

/// Runs fn(0..n-1) on up to `threads` workers. Results must be written by index; the first
/// failing index's exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// Output layout below cfg.output_dir:
//   manifest.json, meshes/<id>.obj           ingest
//   renders/<id>/ring<k>/view<j>.png         render
//   sketches/<id>/q<n>.png, sketches/manifest.jsonl   sketchify
//   index_<tag>.skix                         index
//   checkpoints/fold<k>.skck, training_log.csv        train
//   rankings.csv, rankings.json              retrieve
//   leaderboard.csv, per_query.csv, pr_curve.csv, metrics.json   evaluate
nlohmann::json cmd_ingest(const PipelineConfig& cfg);
std::size_t cmd_render(const PipelineConfig& cfg);
std::size_t cmd_sketchify(const PipelineConfig& cfg);
std::vector<fs::path> cmd_index(const PipelineConfig& cfg);
std::vector<FoldResult> cmd_train(const PipelineConfig& cfg);
std::vector<RankedList> cmd_retrieve(const PipelineConfig& cfg);
MetricsReport cmd_evaluate(const PipelineConfig& cfg);

/// Normalized meshes recorded by a previous ingest, in manifest order.
std::vector<Mesh> load_ingested(const PipelineConfig& cfg);
fs::path index_path(const PipelineConfig& cfg, DescriptorTag tag);
std::vector<Model> load_fold_models(const PipelineConfig& cfg);

/// Resolves scorer specs against the indexes and checkpoints on disk; loaded indexes and
/// models are cached so a fused scorer shares them with its parts.
class ScorerFactory {
 public:
  explicit ScorerFactory(PipelineConfig cfg) : cfg_(std::move(cfg)) {}
  std::shared_ptr<const Scorer> make(const std::string& spec);
  std::shared_ptr<const GalleryIndex> index(DescriptorTag tag);

 private:
  PipelineConfig cfg_;
  std::map<DescriptorTag, std::shared_ptr<const GalleryIndex>> indexes_;
  std::vector<Model> models_;
  std::map<std::string, std::shared_ptr<const Scorer>> scorers_;
};

/// Query image -> the preprocessed form used for scoring (crop, resize, dilate).
ViewImage prepare_query(const ViewImage& sketch, const PipelineConfig& cfg);

/// Canny sketch of an arbitrary orbit view with a fraction of its strokes erased, dark on
/// white.
ViewImage held_out_query(const Mesh& mesh, double elevation_deg, double azimuth_deg, const RenderConfig& render,
                         const SketchParams& sp, double removal_fraction, Rng& rng);

/// Writes `count` synthetic creatures to dir/meshes, one held-out query sketch per object
/// (equator, uniformly random azimuth) to dir/queries, dir/gt.csv and a
/// dir/config.json that points at them.
nlohmann::json cmd_synth(const fs::path& dir, int count, std::uint64_t seed);

std::vector<RankedList> parse_rankings_csv(std::string_view text);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, std::string_view text);

}  // namespace sketchret
