#include "sketchret/pipeline.hpp"
#include "sketchret/service.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>

using namespace sketchret;

int main(int argc, char** argv) {
  CLI::App app{"sketchret: sketch-based 3D object retrieval"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int threads = 0;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string synth_dir = "synthetic";
  int synth_count = 20;
  std::uint64_t synth_seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON pipeline config")->required();
    sub->add_option("--set", overrides, "override a config value, e.g. --set retrieval.scorer=fused");
    sub->add_option("-j,--threads", threads, "worker threads (overrides the config)");
  };

  auto* ingest = app.add_subcommand("ingest", "parse, reorient and normalize meshes; write manifest.json");
  auto* render = app.add_subcommand("render", "render ring views to PNG");
  auto* sketchify = app.add_subcommand("sketchify", "sample augmented training sketches");
  auto* index = app.add_subcommand("index", "build gallery descriptor indexes");
  auto* train = app.add_subcommand("train", "k-fold training of the embedding model");
  auto* retrieve = app.add_subcommand("retrieve", "rank the gallery for every query sketch");
  auto* evaluate = app.add_subcommand("evaluate", "score rankings against ground truth");
  auto* serve_cmd = app.add_subcommand("serve", "serve the HTTP query API");
  for (auto* sub : {ingest, render, sketchify, index, train, retrieve, evaluate, serve_cmd}) add_common(sub);
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "port")->check(CLI::Range(1, 65535));

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus with held-out queries and a config");
  synth->add_option("--dir", synth_dir, "output directory");
  synth->add_option("--count", synth_count, "number of shapes")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const auto summary = cmd_synth(synth_dir, synth_count, synth_seed);
      std::printf("wrote %d shapes and queries to %s\n", summary.at("objects").get<int>(), synth_dir.c_str());
      return 0;
    }
    if (threads > 0) overrides.push_back("threads=" + std::to_string(threads));
    const PipelineConfig cfg = load_config(config_path, overrides);

    if (ingest->parsed()) {
      const auto manifest = cmd_ingest(cfg);
      std::printf("ingested %zu objects, %zu errors\n", manifest.at("objects").size(), manifest.at("errors").size());
      for (const auto& e : manifest.at("errors")) {
        std::fprintf(stderr, "%s: %s\n", e.at("source").get<std::string>().c_str(), e.at("error").get<std::string>().c_str());
      }
    } else if (render->parsed()) {
      std::printf("rendered %zu views\n", cmd_render(cfg));
    } else if (sketchify->parsed()) {
      std::printf("wrote %zu training sketches\n", cmd_sketchify(cfg));
    } else if (index->parsed()) {
      for (const auto& p : cmd_index(cfg)) std::printf("wrote %s\n", p.string().c_str());
    } else if (train->parsed()) {
      const auto folds = cmd_train(cfg);
      for (const auto& f : folds) {
        const auto& first = f.log.front();
        const auto& last = f.log.back();
        std::printf("fold %d: val_loss %.6f -> %.6f\n", first.fold, first.val_loss, last.val_loss);
      }
    } else if (retrieve->parsed()) {
      std::printf("ranked %zu queries\n", cmd_retrieve(cfg).size());
    } else if (evaluate->parsed()) {
      std::cout << leaderboard_csv({{cfg.run_name, cmd_evaluate(cfg)}});
    } else if (serve_cmd->parsed()) {
      serve(cfg, host, port);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
