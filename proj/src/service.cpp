#include "sketchret/service.hpp"

#include "httplib.h"

#include <cstdio>

namespace sketchret {

using nlohmann::json;

std::shared_ptr<const ServiceState> load_service_state(const PipelineConfig& cfg) {
  auto state = std::make_shared<ServiceState>();
  state->cfg = cfg;
  ScorerFactory factory(cfg);
  state->index = factory.index(cfg.descriptor.tag);
  for (auto& m : load_ingested(cfg)) {
    const std::string id = m.id;
    state->meshes.emplace(id, std::move(m));
  }
  for (const std::string spec : {"min_l2", "top6_sum_max"}) state->scorers[spec] = factory.make(spec);
  for (const std::string spec : {"embedding", "fused"}) {
    try {
      state->scorers[spec] = factory.make(spec);
    } catch (const std::runtime_error&) {
      // missing checkpoints or secondary index: the scorer is simply not offered
    }
  }
  state->default_scorer = cfg.retrieval.scorer;
  if (!state->scorers.count(state->default_scorer)) state->scorers[state->default_scorer] = factory.make(cfg.retrieval.scorer);
  return state;
}

json query_response(const ServiceState& state, std::span<const std::uint8_t> image_bytes, int top_k,
                    const std::string& scorer, bool tta_flip) {
  if (top_k < 1) throw HttpError(400, "top_k must be at least 1");
  const auto it = state.scorers.find(scorer);
  if (it == state.scorers.end()) throw HttpError(400, "unknown scorer " + scorer);
  ViewImage sketch;
  try {
    sketch = decode_png(image_bytes);
  } catch (const std::exception& e) {
    throw HttpError(400, std::string("malformed image: ") + e.what());
  }
  ViewImage query;
  try {
    query = prepare_query(sketch, state.cfg);
  } catch (const EmptySketchError& e) {
    throw HttpError(400, e.what());
  }
  const RankedList list = rank("request", query, *it->second, tta_flip);
  json results = json::array();
  const auto n = std::min(list.ranking.size(), static_cast<std::size_t>(top_k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = list.ranking[i];
    json thumbs = json::array();
    for (int g : state.index->group_ids) {
      thumbs.push_back("/api/objects/" + r.object_id + "/views/" + std::to_string(g) + "/0");
    }
    results.push_back({{"rank", i + 1}, {"object_id", r.object_id}, {"score", r.score}, {"thumbnails", thumbs}});
  }
  return {{"scorer", scorer},
          {"order", list.order == ScoreOrder::HigherIsBetter ? "similarity" : "distance"},
          {"results", results}};
}

std::vector<std::uint8_t> view_png(const ServiceState& state, const std::string& object_id, int ring, int view) {
  const auto it = state.meshes.find(object_id);
  if (it == state.meshes.end()) throw HttpError(404, "unknown object " + object_id);
  for (const auto& pose : config_poses(state.cfg.render)) {
    if (pose.ring_index != ring || pose.azimuth_index != view) continue;
    const ViewImage img = state.cfg.render.style == ImageKind::Silhouette
                              ? render_silhouette(it->second, pose, state.cfg.render.raster)
                              : render_shaded(it->second, pose, state.cfg.render.raster);
    return encode_png(img);
  }
  throw HttpError(404, "unknown view " + std::to_string(ring) + "/" + std::to_string(view));
}

namespace {

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

int parse_int(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw HttpError(400, "bad " + what + ": " + text);
  }
}

// Form fields arrive as multipart parts; URL query parameters are accepted as well.
std::string field(const httplib::Request& req, const std::string& key, const std::string& fallback) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  return fallback;
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const HttpError& e) {
    send_error(res, e.status(), e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

void register_routes(httplib::Server& server, std::shared_ptr<const ServiceState> state) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}}.dump(), "application/json");
  });

  server.Post("/api/query", [state](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_file("sketch")) throw HttpError(400, "missing multipart field 'sketch'");
      const std::string& png = req.get_file_value("sketch").content;
      const int top_k = parse_int(field(req, "top_k", std::to_string(state->cfg.retrieval.top_k)), "top_k");
      const std::string scorer = field(req, "scorer", state->default_scorer);
      const std::string tta = field(req, "tta", state->cfg.retrieval.tta_flip ? "true" : "false");
      if (tta != "true" && tta != "false" && tta != "1" && tta != "0") throw HttpError(400, "bad tta: " + tta);
      const json body =
          query_response(*state, {reinterpret_cast<const std::uint8_t*>(png.data()), png.size()}, top_k, scorer,
                         tta == "true" || tta == "1");
      res.set_content(body.dump(), "application/json");
    });
  });

  server.Get("/api/objects/:id/views/:ring/:view", [state](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto png = view_png(*state, req.path_params.at("id"), parse_int(req.path_params.at("ring"), "ring"),
                                parse_int(req.path_params.at("view"), "view"));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });
}

void serve(const PipelineConfig& cfg, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, load_service_state(cfg));
  std::printf("listening on %s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace sketchret
