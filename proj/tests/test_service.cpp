#include "doctest.h"
#include "pipeline_fixture.hpp"
#include "test_support.hpp"

#include "sketchret/service.hpp"

#include "httplib.h"

#include <thread>

using namespace sketchret;
using nlohmann::json;

namespace {

// Five-object gallery with a grid index, served on an ephemeral local port.
struct LiveService {
  test_support::TempDir dir{"service"};
  PipelineConfig cfg;
  std::shared_ptr<const ServiceState> state;
  httplib::Server server;
  std::thread worker;
  int port = 0;

  LiveService() {
    cfg = pipeline_fixture::synthetic_config(dir.path(), 5, 21);
    cmd_ingest(cfg);
    cmd_index(cfg);
    state = load_service_state(cfg);
    register_routes(server, state);
    port = server.bind_to_any_port("127.0.0.1");
    worker = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LiveService() {
    server.stop();
    worker.join();
  }

  httplib::Result post(const std::string& png, const std::vector<std::pair<std::string, std::string>>& fields = {}) const {
    httplib::Client client("127.0.0.1", port);
    httplib::MultipartFormDataItems items{{"sketch", png, "sketch.png", "image/png"}};
    for (const auto& [k, v] : fields) items.push_back({k, v, "", ""});
    return client.Post("/api/query", items);
  }

  httplib::Result get(const std::string& path) const {
    httplib::Client client("127.0.0.1", port);
    return client.Get(path);
  }

  // Dark-on-light sketch of one rendered gallery view, as a user would upload it.
  std::string view_sketch_png(std::size_t object, int ring, int view) const {
    const Mesh m = load_ingested(cfg)[object];
    const RingSet rs = render_rings(m, cfg.render);
    const auto bytes = encode_png(sketchify_view(rs.rings.at(ring)[static_cast<std::size_t>(view)].image, cfg.sketch));
    return {bytes.begin(), bytes.end()};
  }
};

std::string png_string(const ViewImage& img) {
  const auto bytes = encode_png(img);
  return {bytes.begin(), bytes.end()};
}

}  // namespace

TEST_CASE("http api") {
  LiveService svc;
  REQUIRE(svc.port > 0);

  SUBCASE("health") {
    const auto r = svc.get("/api/health");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(json::parse(r->body) == json{{"status", "ok"}});
  }

  SUBCASE("a sketchified gallery view retrieves its source object first") {
    const auto ids = svc.state->index->object_ids();
    for (std::size_t o = 0; o < ids.size(); ++o) {
      const auto r = svc.post(svc.view_sketch_png(o, 3, static_cast<int>(o)), {{"top_k", "3"}});
      REQUIRE(r);
      REQUIRE(r->status == 200);
      const json body = json::parse(r->body);
      CHECK(body.at("scorer") == "min_l2");
      CHECK(body.at("order") == "distance");
      REQUIRE(body.at("results").size() == 3);
      CHECK(body["results"][0]["object_id"] == ids[o]);
      CHECK(body["results"][0]["rank"] == 1);
      CHECK(body["results"][0]["score"].get<double>() == 0.0);
      CHECK(body["results"][0]["thumbnails"].size() == 3);
      for (std::size_t i = 1; i < 3; ++i) {
        CHECK(body["results"][i]["score"].get<double>() >= body["results"][i - 1]["score"].get<double>());
      }
    }
  }

  SUBCASE("scorer choice and tta") {
    const std::string png = svc.view_sketch_png(2, 3, 4);
    const auto r = svc.post(png, {{"scorer", "top6_sum_max"}, {"tta", "true"}});
    REQUIRE(r);
    REQUIRE(r->status == 200);
    const json body = json::parse(r->body);
    CHECK(body.at("order") == "similarity");
    CHECK(body.at("results").size() == 5);
    for (std::size_t i = 1; i < 5; ++i) {
      CHECK(body["results"][i]["score"].get<double>() <= body["results"][i - 1]["score"].get<double>());
    }
  }

  SUBCASE("bad requests") {
    auto r = svc.post(png_string(ViewImage(64, 64, 255)));
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(json::parse(r->body).at("error") == "empty sketch");

    r = svc.post("not a png");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(json::parse(r->body).at("error").get<std::string>().find("malformed image") == 0);

    const std::string png = svc.view_sketch_png(0, 3, 0);
    for (const auto& field : std::vector<std::pair<std::string, std::string>>{
             {"scorer", "magic"}, {"top_k", "0"}, {"top_k", "three"}, {"tta", "maybe"}}) {
      r = svc.post(png, {field});
      REQUIRE(r);
      CHECK_MESSAGE(r->status == 400, field.first, "=", field.second);
    }

    httplib::Client client("127.0.0.1", svc.port);
    r = client.Post("/api/query", httplib::MultipartFormDataItems{{"image", "x", "", ""}});
    REQUIRE(r);
    CHECK(r->status == 400);
  }

  SUBCASE("view thumbnails") {
    const std::string id = svc.state->index->object_ids()[1];
    auto r = svc.get("/api/objects/" + id + "/views/3/0");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "image/png");
    const ViewImage img = decode_png({reinterpret_cast<const std::uint8_t*>(r->body.data()), r->body.size()});
    CHECK(img.width == 64);

    r = svc.get("/api/objects/nobody/views/3/0");
    REQUIRE(r);
    CHECK(r->status == 404);
    r = svc.get("/api/objects/" + id + "/views/6/0");
    REQUIRE(r);
    CHECK(r->status == 404);
    r = svc.get("/api/objects/" + id + "/views/3/x");
    REQUIRE(r);
    CHECK(r->status == 400);
  }

  SUBCASE("concurrent queries agree with sequential ones") {
    std::vector<std::string> pngs;
    std::vector<std::string> expected;
    for (int k = 0; k < 4; ++k) {
      pngs.push_back(svc.view_sketch_png(static_cast<std::size_t>(k), 2 + k % 3, 2 * k + 1));
      const auto r = svc.post(pngs.back());
      REQUIRE(r);
      expected.push_back(r->body);
    }
    std::vector<std::vector<std::string>> got(4);
    std::vector<std::thread> clients;
    for (int t = 0; t < 4; ++t) {
      clients.emplace_back([&, t] {
        for (int rep = 0; rep < 5; ++rep) {
          const auto r = svc.post(pngs[static_cast<std::size_t>((t + rep) % 4)]);
          got[static_cast<std::size_t>(t)].push_back(r ? r->body : std::string("no response"));
        }
      });
    }
    for (auto& c : clients) c.join();
    for (int t = 0; t < 4; ++t) {
      for (int rep = 0; rep < 5; ++rep) {
        CHECK(got[static_cast<std::size_t>(t)][static_cast<std::size_t>(rep)] == expected[static_cast<std::size_t>((t + rep) % 4)]);
      }
    }
  }

  SUBCASE("a PNG posted to the service ranks like the same PNG run through retrieve") {
    const std::string png = svc.view_sketch_png(3, 4, 7);
    const auto r = svc.post(png, {{"top_k", "5"}});
    REQUIRE(r);
    std::vector<std::string> service_ids;
    const json body = json::parse(r->body);
    for (const auto& e : body.at("results")) service_ids.push_back(e.at("object_id").get<std::string>());

    PipelineConfig only = svc.cfg;
    only.queries_dir = svc.dir.path() / "one_query";
    fs::create_directories(only.queries_dir);
    write_text_file(only.queries_dir / "q.png", png);
    const auto lists = cmd_retrieve(only);
    REQUIRE(lists.size() == 1);
    CHECK(lists[0].ids() == service_ids);
  }
}

TEST_CASE("service state") {
  test_support::TempDir dir("state");
  const PipelineConfig cfg = pipeline_fixture::synthetic_config(dir.path(), 3, 5);
  CHECK_THROWS(load_service_state(cfg));  // nothing ingested yet
  cmd_ingest(cfg);
  cmd_index(cfg);
  const auto state = load_service_state(cfg);
  CHECK(state->meshes.size() == 3);
  CHECK(state->scorers.count("min_l2") == 1);
  CHECK(state->scorers.count("top6_sum_max") == 1);
  CHECK(state->scorers.count("embedding") == 0);  // no checkpoints
  CHECK(state->default_scorer == "min_l2");
  CHECK_THROWS_AS(view_png(*state, "shape00", 9, 0), HttpError);
  CHECK(decode_png(view_png(*state, "shape00", 2, 11)).width == 64);
}
