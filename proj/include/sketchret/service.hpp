#pragma once

#include "sketchret/pipeline.hpp"

#include <map>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace sketchret {

/// Everything a running service reads. Built once at startup and never modified.
struct ServiceState {
  PipelineConfig cfg;
  std::shared_ptr<const GalleryIndex> index;
  std::map<std::string, std::shared_ptr<const Scorer>> scorers;  // by scorer spec
  std::map<std::string, Mesh> meshes;
  std::string default_scorer;
};

/// Loads the primary index, the ingested meshes and every scorer that can be built from
/// the artifacts on disk. The configured scorer must be among them.
std::shared_ptr<const ServiceState> load_service_state(const PipelineConfig& cfg);

/// Error with an HTTP status, raised by the request handlers.
class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Ranks an encoded sketch image. Throws HttpError(400) for an undecodable or blank image
/// or an unknown scorer.
nlohmann::json query_response(const ServiceState& state, std::span<const std::uint8_t> image_bytes, int top_k,
                              const std::string& scorer, bool tta_flip);

/// PNG of one gallery view rendered on demand. Throws HttpError(404) for an unknown object
/// or view.
std::vector<std::uint8_t> view_png(const ServiceState& state, const std::string& object_id, int ring, int view);

/// POST /api/query, GET /api/objects/{id}/views/{ring}/{view}, GET /api/health.
void register_routes(httplib::Server& server, std::shared_ptr<const ServiceState> state);

/// Blocks until the server stops.
void serve(const PipelineConfig& cfg, const std::string& host, int port);

}  // namespace sketchret
