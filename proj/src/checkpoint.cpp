#include "sketchret/checkpoint.hpp"

#include "sketchret/binary_io.hpp"

namespace sketchret {

namespace {

constexpr std::uint32_t kVersion = 1;

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const nlohmann::json& meta) {
  nlohmann::json tensors = nlohmann::json::array();
  Model copy = model;
  for_each_param(
      [&](const std::string& name, const auto& x) {
        tensors.push_back({{"name", name}, {"rows", x.rows()}, {"cols", x.cols()}});
      },
      copy);
  const nlohmann::json header = {{"config", model.config.to_json()}, {"meta", meta}, {"tensors", tensors}};

  ByteWriter w;
  w.raw("SKCK");
  w.u32(kVersion);
  w.str(header.dump());
  for_each_param(
      [&](const std::string&, const auto& x) {
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          for (Eigen::Index c = 0; c < x.cols(); ++c) w.f32(static_cast<float>(x(r, c)));
        }
      },
      copy);
  return w.take();
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes, nlohmann::json* meta) {
  ByteReader r(bytes);
  if (r.raw(4) != "SKCK") throw FormatError("checkpoint: bad magic");
  if (const auto v = r.u32(); v != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(v));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  }
  // Build a correctly shaped model from the config, then overwrite every tensor.
  Rng rng(0);
  Model model = init_model(ModelConfig::from_json(header.at("config")), rng);
  const auto& tensors = header.at("tensors");
  std::size_t index = 0;
  for_each_param(
      [&](const std::string& name, auto& x) {
        if (index >= tensors.size()) throw FormatError("checkpoint: missing tensor " + name);
        const auto& t = tensors[index++];
        if (t.at("name").get<std::string>() != name || t.at("rows").get<Eigen::Index>() != x.rows() ||
            t.at("cols").get<Eigen::Index>() != x.cols()) {
          throw FormatError("checkpoint: tensor mismatch at " + name);
        }
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = static_cast<double>(r.f32());
        }
      },
      model);
  if (index != tensors.size() || !r.at_end()) throw FormatError("checkpoint: trailing data");
  if (meta != nullptr) *meta = header.value("meta", nlohmann::json::object());
  return model;
}

void save_checkpoint(const Model& model, const std::string& path, const nlohmann::json& meta) {
  write_binary_file(path, encode_checkpoint(model, meta));
}

Model load_checkpoint(const std::string& path, nlohmann::json* meta) {
  return decode_checkpoint(read_binary_file(path), meta);
}

}  // namespace sketchret
