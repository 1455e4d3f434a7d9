#include "sketchret/binary_io.hpp"
#include "sketchret/descriptors.hpp"

#include <fstream>
#include <iterator>

namespace sketchret {

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {
constexpr std::uint32_t kStoreVersion = 1;
}

std::vector<std::uint8_t> encode_feature_store(const FeatureStore& store) {
  ByteWriter w;
  w.raw("SKFS");
  w.u32(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(store.tag));
  w.u32(store.dim);
  w.u64(store.rows.size());
  for (const auto& row : store.rows) {
    if (row.size() != store.dim) throw std::invalid_argument("feature store: row length differs from dim");
    for (float v : row) w.f32(v);
  }
  return w.take();
}

FeatureStore decode_feature_store(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(4) != "SKFS") throw FormatError("feature store: bad magic");
  if (r.u32() != kStoreVersion) throw FormatError("feature store: unsupported version");
  FeatureStore store;
  store.tag = static_cast<DescriptorTag>(r.u32());
  store.dim = r.u32();
  const std::uint64_t count = r.u64();
  store.rows.resize(count);
  for (auto& row : store.rows) {
    row.resize(store.dim);
    for (auto& v : row) v = r.f32();
  }
  if (!r.at_end()) throw FormatError("feature store: trailing bytes");
  return store;
}

void save_feature_store(const FeatureStore& store, const std::string& path) {
  write_binary_file(path, encode_feature_store(store));
  std::ofstream meta(path + ".json");
  if (!meta) throw std::runtime_error("cannot write '" + path + ".json'");
  meta << store.row_meta.dump(1) << "\n";
}

FeatureStore load_feature_store(const std::string& path) {
  FeatureStore store = decode_feature_store(read_binary_file(path));
  std::ifstream meta(path + ".json");
  if (meta) store.row_meta = nlohmann::json::parse(meta);
  return store;
}

}  // namespace sketchret
