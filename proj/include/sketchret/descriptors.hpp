#pragma once

#include "sketchret/image.hpp"

#include "json.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sketchret {

enum class DescriptorTag : std::uint32_t { Hog = 1, Grid = 2, Embed = 3 };

std::string_view tag_name(DescriptorTag tag);
DescriptorTag parse_tag(std::string_view name);

struct FeatureVector {
  DescriptorTag tag = DescriptorTag::Grid;
  std::vector<float> values;

  std::size_t size() const { return values.size(); }
  bool is_zero() const;
};

struct HogParams {
  int cell = 8;
  int block = 2;  // cells per block side
  int bins = 9;   // unsigned orientation, bin centers at k * 180 / bins
};

/// Per-cell orientation histograms (magnitude-weighted, linear interpolation between the
/// two nearest bins), 2x2-cell blocks at one-cell stride, block L2 normalization with
/// epsilon 1e-6.
FeatureVector hog(const ViewImage& img, const HogParams& p = {});
std::size_t hog_length(int width, int height, const HogParams& p = {});

/// 16 ratios of per-cell pixel mass to total mass over a 4x4 partition, row-major.
/// An all-zero image yields the zero vector.
FeatureVector grid_feature(const ViewImage& img);

struct DescriptorParams {
  DescriptorTag tag = DescriptorTag::Grid;
  HogParams hog;
};

FeatureVector compute_descriptor(const ViewImage& img, const DescriptorParams& p);

/// u.v / (|u||v|). Throws on length mismatch or a zero vector.
double cosine_sim(std::span<const float> u, std::span<const float> v);
double cosine_sim(const FeatureVector& u, const FeatureVector& v);
double l2_distance(std::span<const float> u, std::span<const float> v);
double l2_distance(const FeatureVector& u, const FeatureVector& v);

// Feature store: "SKFS" magic, u32 version, u32 tag, u32 dim, u64 count, then count x dim
// little-endian float32 values. Row metadata lives in a JSON sidecar at `<path>.json`.
struct FeatureStore {
  DescriptorTag tag = DescriptorTag::Grid;
  std::uint32_t dim = 0;
  std::vector<std::vector<float>> rows;
  nlohmann::json row_meta = nlohmann::json::array();
};

std::vector<std::uint8_t> encode_feature_store(const FeatureStore& store);
FeatureStore decode_feature_store(std::span<const std::uint8_t> bytes);
void save_feature_store(const FeatureStore& store, const std::string& path);
FeatureStore load_feature_store(const std::string& path);

}  // namespace sketchret
