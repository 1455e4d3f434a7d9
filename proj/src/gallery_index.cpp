#include "sketchret/binary_io.hpp"
#include "sketchret/retrieval.hpp"

#include <set>
#include <stdexcept>

namespace sketchret {

namespace {

constexpr std::uint32_t kVersion = 1;

}  // namespace

void GalleryIndex::validate() const {
  std::set<std::string> seen;
  std::size_t dim = 0;
  std::size_t group_size = 0;
  bool first = true;
  for (const auto& e : entries) {
    if (!seen.insert(e.object_id).second) throw std::invalid_argument("gallery index: duplicate object id " + e.object_id);
    if (e.groups.size() != group_ids.size()) throw std::invalid_argument("gallery index: inconsistent grouping for " + e.object_id);
    for (const auto& g : e.groups) {
      if (first) {
        group_size = g.size();
        dim = g.empty() ? 0 : g.front().size();
        first = false;
      }
      if (g.size() != group_size || g.empty()) throw std::invalid_argument("gallery index: inconsistent group size for " + e.object_id);
      for (const auto& f : g) {
        if (f.tag != descriptor.tag || f.size() != dim) {
          throw std::invalid_argument("gallery index: inconsistent descriptor for " + e.object_id);
        }
      }
    }
  }
}

std::vector<std::string> GalleryIndex::object_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.object_id);
  return ids;
}

std::size_t GalleryIndex::find(const std::string& object_id) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].object_id == object_id) return i;
  }
  throw std::out_of_range("unknown object " + object_id);
}

ViewImage gallery_view_image(const ViewImage& rendered, const SketchParams& sp, const PreprocessParams& pp) {
  try {
    return preprocess_sketch(sketchify_view(rendered, sp), sp, pp);
  } catch (const EmptySketchError&) {
    return ViewImage(pp.out_size, pp.out_size, 0, ImageKind::Sketch);
  }
}

GalleryEntry index_entry(const RingSet& rings, const SketchParams& sp, const PreprocessParams& pp,
                         const DescriptorParams& dp) {
  GalleryEntry entry;
  entry.object_id = rings.object_id;
  for (const auto& [ring, views] : rings.rings) {
    std::vector<FeatureVector> group;
    group.reserve(views.size());
    for (const auto& v : views) {
      group.push_back(compute_descriptor(gallery_view_image(v.image, sp, pp), dp));
    }
    entry.groups.push_back(std::move(group));
  }
  return entry;
}

std::vector<std::uint8_t> encode_index(const GalleryIndex& index) {
  index.validate();
  const std::size_t views = index.entries.empty() ? 0 : index.entries.front().groups.front().size();
  const std::size_t dim = views == 0 ? 0 : index.entries.front().groups.front().front().size();
  ByteWriter w;
  w.raw("SKIX");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(index.descriptor.tag));
  w.u32(static_cast<std::uint32_t>(index.descriptor.hog.cell));
  w.u32(static_cast<std::uint32_t>(index.descriptor.hog.block));
  w.u32(static_cast<std::uint32_t>(index.descriptor.hog.bins));
  w.u32(static_cast<std::uint32_t>(dim));
  w.u32(static_cast<std::uint32_t>(index.group_ids.size()));
  for (int g : index.group_ids) w.u32(static_cast<std::uint32_t>(g));
  w.u32(static_cast<std::uint32_t>(views));
  w.str(index.build_info.dump());
  w.u64(index.entries.size());
  for (const auto& e : index.entries) {
    w.str(e.object_id);
    for (const auto& g : e.groups) {
      for (const auto& f : g) {
        for (float x : f.values) w.f32(x);
      }
    }
  }
  return w.take();
}

GalleryIndex decode_index(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(4) != "SKIX") throw FormatError("index: bad magic");
  if (const auto v = r.u32(); v != kVersion) throw FormatError("index: unsupported version " + std::to_string(v));
  GalleryIndex index;
  const auto tag = r.u32();
  if (tag < 1 || tag > 3) throw FormatError("index: unknown descriptor tag");
  index.descriptor.tag = static_cast<DescriptorTag>(tag);
  index.descriptor.hog.cell = static_cast<int>(r.u32());
  index.descriptor.hog.block = static_cast<int>(r.u32());
  index.descriptor.hog.bins = static_cast<int>(r.u32());
  const std::uint32_t dim = r.u32();
  const std::uint32_t group_count = r.u32();
  for (std::uint32_t i = 0; i < group_count; ++i) index.group_ids.push_back(static_cast<int>(r.u32()));
  const std::uint32_t views = r.u32();
  try {
    index.build_info = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("index: bad build info: ") + e.what());
  }
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    GalleryEntry e;
    e.object_id = r.str();
    e.groups.resize(group_count);
    for (auto& g : e.groups) {
      g.resize(views);
      for (auto& f : g) {
        f.tag = index.descriptor.tag;
        f.values.resize(dim);
        for (auto& x : f.values) x = r.f32();
      }
    }
    index.entries.push_back(std::move(e));
  }
  if (!r.at_end()) throw FormatError("index: trailing data");
  try {
    index.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return index;
}

void save_index(const GalleryIndex& index, const std::string& path) { write_binary_file(path, encode_index(index)); }

GalleryIndex load_index(const std::string& path) { return decode_index(read_binary_file(path)); }

}  // namespace sketchret
