#include "sketchret/pipeline.hpp"

#include "sketchret/binary_io.hpp"
#include "sketchret/checkpoint.hpp"
#include "sketchret/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace sketchret {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError("unknown config key " + (section.empty() ? key : section + "." + key));
    }
  }
}

std::string layout_name(RingLayout l) {
  switch (l) {
    case RingLayout::Rings: return "rings";
    case RingLayout::Thp: return "thp";
    case RingLayout::Dh: return "dh";
  }
  return "rings";
}

RingLayout parse_layout(const std::string& s) {
  if (s == "rings") return RingLayout::Rings;
  if (s == "thp") return RingLayout::Thp;
  if (s == "dh") return RingLayout::Dh;
  throw ConfigError("unknown render layout " + s);
}

EdgeMethod parse_method(const std::string& s) {
  if (s == "canny") return EdgeMethod::Canny;
  if (s == "laplacian") return EdgeMethod::Laplacian;
  throw ConfigError("unknown edge method " + s);
}

json render_to_json(const RenderConfig& r) {
  return {{"layout", layout_name(r.layout)},     {"rings", r.rings},
          {"views_per_ring", r.views_per_ring},  {"distance", r.distance},
          {"resolution", r.raster.resolution},   {"fov_deg", r.raster.vertical_fov_deg},
          {"style", r.style == ImageKind::Silhouette ? "silhouette" : "shaded"}};
}

RenderConfig render_from_json(const json& j) {
  check_keys(j, "render", {"layout", "rings", "views_per_ring", "distance", "resolution", "fov_deg", "style"});
  const RingLayout layout = parse_layout(j.value("layout", std::string("rings")));
  RenderConfig r = layout == RingLayout::Dh ? RenderConfig::dh() : layout == RingLayout::Thp ? RenderConfig::thp() : RenderConfig{};
  r.rings = j.value("rings", r.rings);
  r.views_per_ring = j.value("views_per_ring", r.views_per_ring);
  r.distance = j.value("distance", r.distance);
  r.raster.resolution = j.value("resolution", r.raster.resolution);
  r.raster.vertical_fov_deg = j.value("fov_deg", r.raster.vertical_fov_deg);
  const std::string style = j.value("style", std::string("shaded"));
  if (style != "shaded" && style != "silhouette") throw ConfigError("unknown render style " + style);
  r.style = style == "silhouette" ? ImageKind::Silhouette : ImageKind::Shaded;
  return r;
}

json sketch_to_json(const SketchParams& s) {
  return {{"method", s.method == EdgeMethod::Canny ? "canny" : "laplacian"},
          {"canny_low", s.canny_low},
          {"canny_high", s.canny_high},
          {"gaussian_sigma", s.gaussian_sigma},
          {"laplacian_threshold", s.laplacian_threshold},
          {"dilation_radius", s.dilation_radius}};
}

SketchParams sketch_from_json(const json& j) {
  check_keys(j, "sketch",
             {"method", "canny_low", "canny_high", "gaussian_sigma", "laplacian_threshold", "dilation_radius"});
  SketchParams s;
  s.method = parse_method(j.value("method", std::string("canny")));
  s.canny_low = j.value("canny_low", s.canny_low);
  s.canny_high = j.value("canny_high", s.canny_high);
  s.gaussian_sigma = j.value("gaussian_sigma", s.gaussian_sigma);
  s.laplacian_threshold = j.value("laplacian_threshold", s.laplacian_threshold);
  s.dilation_radius = j.value("dilation_radius", s.dilation_radius);
  return s;
}

json augment_to_json(const AugmentParams& a) {
  return {{"rings", a.rings},
          {"ring_probs", a.ring_probs},
          {"edge_removal_fraction", a.edge_removal_fraction},
          {"flip_prob", a.flip_prob},
          {"rotation_range", a.rotation_range},
          {"queries_per_object", a.queries_per_object},
          {"variants_per_query", a.variants_per_query}};
}

AugmentParams augment_from_json(const json& j) {
  check_keys(j, "augment",
             {"rings", "ring_probs", "edge_removal_fraction", "flip_prob", "rotation_range", "queries_per_object",
              "variants_per_query"});
  AugmentParams a;
  a.rings = j.value("rings", a.rings);
  a.ring_probs = j.value("ring_probs", a.ring_probs);
  a.edge_removal_fraction = j.value("edge_removal_fraction", a.edge_removal_fraction);
  a.flip_prob = j.value("flip_prob", a.flip_prob);
  a.rotation_range = j.value("rotation_range", a.rotation_range);
  a.queries_per_object = j.value("queries_per_object", a.queries_per_object);
  a.variants_per_query = j.value("variants_per_query", a.variants_per_query);
  return a;
}

json descriptor_to_json(const DescriptorParams& d) {
  return {{"tag", tag_name(d.tag)}, {"hog", {{"cell", d.hog.cell}, {"block", d.hog.block}, {"bins", d.hog.bins}}}};
}

DescriptorParams descriptor_from_json(const json& j) {
  check_keys(j, "descriptor", {"tag", "hog"});
  DescriptorParams d;
  try {
    d.tag = parse_tag(j.value("tag", std::string("grid")));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (d.tag == DescriptorTag::Embed) throw ConfigError("descriptor: embed is not an image descriptor");
  if (j.contains("hog")) {
    const auto& h = j.at("hog");
    check_keys(h, "descriptor.hog", {"cell", "block", "bins"});
    d.hog.cell = h.value("cell", d.hog.cell);
    d.hog.block = h.value("block", d.hog.block);
    d.hog.bins = h.value("bins", d.hog.bins);
  }
  return d;
}

fs::path resolve(const json& j, const char* key, const fs::path& base, const fs::path& fallback = {}) {
  if (!j.contains(key)) return fallback;
  const fs::path p = j.at(key).get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

struct ScorerSpec {
  std::string kind;
  DescriptorTag tag;
};

ScorerSpec parse_spec(const std::string& spec, DescriptorTag primary) {
  const auto colon = spec.find(':');
  ScorerSpec s{spec.substr(0, colon), primary};
  static const std::set<std::string> kinds{"min_l2", "top6_sum_max", "embedding", "fused"};
  if (!kinds.count(s.kind)) throw ConfigError("unknown scorer " + s.kind);
  if (colon != std::string::npos) {
    if (s.kind == "fused") throw ConfigError("fused scorer takes no descriptor suffix");
    try {
      s.tag = parse_tag(spec.substr(colon + 1));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return s;
}

std::string spec_key(const ScorerSpec& s) {
  return s.kind == "fused" ? s.kind : s.kind + ":" + std::string(tag_name(s.tag));
}

// Descriptor tags whose indexes the configured scorers read.
std::set<DescriptorTag> tags_in_use(const PipelineConfig& cfg) {
  std::set<DescriptorTag> tags{cfg.descriptor.tag};
  std::vector<std::string> specs{cfg.retrieval.scorer};
  if (parse_spec(cfg.retrieval.scorer, cfg.descriptor.tag).kind == "fused") {
    specs.push_back(cfg.retrieval.fuse_a);
    specs.push_back(cfg.retrieval.fuse_b);
  }
  for (const auto& s : specs) tags.insert(parse_spec(s, cfg.descriptor.tag).tag);
  return tags;
}

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw std::runtime_error("directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void PipelineConfig::validate() const {
  if (threads < 1) throw ConfigError("threads must be at least 1");
  try {
    sketch.validate();
    augment.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (render.raster.resolution < 16) throw ConfigError("render.resolution must be at least 16");
  if (render.layout == RingLayout::Rings) {
    for (int r : augment.rings) {
      if (std::find(render.rings.begin(), render.rings.end(), r) == render.rings.end()) {
        throw ConfigError("augment ring " + std::to_string(r) + " is not rendered");
      }
    }
  }
  if (!(retrieval.alpha >= 0.0 && retrieval.alpha <= 1.0)) throw ConfigError("retrieval.alpha must lie in [0, 1]");
  if (retrieval.top_k < 1) throw ConfigError("retrieval.top_k must be at least 1");
  parse_spec(retrieval.scorer, descriptor.tag);
  for (const auto& s : {retrieval.fuse_a, retrieval.fuse_b}) {
    if (parse_spec(s, descriptor.tag).kind == "fused") throw ConfigError("fused scorers cannot nest");
  }
  if (evaluation.p_k < 1 || evaluation.fr_cutoff < 1) throw ConfigError("evaluation cutoffs must be positive");
}

json PipelineConfig::to_json() const {
  json t = train.to_json();
  t.erase("seed");
  t.erase("threads");
  return {{"mesh_dir", mesh_dir.string()},
          {"queries_dir", queries_dir.string()},
          {"ground_truth", ground_truth.string()},
          {"output_dir", output_dir.string()},
          {"seed", seed},
          {"threads", threads},
          {"ingest", {{"reorient_axis", reorient_axis}, {"reorient_degrees", reorient_degrees}}},
          {"render", render_to_json(render)},
          {"sketch", sketch_to_json(sketch)},
          {"preprocess", {{"out_size", preprocess.out_size}, {"pad", preprocess.pad}}},
          {"augment", augment_to_json(augment)},
          {"descriptor", descriptor_to_json(descriptor)},
          {"train", t},
          {"retrieval",
           {{"scorer", retrieval.scorer},
            {"fuse_a", retrieval.fuse_a},
            {"fuse_b", retrieval.fuse_b},
            {"alpha", retrieval.alpha},
            {"tta_flip", retrieval.tta_flip},
            {"top_k", retrieval.top_k}}},
          {"evaluation",
           {{"p_k", evaluation.p_k},
            {"fr_cutoff", evaluation.fr_cutoff},
            {"map_divide_by_hits", evaluation.map_divide_by_hits},
            {"run_name", run_name}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  try {
    check_keys(j, "",
               {"mesh_dir", "queries_dir", "ground_truth", "output_dir", "seed", "threads", "ingest", "render", "sketch",
                "preprocess", "augment", "descriptor", "train", "retrieval", "evaluation"});
    c.mesh_dir = resolve(j, "mesh_dir", base_dir);
    c.queries_dir = resolve(j, "queries_dir", base_dir);
    c.ground_truth = resolve(j, "ground_truth", base_dir);
    c.output_dir = resolve(j, "output_dir", base_dir, base_dir.empty() ? fs::path("out") : base_dir / "out");
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("ingest")) {
      const auto& i = j.at("ingest");
      check_keys(i, "ingest", {"reorient_axis", "reorient_degrees"});
      c.reorient_axis = i.value("reorient_axis", c.reorient_axis);
      c.reorient_degrees = i.value("reorient_degrees", c.reorient_degrees);
      try {
        parse_axis(c.reorient_axis);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (j.contains("render")) c.render = render_from_json(j.at("render"));
    if (j.contains("sketch")) c.sketch = sketch_from_json(j.at("sketch"));
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      check_keys(p, "preprocess", {"out_size", "pad"});
      c.preprocess.out_size = p.value("out_size", c.preprocess.out_size);
      c.preprocess.pad = p.value("pad", c.preprocess.pad);
    }
    if (j.contains("augment")) c.augment = augment_from_json(j.at("augment"));
    if (j.contains("descriptor")) c.descriptor = descriptor_from_json(j.at("descriptor"));
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("retrieval")) {
      const auto& r = j.at("retrieval");
      check_keys(r, "retrieval", {"scorer", "fuse_a", "fuse_b", "alpha", "tta_flip", "top_k"});
      c.retrieval.scorer = r.value("scorer", c.retrieval.scorer);
      c.retrieval.fuse_a = r.value("fuse_a", c.retrieval.fuse_a);
      c.retrieval.fuse_b = r.value("fuse_b", c.retrieval.fuse_b);
      c.retrieval.alpha = r.value("alpha", c.retrieval.alpha);
      c.retrieval.tta_flip = r.value("tta_flip", c.retrieval.tta_flip);
      c.retrieval.top_k = r.value("top_k", c.retrieval.top_k);
    }
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      check_keys(e, "evaluation", {"p_k", "fr_cutoff", "map_divide_by_hits", "run_name"});
      c.evaluation.p_k = e.value("p_k", c.evaluation.p_k);
      c.evaluation.fr_cutoff = e.value("fr_cutoff", c.evaluation.fr_cutoff);
      c.evaluation.map_divide_by_hits = e.value("map_divide_by_hits", c.evaluation.map_divide_by_hits);
      c.run_name = e.value("run_name", c.run_name);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.train.seed = c.seed;
  c.train.threads = c.threads;
  c.validate();
  return c;
}

PipelineConfig config_with_overrides(const json& base, const std::vector<std::string>& overrides,
                                     const fs::path& base_dir) {
  json j = base;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + o);
    std::string pointer = "/" + o.substr(0, eq);
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    try {
      j[json::json_pointer(pointer)] = parse_override_value(o.substr(eq + 1));
    } catch (const json::exception& e) {
      throw ConfigError("bad override " + o + ": " + e.what());
    }
  }
  return PipelineConfig::from_json(j, base_dir);
}

PipelineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_with_overrides(j, overrides, path.parent_path());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(workers, n); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json cmd_ingest(const PipelineConfig& cfg) {
  const auto files = list_files(cfg.mesh_dir, ".obj");
  const Axis axis = parse_axis(cfg.reorient_axis);
  std::vector<Mesh> meshes(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), cfg.threads, [&](std::size_t i) {
    try {
      Mesh m = load_obj(files[i].string());
      validate(m);
      if (cfg.reorient_degrees != 0.0) m = rotate_about_axis(m, axis, cfg.reorient_degrees);
      Mesh n = normalize_to_box(m);
      n.id = m.id;
      meshes[i] = std::move(n);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  json objects = json::array();
  json failures = json::array();
  std::set<std::string> ids;
  fs::create_directories(cfg.output_dir / "meshes");
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string source = files[i].filename().string();
    if (errors[i].empty() && !ids.insert(meshes[i].id).second) errors[i] = "duplicate object id " + meshes[i].id;
    if (!errors[i].empty()) {
      failures.push_back({{"source", source}, {"error", errors[i]}});
      continue;
    }
    const std::string rel = "meshes/" + meshes[i].id + ".obj";
    save_obj(meshes[i], (cfg.output_dir / rel).string());
    objects.push_back({{"id", meshes[i].id},
                       {"source", source},
                       {"mesh", rel},
                       {"vertices", meshes[i].vertices.size()},
                       {"triangles", meshes[i].triangles.size()}});
  }
  const json manifest = {{"objects", objects}, {"errors", failures}};
  write_text_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

std::vector<Mesh> load_ingested(const PipelineConfig& cfg) {
  const fs::path path = cfg.output_dir / "manifest.json";
  if (!fs::exists(path)) throw std::runtime_error("no ingest manifest at " + path.string() + "; run ingest first");
  const json manifest = read_json_file(path);
  std::vector<Mesh> out;
  for (const auto& o : manifest.at("objects")) {
    Mesh m = load_obj((cfg.output_dir / o.at("mesh").get<std::string>()).string());
    m.id = o.at("id").get<std::string>();
    out.push_back(std::move(m));
  }
  if (out.empty()) throw std::runtime_error("ingest manifest lists no objects");
  return out;
}

std::size_t cmd_render(const PipelineConfig& cfg) {
  const auto meshes = load_ingested(cfg);
  std::vector<std::size_t> counts(meshes.size());
  parallel_for(meshes.size(), cfg.threads, [&](std::size_t i) {
    const RingSet rs = render_rings(meshes[i], cfg.render);
    for (const auto& [ring, views] : rs.rings) {
      const fs::path dir = cfg.output_dir / "renders" / meshes[i].id / ("ring" + std::to_string(ring));
      fs::create_directories(dir);
      for (const auto& v : views) {
        write_png(v.image, (dir / ("view" + zero_pad(static_cast<std::size_t>(v.pose.azimuth_index), 2) + ".png")).string());
      }
    }
    counts[i] = rs.view_count();
  });
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

std::size_t cmd_sketchify(const PipelineConfig& cfg) {
  if (cfg.render.layout != RingLayout::Rings) throw ConfigError("sketchify samples rings; use the rings layout");
  const auto meshes = load_ingested(cfg);
  std::vector<std::string> lines(meshes.size());
  std::vector<std::size_t> counts(meshes.size());
  parallel_for(meshes.size(), cfg.threads, [&](std::size_t i) {
    const Mesh& m = meshes[i];
    const RingSet rs = render_rings(m, cfg.render);
    const std::uint64_t seed = derive_seed(cfg.seed, "augment:" + m.id);
    Rng rng(seed);
    const auto queries = generate_training_queries(rs, m.id, cfg.augment, cfg.sketch, rng);
    const fs::path dir = cfg.output_dir / "sketches" / m.id;
    fs::create_directories(dir);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const std::string rel = "sketches/" + m.id + "/q" + zero_pad(q, 3) + ".png";
      write_png(queries[q].image, (cfg.output_dir / rel).string());
      lines[i] += manifest_line(queries[q], rel, seed) + "\n";
    }
    counts[i] = queries.size();
  });
  std::string all;
  std::size_t total = 0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    all += lines[i];
    total += counts[i];
  }
  write_text_file(cfg.output_dir / "sketches" / "manifest.jsonl", all);
  return total;
}

fs::path index_path(const PipelineConfig& cfg, DescriptorTag tag) {
  return cfg.output_dir / ("index_" + std::string(tag_name(tag)) + ".skix");
}

std::vector<fs::path> cmd_index(const PipelineConfig& cfg) {
  const auto meshes = load_ingested(cfg);
  std::vector<DescriptorParams> params;
  for (DescriptorTag t : tags_in_use(cfg)) {
    DescriptorParams p = cfg.descriptor;
    p.tag = t;
    params.push_back(p);
  }
  // entries[object][descriptor]
  std::vector<std::vector<GalleryEntry>> entries(meshes.size());
  std::vector<std::vector<int>> group_ids(meshes.size());
  parallel_for(meshes.size(), cfg.threads, [&](std::size_t i) {
    const RingSet rs = render_rings(meshes[i], cfg.render);
    entries[i].resize(params.size());
    for (auto& e : entries[i]) e.object_id = meshes[i].id;
    for (const auto& [ring, views] : rs.rings) {
      group_ids[i].push_back(ring);
      for (auto& e : entries[i]) e.groups.emplace_back();
      for (const auto& v : views) {
        const ViewImage img = gallery_view_image(v.image, cfg.sketch, cfg.preprocess);
        for (std::size_t d = 0; d < params.size(); ++d) {
          entries[i][d].groups.back().push_back(compute_descriptor(img, params[d]));
        }
      }
    }
  });

  std::vector<fs::path> written;
  for (std::size_t d = 0; d < params.size(); ++d) {
    GalleryIndex index;
    index.descriptor = params[d];
    index.group_ids = group_ids.front();
    index.build_info = {{"render", render_to_json(cfg.render)},
                        {"sketch", sketch_to_json(cfg.sketch)},
                        {"preprocess", {{"out_size", cfg.preprocess.out_size}, {"pad", cfg.preprocess.pad}}}};
    for (auto& e : entries) index.entries.push_back(std::move(e[d]));
    const fs::path path = index_path(cfg, params[d].tag);
    fs::create_directories(cfg.output_dir);
    save_index(index, path.string());
    written.push_back(path);
  }
  return written;
}

ViewImage prepare_query(const ViewImage& sketch, const PipelineConfig& cfg) {
  return preprocess_sketch(sketch, cfg.sketch, cfg.preprocess);
}

std::vector<FoldResult> cmd_train(const PipelineConfig& cfg) {
  const fs::path ipath = index_path(cfg, cfg.descriptor.tag);
  if (!fs::exists(ipath)) throw std::runtime_error("index not found: " + ipath.string() + "; run index first");
  const GalleryIndex index = load_index(ipath.string());
  if (index.entries.empty()) throw std::runtime_error("index has no entries");

  TrainingData data;
  const int ring_count = static_cast<int>(index.group_ids.size());
  const int views_per_ring = static_cast<int>(index.entries.front().groups.front().size());
  for (const auto& e : index.entries) {
    std::vector<std::vector<float>> views;
    for (const auto& g : e.groups) {
      for (const auto& f : g) views.push_back(f.values);
    }
    data.objects.push_back(ring_features(views, ring_count, views_per_ring));
  }

  const fs::path manifest = cfg.output_dir / "sketches" / "manifest.jsonl";
  std::istringstream lines(read_text_file(manifest));
  std::vector<json> records;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw std::runtime_error("malformed line in " + manifest.string() + ": " + e.what());
    }
  }
  // A sampled view can lose all of its edges; such sketches carry no signal and are dropped.
  std::vector<std::optional<TrainingPair>> pairs(records.size());
  parallel_for(records.size(), cfg.threads, [&](std::size_t i) {
    const auto& r = records[i];
    ViewImage img;
    try {
      img = prepare_query(read_png((cfg.output_dir / r.at("query_image_path").get<std::string>()).string()), cfg);
    } catch (const EmptySketchError&) {
      return;
    }
    const FeatureVector f = compute_descriptor(img, index.descriptor);
    TrainingPair p;
    p.sketch = Eigen::Map<const Eigen::VectorXf>(f.values.data(), static_cast<Eigen::Index>(f.size())).cast<double>();
    p.object = index.find(r.at("object_id").get<std::string>());
    p.label = static_cast<int>(p.object);
    pairs[i] = std::move(p);
  });
  for (auto& p : pairs) {
    if (p) data.pairs.push_back(std::move(*p));
  }

  TrainConfig tc = cfg.train;
  const int dim = static_cast<int>(index.entries.front().groups.front().front().size());
  tc.model.object_feature_dim = dim;
  tc.model.sketch_feature_dim = dim;
  tc.model.ring_count = ring_count;
  tc.model.views_per_ring = views_per_ring;
  auto folds = train_kfold(data, tc);

  fs::create_directories(cfg.output_dir / "checkpoints");
  for (std::size_t k = 0; k < folds.size(); ++k) {
    save_checkpoint(folds[k].model, (cfg.output_dir / "checkpoints" / ("fold" + std::to_string(k) + ".skck")).string(),
                    {{"fold", k}, {"descriptor", tag_name(index.descriptor.tag)}, {"validation", folds[k].validation}});
  }
  write_text_file(cfg.output_dir / "training_log.csv", training_log_csv(folds));
  return folds;
}

std::vector<Model> load_fold_models(const PipelineConfig& cfg) {
  std::vector<Model> models;
  for (int k = 0;; ++k) {
    const fs::path p = cfg.output_dir / "checkpoints" / ("fold" + std::to_string(k) + ".skck");
    if (!fs::exists(p)) break;
    models.push_back(load_checkpoint(p.string()));
  }
  if (models.empty()) throw std::runtime_error("no checkpoints under " + (cfg.output_dir / "checkpoints").string());
  return models;
}

std::shared_ptr<const GalleryIndex> ScorerFactory::index(DescriptorTag tag) {
  auto& slot = indexes_[tag];
  if (!slot) {
    const fs::path p = index_path(cfg_, tag);
    if (!fs::exists(p)) throw std::runtime_error("index not found: " + p.string() + "; run index first");
    slot = std::make_shared<const GalleryIndex>(load_index(p.string()));
  }
  return slot;
}

std::shared_ptr<const Scorer> ScorerFactory::make(const std::string& spec) {
  const ScorerSpec s = parse_spec(spec, cfg_.descriptor.tag);
  const std::string key = spec_key(s);
  if (auto it = scorers_.find(key); it != scorers_.end()) return it->second;
  std::shared_ptr<const Scorer> scorer;
  if (s.kind == "fused") {
    scorer = std::make_shared<const FusedScorer>(make(cfg_.retrieval.fuse_a), make(cfg_.retrieval.fuse_b),
                                                 cfg_.retrieval.alpha);
  } else if (s.kind == "embedding") {
    if (models_.empty()) models_ = load_fold_models(cfg_);
    scorer = std::make_shared<const EmbeddingScorer>(index(s.tag), models_);
  } else {
    scorer = std::make_shared<const DescriptorScorer>(index(s.tag),
                                                      s.kind == "min_l2" ? Aggregation::MinL2 : Aggregation::Top6SumMax);
  }
  scorers_[key] = scorer;
  return scorer;
}

std::vector<RankedList> cmd_retrieve(const PipelineConfig& cfg) {
  const auto files = list_files(cfg.queries_dir, ".png");
  if (files.empty()) throw std::runtime_error("no query PNGs in " + cfg.queries_dir.string());
  ScorerFactory factory(cfg);
  const auto scorer = factory.make(cfg.retrieval.scorer);
  std::vector<RankedList> lists(files.size());
  parallel_for(files.size(), cfg.threads, [&](std::size_t i) {
    try {
      lists[i] = rank(files[i].stem().string(), prepare_query(read_png(files[i].string()), cfg), *scorer,
                      cfg.retrieval.tta_flip);
    } catch (const EmptySketchError&) {
      throw std::runtime_error("query " + files[i].filename().string() + ": empty sketch");
    }
  });
  write_text_file(cfg.output_dir / "rankings.csv", rankings_csv(lists));
  write_text_file(cfg.output_dir / "rankings.json", rankings_json(lists).dump(2) + "\n");
  return lists;
}

std::vector<RankedList> parse_rankings_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || (line != "query_id,rank,object_id,score" && line != "query_id,rank,object_id,score\r")) {
    throw std::runtime_error("rankings CSV: missing header");
  }
  std::vector<RankedList> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 4) throw std::runtime_error("rankings CSV line " + std::to_string(line_no) + ": expected 4 columns");
    if (out.empty() || out.back().query_id != cols[0]) out.push_back({cols[0], ScoreOrder::HigherIsBetter, {}});
    std::size_t rank = 0;
    double score = 0.0;
    try {
      rank = std::stoul(cols[1]);
      score = std::stod(cols[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("rankings CSV line " + std::to_string(line_no) + ": bad number");
    }
    if (rank != out.back().ranking.size() + 1) {
      throw std::runtime_error("rankings CSV line " + std::to_string(line_no) + ": ranks must be consecutive");
    }
    out.back().ranking.push_back({cols[2], score});
  }
  return out;
}

MetricsReport cmd_evaluate(const PipelineConfig& cfg) {
  if (cfg.ground_truth.empty() || !fs::exists(cfg.ground_truth)) {
    throw std::runtime_error("ground truth file not found: " + cfg.ground_truth.string());
  }
  const fs::path rpath = cfg.output_dir / "rankings.csv";
  if (!fs::exists(rpath)) throw std::runtime_error("rankings not found: " + rpath.string() + "; run retrieve first");
  const auto lists = parse_rankings_csv(read_text_file(rpath));
  ScorerFactory factory(cfg);
  const GroundTruth gt = load_ground_truth_csv(cfg.ground_truth.string(), factory.index(cfg.descriptor.tag)->entries.size());
  const MetricsReport report = evaluate_all(lists, gt, cfg.evaluation);
  write_text_file(cfg.output_dir / "leaderboard.csv", leaderboard_csv({{cfg.run_name, report}}));
  write_text_file(cfg.output_dir / "per_query.csv", per_query_csv(report));
  write_text_file(cfg.output_dir / "pr_curve.csv", pr_curve_csv(pr_curve_11pt(lists, gt)));
  const auto& m = report.mean;
  const json metrics = {{"run", cfg.run_name}, {"queries", report.per_query.size()},
                        {"NN", m.nn},          {"P@10", m.p_at_10},
                        {"NDCG", m.ndcg},      {"mAP", m.map},
                        {"FT", m.ft},          {"ST", m.st},
                        {"FR", m.fr}};
  write_text_file(cfg.output_dir / "metrics.json", metrics.dump(2) + "\n");
  return report;
}

ViewImage held_out_query(const Mesh& mesh, double elevation_deg, double azimuth_deg, const RenderConfig& render,
                         const SketchParams& sp, double removal_fraction, Rng& rng) {
  const ViewImage shaded = render_shaded(mesh, orbit_pose(elevation_deg, azimuth_deg, render.distance), render.raster);
  ViewImage out = invert(random_edge_removal(canny(shaded, sp), removal_fraction, rng));
  out.kind = ImageKind::Sketch;
  return out;
}

json cmd_synth(const fs::path& dir, int count, std::uint64_t seed) {
  const auto meshes = synthetic_corpus(count, seed);
  const RenderConfig render;
  const SketchParams sp;
  GroundTruth gt;
  gt.gallery_size = meshes.size();
  json queries = json::array();
  fs::create_directories(dir / "meshes");
  fs::create_directories(dir / "queries");
  for (const auto& m : meshes) {
    save_obj(m, (dir / "meshes" / (m.id + ".obj")).string());
    Rng rng(derive_seed(seed, "query:" + m.id));
    const double azimuth = uniform_real(rng, 0.0, 360.0);
    const std::string qid = "q_" + m.id;
    write_png(held_out_query(m, 0.0, azimuth, render, sp, 0.2, rng), (dir / "queries" / (qid + ".png")).string());
    gt.relevant[qid].insert(m.id);
    queries.push_back({{"query_id", qid}, {"object_id", m.id}, {"elevation", 0.0}, {"azimuth", azimuth}});
  }
  write_text_file(dir / "gt.csv", ground_truth_csv(gt));
  const json config = {{"mesh_dir", "meshes"},
                       {"queries_dir", "queries"},
                       {"ground_truth", "gt.csv"},
                       {"output_dir", "out"},
                       {"seed", seed},
                       {"descriptor", {{"tag", "grid"}}},
                       {"retrieval", {{"scorer", "min_l2"}}}};
  write_text_file(dir / "config.json", config.dump(2) + "\n");
  return {{"objects", meshes.size()}, {"queries", queries}};
}

}  // namespace sketchret
