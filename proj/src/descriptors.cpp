#include "sketchret/descriptors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace sketchret {

std::string_view tag_name(DescriptorTag tag) {
  switch (tag) {
    case DescriptorTag::Hog: return "hog";
    case DescriptorTag::Grid: return "grid";
    case DescriptorTag::Embed: return "embed";
  }
  return "?";
}

DescriptorTag parse_tag(std::string_view name) {
  if (name == "hog") return DescriptorTag::Hog;
  if (name == "grid") return DescriptorTag::Grid;
  if (name == "embed") return DescriptorTag::Embed;
  throw std::invalid_argument("unknown descriptor '" + std::string(name) + "'");
}

bool FeatureVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](float v) { return v == 0.0f; });
}

std::size_t hog_length(int width, int height, const HogParams& p) {
  const int cx = width / p.cell;
  const int cy = height / p.cell;
  if (cx < p.block || cy < p.block) return 0;
  return static_cast<std::size_t>(cx - p.block + 1) * (cy - p.block + 1) * p.block * p.block * p.bins;
}

FeatureVector hog(const ViewImage& img, const HogParams& p) {
  if (p.cell < 1 || p.block < 1 || p.bins < 1) throw std::invalid_argument("hog: bad parameters");
  if (img.width % p.cell != 0 || img.height % p.cell != 0) {
    throw std::invalid_argument("hog: image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                " not divisible by cell size " + std::to_string(p.cell));
  }
  const int cx = img.width / p.cell;
  const int cy = img.height / p.cell;
  if (cx < p.block || cy < p.block) throw std::invalid_argument("hog: image smaller than one block");

  std::vector<double> cells(static_cast<std::size_t>(cx) * cy * p.bins, 0.0);
  const double bin_width = 180.0 / p.bins;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double gx = static_cast<double>(img.clamped(x + 1, y)) - img.clamped(x - 1, y);
      const double gy = static_cast<double>(img.clamped(x, y + 1)) - img.clamped(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const double pos = angle / bin_width;
      const double base = std::floor(pos);
      const double frac = pos - base;
      const int lo = static_cast<int>(base) % p.bins;
      const int hi = (lo + 1) % p.bins;
      double* h = &cells[(static_cast<std::size_t>(y / p.cell) * cx + x / p.cell) * p.bins];
      h[lo] += mag * (1.0 - frac);
      h[hi] += mag * frac;
    }
  }

  constexpr double kEps = 1e-6;
  FeatureVector out{DescriptorTag::Hog, {}};
  out.values.reserve(hog_length(img.width, img.height, p));
  std::vector<double> block(static_cast<std::size_t>(p.block) * p.block * p.bins);
  for (int by = 0; by + p.block <= cy; ++by) {
    for (int bx = 0; bx + p.block <= cx; ++bx) {
      std::size_t k = 0;
      double norm2 = 0.0;
      for (int j = 0; j < p.block; ++j) {
        for (int i = 0; i < p.block; ++i) {
          const double* h = &cells[(static_cast<std::size_t>(by + j) * cx + bx + i) * p.bins];
          for (int b = 0; b < p.bins; ++b) {
            block[k++] = h[b];
            norm2 += h[b] * h[b];
          }
        }
      }
      const double scale = 1.0 / std::sqrt(norm2 + kEps * kEps);
      for (double v : block) out.values.push_back(static_cast<float>(v * scale));
    }
  }
  return out;
}

FeatureVector grid_feature(const ViewImage& img) {
  FeatureVector out{DescriptorTag::Grid, std::vector<float>(16, 0.0f)};
  std::array<double, 16> sums{};
  double total = 0.0;
  for (int y = 0; y < img.height; ++y) {
    const int gy = std::min(3, y * 4 / img.height);
    for (int x = 0; x < img.width; ++x) {
      const int gx = std::min(3, x * 4 / img.width);
      sums[gy * 4 + gx] += img.at(x, y);
      total += img.at(x, y);
    }
  }
  if (total == 0.0) return out;
  for (int i = 0; i < 16; ++i) out.values[i] = static_cast<float>(sums[i] / total);
  return out;
}

FeatureVector compute_descriptor(const ViewImage& img, const DescriptorParams& p) {
  switch (p.tag) {
    case DescriptorTag::Hog: return hog(img, p.hog);
    case DescriptorTag::Grid: return grid_feature(img);
    case DescriptorTag::Embed: break;
  }
  throw std::invalid_argument("compute_descriptor: embeddings are produced by a trained model");
}

double cosine_sim(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_sim: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine_sim: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double cosine_sim(const FeatureVector& u, const FeatureVector& v) { return cosine_sim(u.values, v.values); }

double l2_distance(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw std::invalid_argument("l2_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = static_cast<double>(u[i]) - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double l2_distance(const FeatureVector& u, const FeatureVector& v) { return l2_distance(u.values, v.values); }

}  // namespace sketchret
