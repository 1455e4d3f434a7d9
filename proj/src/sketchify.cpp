#include "sketchret/sketchify.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sketchret {

void SketchParams::validate() const {
  if (canny_low < 0.0 || canny_high < 0.0 || laplacian_threshold < 0.0 || gaussian_sigma < 0.0 ||
      dilation_radius < 0) {
    throw std::invalid_argument("sketch params: thresholds must be non-negative");
  }
  if (!(canny_low < canny_high)) throw std::invalid_argument("sketch params: canny_low must be < canny_high");
}

namespace {

struct FloatImage {
  int width;
  int height;
  std::vector<double> v;

  double clamped(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return v[static_cast<std::size_t>(y) * width + x];
  }
};

FloatImage to_float(const ViewImage& img) {
  FloatImage f{img.width, img.height, std::vector<double>(img.pixels.begin(), img.pixels.end())};
  return f;
}

FloatImage gaussian_blur(const FloatImage& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  FloatImage tmp{in.width, in.height, std::vector<double>(in.v.size())};
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * in.clamped(x + i, y);
      tmp.v[static_cast<std::size_t>(y) * in.width + x] = acc;
    }
  }
  FloatImage out{in.width, in.height, std::vector<double>(in.v.size())};
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.clamped(x, y + i);
      out.v[static_cast<std::size_t>(y) * in.width + x] = acc;
    }
  }
  return out;
}

}  // namespace

ViewImage canny(const ViewImage& img, const SketchParams& p) {
  p.validate();
  const int w = img.width;
  const int h = img.height;
  ViewImage out(w, h, 0, ImageKind::Edge);
  if (img.empty()) return out;

  const FloatImage blurred = gaussian_blur(to_float(img), p.gaussian_sigma);
  std::vector<double> mag(blurred.v.size());
  std::vector<std::uint8_t> sector(blurred.v.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto b = [&](int dx, int dy) { return blurred.clamped(x + dx, y + dy); };
      const double gx = (b(1, -1) + 2 * b(1, 0) + b(1, 1)) - (b(-1, -1) + 2 * b(-1, 0) + b(-1, 1));
      const double gy = (b(-1, 1) + 2 * b(0, 1) + b(1, 1)) - (b(-1, -1) + 2 * b(0, -1) + b(1, -1));
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      mag[idx] = std::hypot(gx, gy);
      double angle = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
      if (angle < 0.0) angle += 180.0;
      // 0: horizontal gradient, 1: down-right diagonal, 2: vertical, 3: down-left diagonal
      sector[idx] = angle < 22.5 || angle >= 157.5 ? 0 : angle < 67.5 ? 1 : angle < 112.5 ? 2 : 3;
    }
  }

  static constexpr int kDx[4] = {1, 1, 0, -1};
  static constexpr int kDy[4] = {0, 1, 1, 1};
  auto mag_at = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y) * w + x];
  };

  // 0 = none, 1 = weak, 2 = strong
  std::vector<std::uint8_t> cls(mag.size(), 0);
  std::vector<std::size_t> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      const double m = mag[idx];
      if (m <= p.canny_low) continue;
      const int s = sector[idx];
      // Asymmetric comparison keeps exactly one of two equal ridge pixels.
      if (!(m > mag_at(x - kDx[s], y - kDy[s]) && m >= mag_at(x + kDx[s], y + kDy[s]))) continue;
      if (m > p.canny_high) {
        cls[idx] = 2;
        stack.push_back(idx);
      } else {
        cls[idx] = 1;
      }
    }
  }

  while (!stack.empty()) {
    const std::size_t idx = stack.back();
    stack.pop_back();
    out.pixels[idx] = 255;
    const int x = static_cast<int>(idx % w);
    const int y = static_cast<int>(idx / w);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
        if (cls[n] == 1) {
          cls[n] = 2;
          stack.push_back(n);
        }
      }
    }
  }
  return out;
}

ViewImage laplacian_edge(const ViewImage& img, const SketchParams& p) {
  p.validate();
  ViewImage out(img.width, img.height, 0, ImageKind::Edge);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int response = 4 * img.at(x, y) - img.clamped(x - 1, y) - img.clamped(x + 1, y) -
                           img.clamped(x, y - 1) - img.clamped(x, y + 1);
      if (std::abs(response) > p.laplacian_threshold) out.at(x, y) = 255;
    }
  }
  return out;
}

ViewImage dilate(const ViewImage& img, int radius) {
  if (radius < 0) throw std::invalid_argument("dilate: negative radius");
  if (!is_binary(img)) throw std::invalid_argument("dilate: input is not binary");
  if (radius == 0 || img.empty()) return img;
  const int w = img.width;
  const int h = img.height;
  ViewImage rows(w, h, 0, img.kind);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (img.at(x, y) == 0) continue;
      for (int k = std::max(0, x - radius); k <= std::min(w - 1, x + radius); ++k) rows.at(k, y) = 255;
    }
  }
  ViewImage out(w, h, 0, img.kind);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (rows.at(x, y) == 0) continue;
      for (int k = std::max(0, y - radius); k <= std::min(h - 1, y + radius); ++k) out.at(x, k) = 255;
    }
  }
  return out;
}

ViewImage invert(const ViewImage& img) {
  ViewImage out = img;
  for (auto& v : out.pixels) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

ViewImage crop_to_content(const ViewImage& img, int out_size, int pad) {
  const int inner = out_size - 2 * pad;
  if (pad < 0 || inner <= 0) throw std::invalid_argument("crop_to_content: padding leaves no room");
  int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) < 128) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) throw EmptySketchError();

  const int bw = x1 - x0 + 1;
  const int bh = y1 - y0 + 1;
  const int side = std::max(bw, bh);
  const int sx0 = x0 - (side - bw) / 2;
  const int sy0 = y0 - (side - bh) / 2;

  ViewImage square(side, side, 0, ImageKind::Sketch);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int ix = sx0 + x;
      const int iy = sy0 + y;
      if (ix >= 0 && iy >= 0 && ix < img.width && iy < img.height && img.at(ix, iy) < 128) {
        square.at(x, y) = 255;
      }
    }
  }
  const ViewImage scaled = resize_nearest(square, inner, inner);
  ViewImage out(out_size, out_size, 0, ImageKind::Sketch);
  for (int y = 0; y < inner; ++y) {
    for (int x = 0; x < inner; ++x) out.at(x + pad, y + pad) = scaled.at(x, y);
  }
  return out;
}

ViewImage random_edge_removal(const ViewImage& img, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("random_edge_removal: fraction outside [0,1]");
  constexpr std::size_t kMinSegment = 8;
  constexpr std::size_t kMaxSegment = 24;
  const int w = img.width;
  const int h = img.height;

  // Strokes as 8-connected components, each listed in depth-first traversal order.
  std::vector<std::vector<std::size_t>> units;
  std::vector<bool> seen(img.size(), false);
  std::size_t total = 0;
  for (std::size_t start = 0; start < img.size(); ++start) {
    if (img.pixels[start] == 0 || seen[start]) continue;
    std::vector<std::size_t> stroke;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      stroke.push_back(idx);
      const int x = static_cast<int>(idx % w);
      const int y = static_cast<int>(idx / w);
      for (int dy = 1; dy >= -1; --dy) {
        for (int dx = 1; dx >= -1; --dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
          if (img.pixels[n] != 0 && !seen[n]) {
            seen[n] = true;
            stack.push_back(n);
          }
        }
      }
    }
    total += stroke.size();
    if (stroke.size() <= kMaxSegment) {
      units.push_back(std::move(stroke));
      continue;
    }
    // Split long strokes at random cut points along the traversal.
    std::size_t pos = 0;
    while (pos < stroke.size()) {
      std::size_t len = kMinSegment + uniform_index(rng, kMaxSegment - kMinSegment + 1);
      len = std::min(len, stroke.size() - pos);
      units.emplace_back(stroke.begin() + static_cast<std::ptrdiff_t>(pos),
                         stroke.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
  }

  const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  ViewImage out = img;
  shuffle(units.begin(), units.end(), rng);
  std::size_t removed = 0;
  for (const auto& unit : units) {
    if (removed >= target) break;
    const std::size_t take = std::min(unit.size(), target - removed);
    for (std::size_t i = 0; i < take; ++i) out.pixels[unit[i]] = 0;
    removed += take;
  }
  return out;
}

ViewImage sketchify_view(const ViewImage& shaded, const SketchParams& p) {
  return sketchify_view(shaded, p, p.method);
}

ViewImage sketchify_view(const ViewImage& shaded, const SketchParams& p, EdgeMethod method) {
  ViewImage edges = method == EdgeMethod::Canny ? canny(shaded, p) : laplacian_edge(invert(shaded), p);
  ViewImage sketch = invert(edges);
  sketch.kind = ImageKind::Sketch;
  return sketch;
}

ViewImage preprocess_sketch(const ViewImage& sketch, const SketchParams& sketch_params,
                            const PreprocessParams& p) {
  return dilate(crop_to_content(sketch, p.out_size, p.pad), sketch_params.dilation_radius);
}

}  // namespace sketchret
