#include "sketchret/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sketchret {

ViewImage::ViewImage(int w, int h, std::uint8_t fill, ImageKind k)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill), kind(k) {
  if (w < 0 || h < 0) throw std::invalid_argument("negative image dimensions");
}

std::uint8_t ViewImage::clamped(int x, int y) const {
  x = std::clamp(x, 0, width - 1);
  y = std::clamp(y, 0, height - 1);
  return at(x, y);
}

bool is_binary(const ViewImage& img) {
  return std::all_of(img.pixels.begin(), img.pixels.end(),
                     [](std::uint8_t v) { return v == 0 || v == 255; });
}

std::size_t count_nonzero(const ViewImage& img) {
  return static_cast<std::size_t>(
      std::count_if(img.pixels.begin(), img.pixels.end(), [](std::uint8_t v) { return v != 0; }));
}

double mean_intensity(const ViewImage& img) {
  if (img.empty()) return 0.0;
  const double sum = std::accumulate(img.pixels.begin(), img.pixels.end(), 0.0);
  return sum / static_cast<double>(img.size());
}

ViewImage flip_horizontal(const ViewImage& img) {
  ViewImage out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
  }
  return out;
}

ViewImage rotate_image(const ViewImage& img, double degrees, std::uint8_t fill) {
  ViewImage out(img.width, img.height, fill, img.kind);
  const double r = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(r);
  const double s = std::sin(r);
  const double cx = 0.5 * img.width;
  const double cy = 0.5 * img.height;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // inverse-map the destination pixel center into the source
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      if (ix >= 0 && iy >= 0 && ix < img.width && iy < img.height) out.at(x, y) = img.at(ix, iy);
    }
  }
  return out;
}

ViewImage resize_nearest(const ViewImage& img, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("resize_nearest: bad target size");
  if (img.empty()) throw std::invalid_argument("resize_nearest: empty source");
  ViewImage out(width, height, 0, img.kind);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(img.height - 1, static_cast<int>((y + 0.5) * img.height / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(img.width - 1, static_cast<int>((x + 0.5) * img.width / width));
      out.at(x, y) = img.at(sx, sy);
    }
  }
  return out;
}

std::string_view kind_name(ImageKind kind) {
  switch (kind) {
    case ImageKind::Shaded: return "shaded";
    case ImageKind::Silhouette: return "silhouette";
    case ImageKind::Edge: return "edge";
    case ImageKind::Sketch: return "sketch";
  }
  return "?";
}

}  // namespace sketchret
