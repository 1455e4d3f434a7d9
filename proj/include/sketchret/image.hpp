#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sketchret {

enum class ImageKind { Shaded, Silhouette, Edge, Sketch };

/// Single-channel 8-bit raster, row-major. Edge and sketch images are binary {0, 255}.
struct ViewImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  ImageKind kind = ImageKind::Shaded;

  ViewImage() = default;
  ViewImage(int w, int h, std::uint8_t fill = 0, ImageKind k = ImageKind::Shaded);

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  /// Border-replicating read.
  std::uint8_t clamped(int x, int y) const;

  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
  bool operator==(const ViewImage&) const = default;
};

bool is_binary(const ViewImage& img);
std::size_t count_nonzero(const ViewImage& img);
double mean_intensity(const ViewImage& img);

ViewImage flip_horizontal(const ViewImage& img);

/// Rotates about the image center with nearest-neighbour sampling; uncovered pixels take `fill`.
ViewImage rotate_image(const ViewImage& img, double degrees, std::uint8_t fill);

/// Nearest-neighbour resize.
ViewImage resize_nearest(const ViewImage& img, int width, int height);

std::string_view kind_name(ImageKind kind);

// PNG / PGM codecs. Decoding converts any PNG colour type to 8-bit grey.

class ImageDecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_png(const ViewImage& img);
ViewImage decode_png(std::span<const std::uint8_t> bytes);
void write_png(const ViewImage& img, const std::string& path);
ViewImage read_png(const std::string& path);

std::vector<std::uint8_t> encode_pgm(const ViewImage& img);
ViewImage decode_pgm(std::span<const std::uint8_t> bytes);
void write_pgm(const ViewImage& img, const std::string& path);

}  // namespace sketchret
