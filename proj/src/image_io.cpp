#include "sketchret/image.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace sketchret {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ViewImage& img) {
  if (img.empty()) throw std::invalid_argument("encode_png: empty image");
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(img.width);
  desc.height = static_cast<png_uint_32>(img.height);
  desc.format = PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode: ") + desc.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&desc, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode: ") + desc.message);
  }
  out.resize(size);
  return out;
}

ViewImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image desc;
  std::memset(&desc, 0, sizeof desc);
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw ImageDecodeError(std::string("png decode: ") + desc.message);
  }
  desc.format = PNG_FORMAT_GRAY;
  ViewImage img(static_cast<int>(desc.width), static_cast<int>(desc.height), 0, ImageKind::Sketch);
  // Transparent pixels composite onto white, the sketch background.
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&desc, &white, img.pixels.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw ImageDecodeError(std::string("png decode: ") + desc.message);
  }
  return img;
}

void write_png(const ViewImage& img, const std::string& path) { write_file(path, encode_png(img)); }

ViewImage read_png(const std::string& path) { return decode_png(read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const ViewImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

ViewImage decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
  };
  if (next_token() != "P5") throw ImageDecodeError("pgm decode: not a binary PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ImageDecodeError("pgm decode: bad header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw ImageDecodeError("pgm decode: unsupported header");
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n) throw ImageDecodeError("pgm decode: truncated data");
  ViewImage img(w, h);
  std::memcpy(img.pixels.data(), bytes.data() + pos, n);
  return img;
}

void write_pgm(const ViewImage& img, const std::string& path) { write_file(path, encode_pgm(img)); }

}  // namespace sketchret
