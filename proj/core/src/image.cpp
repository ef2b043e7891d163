// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "celebbasis/binary_io.hpp"
#include "celebbasis/error.hpp"
#include "celebbasis/rng.hpp"

namespace celeb {

Image::Image(int w, int h, float fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * kChannels, fill) {
  if (w < 0 || h < 0) throw DataError("negative image size");
}

double Image::mean() const {
  if (pixels.empty()) return 0.0;
  double sum = 0.0;
  for (float v : pixels) sum += v;
  return sum / static_cast<double>(pixels.size());
}

std::uint64_t content_hash(const Image& image) {
  std::uint64_t h = fnv1a64(std::as_bytes(std::span(&image.width, 1)));
  h = fnv1a64(std::as_bytes(std::span(&image.height, 1)), h);
  return fnv1a64(std::as_bytes(std::span(image.pixels)), h);
}

namespace {

// Reads the next whitespace-delimited header token, skipping comments.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) token.push_back(static_cast<char>(bytes[pos++]));
  return token;
}

int parse_dim(const std::string& token, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size() || v <= 0) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("ppm: bad ") + what + " '" + token + "'");
  }
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P6") throw FormatError("ppm: expected P6 magic");
  const int w = parse_dim(next_token(bytes, pos), "width");
  const int h = parse_dim(next_token(bytes, pos), "height");
  const int maxval = parse_dim(next_token(bytes, pos), "maxval");
  if (maxval != 255) throw FormatError("ppm: only maxval 255 is supported");
  ++pos;  // single whitespace after maxval
  const std::size_t n = static_cast<std::size_t>(w) * h * Image::kChannels;
  if (bytes.size() < pos + n) throw FormatError("ppm: truncated pixel data");
  Image image(w, h);
  for (std::size_t i = 0; i < n; ++i) image.pixels[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
  return image;
}

Image read_ppm(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + image.pixels.size());
  for (float v : image.pixels) {
    const float clamped = std::clamp(v, 0.0f, 1.0f);
    out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0f)));
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  atomic_write_file(path, encode_ppm(image));
}

Image resize(const Image& image, int width, int height) {
  if (width <= 0 || height <= 0) throw DataError("resize: target size must be positive");
  if (image.empty()) throw DataError("resize: empty image");
  Image out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = (1 - wx) * image.at(x0, y0, c) + wx * image.at(x1, y0, c);
        const double bottom = (1 - wx) * image.at(x0, y1, c) + wx * image.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

Image flip_horizontal(const Image& image) {
  Image out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < Image::kChannels; ++c) out.at(image.width - 1 - x, y, c) = image.at(x, y, c);
  return out;
}

Image make_grid(std::span<const Image> images, int columns) {
  if (images.empty()) throw DataError("grid: no images");
  if (columns <= 0) throw DataError("grid: columns must be positive");
  int tile_w = 0;
  int tile_h = 0;
  for (const auto& im : images) {
    tile_w = std::max(tile_w, im.width);
    tile_h = std::max(tile_h, im.height);
  }
  const int n = static_cast<int>(images.size());
  const int cols = std::min(columns, n);
  const int rows = (n + cols - 1) / cols;
  Image sheet(cols * tile_w, rows * tile_h);
  for (int i = 0; i < n; ++i) {
    const int ox = (i % cols) * tile_w;
    const int oy = (i / cols) * tile_h;
    const Image& im = images[i];
    for (int y = 0; y < im.height; ++y)
      for (int x = 0; x < im.width; ++x)
        for (int c = 0; c < Image::kChannels; ++c) sheet.at(ox + x, oy + y, c) = im.at(x, y, c);
  }
  return sheet;
}

}  // namespace celeb
