// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace celeb {

/// RGB image with interleaved float samples in [0, 1], row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  static constexpr int kChannels = 3;

  Image() = default;
  Image(int w, int h, float fill = 0.0f);

  float& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c]; }
  float at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  bool empty() const { return pixels.empty(); }
  double mean() const;

  bool operator==(const Image&) const = default;
};

/// Content hash over the raw sample bits.
std::uint64_t content_hash(const Image& image);

/// Binary PPM (P6, maxval 255). Samples are quantized on write.
Image read_ppm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_ppm(const Image& image);
Image decode_ppm(std::span<const std::uint8_t> bytes);
void write_ppm(const std::filesystem::path& path, const Image& image);

/// Bilinear resize.
Image resize(const Image& image, int width, int height);
Image flip_horizontal(const Image& image);

/// Contact sheet laid out row-major with `columns` tiles per row.
Image make_grid(std::span<const Image> images, int columns);

}  // namespace celeb
