// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "celebbasis/celebbasis.hpp"

namespace celeb::testing {

inline std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(CELEBBASIS_FIXTURE_DIR) / relative;
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "celebbasis-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Two-word names with distinct tokens in both slots.
inline NameList toy_names(int n) {
  NameList list;
  for (int i = 0; i < n; ++i) list.names.push_back("given" + std::to_string(i) + " family" + std::to_string(i));
  list.source_path = "<toy>";
  return list;
}

/// Small encoder, backends and basis that fit in unit-test time budgets.
struct ToyWorld {
  BackendConfig config;
  Backends backends;
  std::unique_ptr<CelebBasis> basis;

  ToyWorld(int d, int p, int names = 24, std::uint64_t seed = 7) {
    config.dim = d;
    config.encoder_seed = seed;
    config.backend_seed = seed;
    backends = make_backends(config);
    const DictionaryBuild dict = embed_names(toy_names(names), *backends.text_encoder);
    const auto [first, second] = build_sets(dict.pairs);
    basis = std::make_unique<CelebBasis>(build_basis(first, second, p, seed));
  }
};

inline Image test_face(const std::string& name = "alice") { return read_ppm(fixture("faces/" + name + ".ppm")); }

inline Image gradient_image(int w, int h) {
  Image im(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < Image::kChannels; ++c)
        im.at(x, y, c) = static_cast<float>((x + 2 * y + 5 * c) % 17) / 16.0f;
  return im;
}

}  // namespace celeb::testing
