// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace celeb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using TokenId = std::uint64_t;

/// Latent tensor laid out channel-major (c, h, w).
struct Latent {
  int channels = 0;
  int height = 0;
  int width = 0;
  Vec values;

  Eigen::Index size() const { return values.size(); }
  bool same_shape(const Latent& other) const {
    return channels == other.channels && height == other.height && width == other.width;
  }
};

}  // namespace celeb
