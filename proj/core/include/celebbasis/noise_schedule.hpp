// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "celebbasis/types.hpp"

namespace celeb {

/// Forward-process schedule. Timesteps are 1-based: t in [1, T].
struct NoiseSchedule {
  std::vector<double> betas;
  std::vector<double> alpha_bars;

  static NoiseSchedule linear(int steps = 1000, double beta_start = 1e-4, double beta_end = 2e-2);

  int steps() const { return static_cast<int>(betas.size()); }
  double alpha_bar(int t) const;
};

/// z_t = sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps
Latent noise_image(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& schedule);

}  // namespace celeb
