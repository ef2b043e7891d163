// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/noise_schedule.hpp"

#include <cmath>

#include "celebbasis/error.hpp"

namespace celeb {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw DataError("noise schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw DataError("noise schedule betas must satisfy 0 < start <= end < 1");
  }
  NoiseSchedule s;
  s.betas.resize(steps);
  s.alpha_bars.resize(steps);
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    s.betas[i] = steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * i / (steps - 1);
    running *= 1.0 - s.betas[i];
    s.alpha_bars[i] = running;
  }
  return s;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 1 || t > steps()) {
    throw DataError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
  }
  return alpha_bars[static_cast<std::size_t>(t - 1)];
}

Latent noise_image(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& schedule) {
  if (!z0.same_shape(eps) || z0.size() != eps.size()) throw DataError("noise_image: latent and noise shapes differ");
  const double abar = schedule.alpha_bar(t);
  Latent out = z0;
  out.values = std::sqrt(abar) * z0.values + std::sqrt(1.0 - abar) * eps.values;
  return out;
}

}  // namespace celeb
