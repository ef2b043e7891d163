// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "celebbasis/backends.hpp"
#include "celebbasis/celeb_basis.hpp"
#include "celebbasis/identity_mapper.hpp"
#include "celebbasis/image.hpp"
#include "celebbasis/noise_schedule.hpp"
#include "celebbasis/prompt.hpp"
#include "celebbasis/rng.hpp"

namespace celeb {

struct AugmentConfig {
  bool horizontal_flip = true;
  /// Per-channel gain in [1-s, 1+s] and bias in [-s, s].
  double jitter_strength = 0.2;
  double scale_min = 0.1;
  double scale_max = 1.0;
  bool shift = true;

  static AugmentConfig disabled();
  void validate() const;
};

/// Flip, colour jitter, then rescale and paste onto a black canvas of the
/// original size, at a random offset when `shift` is on (centred otherwise).
Image augment(const Image& image, const AugmentConfig& config, Rng& rng);

enum class TrainMode { kMlp, kDirectCoeffs };
enum class OptimizerKind { kSgd, kMomentum, kAdam };

struct TrainConfig {
  double learning_rate = 0.005;
  int batch_size = 2;
  int steps = 400;
  std::uint64_t seed = 0;
  AugmentConfig augmentation;
  TrainMode mode = TrainMode::kMlp;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  int p = 512;

  static constexpr int kJointSteps = 2500;
  static TrainConfig joint_defaults();
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Uniform over [1, T].
int sample_timestep(Rng& rng, int steps);

/// Mean over all elements of (eps - eps_hat)^2. Throws TrainingError when
/// the prediction or the loss is not finite.
double denoising_loss(const Denoiser& denoiser, const Latent& z_t, int t, const Mat& condition,
                      const Latent& eps);

/// One draw of the denoising objective.
struct DenoisingSample {
  int template_index = 0;
  Latent z0;
  int t = 1;
  Latent eps;
};

/// Loss and gradients through coefficients -> basis synthesis ->
/// placeholder substitution -> text transform -> denoiser -> loss.
class IdentityObjective {
 public:
  IdentityObjective(const CelebBasis& basis, const Backends& backends,
                    std::vector<PromptTemplate> templates = training_prompts());

  const std::vector<PromptTemplate>& templates() const { return templates_; }

  /// Loss for fixed coefficients; fills dL/da when `grad` is non-null.
  double loss(const IdentityCoefficients& coeffs, const DenoisingSample& sample,
              IdentityCoefficients* grad = nullptr) const;

  /// Loss for a mapping network applied to `feature`; fills the parameter
  /// gradient when `grad` is non-null.
  double loss(const MappingNetwork& net, const Vec& feature, const DenoisingSample& sample,
              MappingGradient* grad = nullptr) const;

  /// Draws template, augmentation, timestep and noise.
  DenoisingSample draw(const Image& image, const AugmentConfig& augmentation, Rng& rng) const;

 private:
  const CelebBasis& basis_;
  const Backends& backends_;
  std::vector<PromptTemplate> templates_;
};

struct StepRecord {
  int step = 0;
  double loss = 0.0;
  std::string label;
};

std::string format_step(const StepRecord& record);

struct LabeledImage {
  std::string label;
  Image image;
};

struct TrainResult {
  MappingNetwork network;
  std::vector<std::string> labels;
  std::vector<IdentityCoefficients> coefficients;  // aligned with labels
  std::vector<StepRecord> log;                     // one record per batch element
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Optimizes only the mapping network (or, in kDirectCoeffs mode, the raw
/// coefficients). Returns coefficients mapped from the clean image.
TrainResult train_single(const Image& image, const CelebBasis& basis, const Backends& backends,
                         const TrainConfig& config, const std::string& label = "ID",
                         const StepCallback& on_step = {});

/// One shared network over several labelled images. Labels must be unique.
TrainResult train_joint(std::span<const LabeledImage> images, const CelebBasis& basis,
                        const Backends& backends, const TrainConfig& config,
                        const StepCallback& on_step = {});

/// Mean loss over `samples` fixed draws (seeded by `probe_seed`) of the
/// image, for before/after comparisons.
double probe_loss(const IdentityObjective& objective, const IdentityCoefficients& coeffs,
                  const Image& image, std::uint64_t probe_seed, int samples,
                  const AugmentConfig& augmentation = AugmentConfig::disabled());

/// Byte digests of every parameter that must stay frozen.
struct FrozenSnapshot {
  std::map<std::string, std::uint64_t> digests;
};

FrozenSnapshot snapshot_frozen(const Backends& backends, const CelebBasis& basis);

struct AuditReport {
  std::vector<std::string> changed;
  bool clean() const { return changed.empty(); }
};

/// Lists parameters whose bytes differ (or that appear in only one snapshot).
AuditReport frozen_audit(const FrozenSnapshot& before, const FrozenSnapshot& after);

}  // namespace celeb
