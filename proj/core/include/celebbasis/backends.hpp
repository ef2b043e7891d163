// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "celebbasis/image.hpp"
#include "celebbasis/noise_schedule.hpp"
#include "celebbasis/types.hpp"

namespace celeb {

inline constexpr int kFaceFeatureDim = 512;

struct AdapterInfo {
  std::string id;
  bool deterministic = true;
  bool concurrency_safe = true;
};

/// A named read-only view of adapter state, consumed by the frozen audit.
struct NamedParameter {
  std::string name;
  std::span<const std::byte> bytes;
};

template <typename T>
std::span<const std::byte> parameter_bytes(const T& dense) {
  return std::as_bytes(std::span(dense.data(), static_cast<std::size_t>(dense.size())));
}

/// Tokenizer, token-embedding table and text transformer.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual AdapterInfo info() const = 0;
  virtual int dim() const = 0;
  virtual int max_length() const = 0;
  /// Token ids of `text` without sequence sentinels.
  virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
  virtual TokenId begin_token() const = 0;
  virtual TokenId end_token() const = 0;
  /// Pure table lookup, one row per id.
  virtual Mat dictionary_embed(std::span<const TokenId> ids) const = 0;
  /// Length-preserving map from token embeddings to the condition tensor.
  virtual Mat transform(const Mat& sequence) const = 0;
  /// Vector-Jacobian product of `transform` at `sequence`.
  virtual Mat transform_vjp(const Mat& sequence, const Mat& grad_output) const = 0;
  virtual std::vector<NamedParameter> parameters() const = 0;
};

/// Noise predictor. Never trained by this library.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual AdapterInfo info() const = 0;
  virtual Latent predict_noise(const Latent& z_t, int t, const Mat& condition) const = 0;
  /// Gradient of <grad_output, predict_noise(z_t, t, condition)> w.r.t. condition.
  virtual Mat condition_vjp(const Latent& z_t, int t, const Mat& condition,
                            const Vec& grad_output) const = 0;
  virtual std::vector<NamedParameter> parameters() const = 0;
};

/// Image <-> latent autoencoder.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual AdapterInfo info() const = 0;
  virtual Latent encode(const Image& image) const = 0;
  virtual Image decode(const Latent& latent) const = 0;
  virtual std::vector<NamedParameter> parameters() const = 0;
};

class FaceEncoder {
 public:
  virtual ~FaceEncoder() = default;
  virtual AdapterInfo info() const = 0;
  /// 512-dim identity feature, or nullopt when no face is found.
  virtual std::optional<Vec> extract(const Image& image) const = 0;
  virtual std::vector<NamedParameter> parameters() const = 0;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual AdapterInfo info() const = 0;
  virtual bool detect(const Image& image) const = 0;
};

/// Image-text similarity (CLIP-score style).
class ImageScorer {
 public:
  virtual ~ImageScorer() = default;
  virtual AdapterInfo info() const = 0;
  virtual double score(const Image& image, std::string_view text) const = 0;
};

struct SamplerParams {
  int steps = 20;
  double guidance = 1.0;
  int image_size = 64;
  /// Condition for classifier-free guidance; ignored when guidance == 1.
  std::optional<Mat> unconditional;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual AdapterInfo info() const = 0;
  virtual Image sample(const Mat& condition, std::uint64_t seed, const SamplerParams& params) const = 0;
};

// ---------------------------------------------------------------------------
// Synthetic implementations.

/// Whitespace tokenizer with FNV-1a token ids. Words longer than
/// `max_piece_bytes` are cut into pieces, standing in for BPE sub-words.
/// Embeddings are N(0, embed_std^2) per entry, drawn from a stream seeded by
/// (seed, token id). The transform multiplies every position by a fixed
/// d x d Gaussian matrix scaled by 1/sqrt(d).
struct SyntheticTextEncoderOptions {
  std::uint64_t seed = 0;
  int dim = 768;
  int max_length = 77;
  int max_piece_bytes = 8;
  double embed_std = 0.02;
};

std::shared_ptr<const TextEncoder> synthetic_text_encoder(const SyntheticTextEncoderOptions& options);
inline std::shared_ptr<const TextEncoder> synthetic_text_encoder(std::uint64_t seed, int dim, int max_length) {
  return synthetic_text_encoder(SyntheticTextEncoderOptions{.seed = seed, .dim = dim, .max_length = max_length});
}

/// Box-filter latent codec: the image is averaged down to the latent grid
/// and its RGB samples become channels 0..2 (mapped to [-1, 1]); channel 3
/// carries luma.
std::shared_ptr<const LatentCodec> toy_latent_codec(int channels = 4, int height = 8, int width = 8);

struct ToyDenoiserOptions {
  std::uint64_t seed = 0;
  int channels = 4;
  int height = 8;
  int width = 8;
  int cond_dim = 768;
  /// Prior spread around the decoded clean latent.
  double prior_std = 0.3;
  /// Gain of the condition decoder.
  double decoder_gain = 128.0;
  /// Spread of the decoder offset u0.
  double offset_std = 1.0;
};

/// Toy noise predictor. The mean-pooled condition is decoded linearly into
/// a clean-latent guess x0 = U c + u0, and the prediction is the posterior
/// mean of the noise under z0 ~ N(x0, prior_std^2 I):
///   eps_hat = sqrt(1 - abar) (z_t - sqrt(abar) x0) / (1 - abar + abar prior_std^2)
class ToyDenoiser : public Denoiser {
 public:
  ToyDenoiser(const ToyDenoiserOptions& options, NoiseSchedule schedule);

  AdapterInfo info() const override;
  Latent predict_noise(const Latent& z_t, int t, const Mat& condition) const override;
  Mat condition_vjp(const Latent& z_t, int t, const Mat& condition, const Vec& grad_output) const override;
  std::vector<NamedParameter> parameters() const override;

  /// Negative-control hook: when set, every vjp call also applies a small
  /// update to the decoder offset, as an accidentally unfrozen backbone would.
  void set_trainable(bool trainable) { trainable_ = trainable; }

  Vec decode_condition(const Mat& condition) const;

 private:
  ToyDenoiserOptions options_;
  NoiseSchedule schedule_;
  Mat decoder_;          // n x cond_dim
  mutable Vec offset_;   // n; mutated only in trainable mode
  bool trainable_ = false;
};

std::shared_ptr<ToyDenoiser> toy_denoiser(const ToyDenoiserOptions& options, const NoiseSchedule& schedule);

/// Unit-norm 512-dim feature drawn from a stream seeded by the image content
/// hash. Always reports a face.
std::shared_ptr<const FaceEncoder> synthetic_face_encoder(std::uint64_t seed);

/// Rules: "always", "never", "mean>=X" (mean intensity threshold),
/// "hash%K" (content hash divisible by K).
std::shared_ptr<const FaceDetector> mock_detector(std::string_view rule);

/// Cosine between Gaussian features seeded from the image content hash and
/// from the FNV-1a hash of the text. An image whose raw sample bytes hash
/// like the text scores exactly 1.
std::shared_ptr<const ImageScorer> mock_scorer(std::uint64_t seed);

/// Deterministic DDIM sampler over a denoiser and latent codec.
std::shared_ptr<const Sampler> synthetic_sampler(std::shared_ptr<const Denoiser> denoiser,
                                                 std::shared_ptr<const LatentCodec> codec,
                                                 NoiseSchedule schedule);

// ---------------------------------------------------------------------------
// Backend bundle and registry.

struct BackendConfig {
  std::string text_encoder = "synthetic-clip";
  std::uint64_t encoder_seed = 0;
  int dim = 768;
  int max_length = 77;
  std::string denoiser = "toy-denoiser";
  std::uint64_t backend_seed = 0;
  std::string face_encoder = "synthetic-arcface";
  std::string detector = "always";
  std::string scorer = "mock-clipscore";
  std::string sampler = "synthetic-ddim";
  int timesteps = 1000;
};

void to_json(nlohmann::json& j, const BackendConfig& c);
void from_json(const nlohmann::json& j, BackendConfig& c);

struct Backends {
  std::shared_ptr<const TextEncoder> text_encoder;
  std::shared_ptr<const Denoiser> denoiser;
  std::shared_ptr<const LatentCodec> codec;
  std::shared_ptr<const FaceEncoder> face_encoder;
  std::shared_ptr<const FaceDetector> face_detector;
  std::shared_ptr<const ImageScorer> scorer;
  std::shared_ptr<const Sampler> sampler;
  NoiseSchedule schedule;

  /// Adapter ids keyed by role, for manifests and reports.
  std::map<std::string, std::string> identifiers() const;
  /// Every frozen adapter parameter, prefixed by role.
  std::vector<NamedParameter> frozen_parameters() const;
};

/// Name -> factory tables for each adapter role. Synthetic adapters are
/// registered on first use; plugins add real backends the same way.
class AdapterRegistry {
 public:
  using TextEncoderFactory = std::function<std::shared_ptr<const TextEncoder>(const BackendConfig&)>;
  using DenoiserFactory =
      std::function<std::shared_ptr<const Denoiser>(const BackendConfig&, const NoiseSchedule&)>;
  using FaceEncoderFactory = std::function<std::shared_ptr<const FaceEncoder>(const BackendConfig&)>;
  using ScorerFactory = std::function<std::shared_ptr<const ImageScorer>(const BackendConfig&)>;
  using SamplerFactory = std::function<std::shared_ptr<const Sampler>(
      const BackendConfig&, std::shared_ptr<const Denoiser>, std::shared_ptr<const LatentCodec>,
      const NoiseSchedule&)>;

  static AdapterRegistry& instance();

  void add_text_encoder(std::string name, TextEncoderFactory factory);
  void add_denoiser(std::string name, DenoiserFactory factory);
  void add_face_encoder(std::string name, FaceEncoderFactory factory);
  void add_scorer(std::string name, ScorerFactory factory);
  void add_sampler(std::string name, SamplerFactory factory);

  /// Throws AdapterError for unknown names.
  Backends create(const BackendConfig& config) const;

 private:
  AdapterRegistry();

  std::map<std::string, TextEncoderFactory, std::less<>> text_encoders_;
  std::map<std::string, DenoiserFactory, std::less<>> denoisers_;
  std::map<std::string, FaceEncoderFactory, std::less<>> face_encoders_;
  std::map<std::string, ScorerFactory, std::less<>> scorers_;
  std::map<std::string, SamplerFactory, std::less<>> samplers_;
};

inline Backends make_backends(const BackendConfig& config) { return AdapterRegistry::instance().create(config); }

}  // namespace celeb
