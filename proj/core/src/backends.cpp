// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/backends.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "celebbasis/error.hpp"
#include "celebbasis/rng.hpp"

namespace celeb {

namespace {

// --- synthetic text encoder --------------------------------------------------

class SyntheticTextEncoder final : public TextEncoder {
 public:
  explicit SyntheticTextEncoder(const SyntheticTextEncoderOptions& options) : options_(options) {
    if (options.dim < 2) throw DataError("synthetic text encoder: d must be >= 2");
    if (options.max_length < 3) throw DataError("synthetic text encoder: max_length must be >= 3");
    if (options.max_piece_bytes < 1) throw DataError("synthetic text encoder: max_piece_bytes must be >= 1");
    Rng rng(derive_seed(options.seed, "text-transform"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(options.dim));
    transform_.resize(options.dim, options.dim);
    for (Eigen::Index i = 0; i < transform_.size(); ++i) transform_.data()[i] = scale * rng.normal();
  }

  AdapterInfo info() const override { return {.id = "synthetic-clip", .deterministic = true, .concurrency_safe = true}; }
  int dim() const override { return options_.dim; }
  int max_length() const override { return options_.max_length; }

  std::vector<TokenId> tokenize(std::string_view text) const override {
    std::vector<TokenId> ids;
    std::string word;
    auto flush = [&] {
      for (std::size_t at = 0; at < word.size(); at += static_cast<std::size_t>(options_.max_piece_bytes)) {
        ids.push_back(fnv1a64(std::string_view(word).substr(at, static_cast<std::size_t>(options_.max_piece_bytes))));
      }
      word.clear();
    };
    for (char c : text) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        flush();
      } else {
        word.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
      }
    }
    flush();
    return ids;
  }

  TokenId begin_token() const override { return fnv1a64("<|startoftext|>"); }
  TokenId end_token() const override { return fnv1a64("<|endoftext|>"); }

  Mat dictionary_embed(std::span<const TokenId> ids) const override {
    Mat out(static_cast<Eigen::Index>(ids.size()), options_.dim);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Rng rng(mix64(options_.seed ^ mix64(ids[i])));
      for (int j = 0; j < options_.dim; ++j) out(static_cast<Eigen::Index>(i), j) = options_.embed_std * rng.normal();
    }
    return out;
  }

  Mat transform(const Mat& sequence) const override {
    if (sequence.cols() != options_.dim) throw AdapterError("text transform: wrong embedding dimension");
    return sequence * transform_.transpose();
  }

  Mat transform_vjp(const Mat& sequence, const Mat& grad_output) const override {
    if (grad_output.rows() != sequence.rows() || grad_output.cols() != options_.dim) {
      throw AdapterError("text transform vjp: gradient shape mismatch");
    }
    return grad_output * transform_;
  }

  std::vector<NamedParameter> parameters() const override {
    return {{"seed", std::as_bytes(std::span(&options_.seed, 1))},
            {"embed_std", std::as_bytes(std::span(&options_.embed_std, 1))},
            {"transform", parameter_bytes(transform_)}};
  }

 private:
  SyntheticTextEncoderOptions options_;
  Mat transform_;
};

// --- toy latent codec -------------------------------------------------------

class ToyLatentCodec final : public LatentCodec {
 public:
  ToyLatentCodec(int channels, int height, int width) : channels_(channels), height_(height), width_(width) {
    if (channels < 3 || height < 1 || width < 1) throw DataError("toy codec: needs >= 3 channels and a positive grid");
  }

  AdapterInfo info() const override { return {.id = "toy-box-codec", .deterministic = true, .concurrency_safe = true}; }

  Latent encode(const Image& image) const override {
    if (image.empty()) throw AdapterError("toy codec: empty image");
    Latent z{.channels = channels_, .height = height_, .width = width_,
             .values = Vec::Zero(static_cast<Eigen::Index>(channels_) * height_ * width_)};
    for (int gy = 0; gy < height_; ++gy) {
      const int y0 = gy * image.height / height_;
      const int y1 = std::max(y0 + 1, (gy + 1) * image.height / height_);
      for (int gx = 0; gx < width_; ++gx) {
        const int x0 = gx * image.width / width_;
        const int x1 = std::max(x0 + 1, (gx + 1) * image.width / width_);
        double sum[3] = {0, 0, 0};
        int count = 0;
        for (int y = y0; y < std::min(y1, image.height); ++y)
          for (int x = x0; x < std::min(x1, image.width); ++x, ++count)
            for (int c = 0; c < 3; ++c) sum[c] += image.at(x, y, c);
        double rgb[3];
        for (int c = 0; c < 3; ++c) rgb[c] = sum[c] / std::max(count, 1);
        for (int c = 0; c < 3; ++c) z.values[index(c, gy, gx)] = 2.0 * rgb[c] - 1.0;
        if (channels_ > 3) z.values[index(3, gy, gx)] = 2.0 * (0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]) - 1.0;
      }
    }
    return z;
  }

  Image decode(const Latent& latent) const override {
    if (latent.channels != channels_ || latent.height != height_ || latent.width != width_) {
      throw AdapterError("toy codec: latent shape mismatch");
    }
    constexpr int kUpscale = 8;
    Image out(width_ * kUpscale, height_ * kUpscale);
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        for (int c = 0; c < 3; ++c) {
          const double v = 0.5 * (latent.values[index(c, y / kUpscale, x / kUpscale)] + 1.0);
          out.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    return out;
  }

  std::vector<NamedParameter> parameters() const override { return {}; }

 private:
  Eigen::Index index(int c, int y, int x) const {
    return (static_cast<Eigen::Index>(c) * height_ + y) * width_ + x;
  }

  int channels_;
  int height_;
  int width_;
};

// --- synthetic face encoder, detector, scorer --------------------------------

class SyntheticFaceEncoder final : public FaceEncoder {
 public:
  explicit SyntheticFaceEncoder(std::uint64_t seed) : seed_(seed) {}

  AdapterInfo info() const override {
    return {.id = "synthetic-arcface", .deterministic = true, .concurrency_safe = true};
  }

  std::optional<Vec> extract(const Image& image) const override {
    Rng rng(mix64(content_hash(image) ^ mix64(seed_)));
    Vec v = rng.normal_vector(kFaceFeatureDim);
    return Vec(v / v.norm());
  }

  std::vector<NamedParameter> parameters() const override {
    return {{"seed", std::as_bytes(std::span(&seed_, 1))}};
  }

 private:
  std::uint64_t seed_;
};

class MockDetector final : public FaceDetector {
 public:
  enum class Kind { kAlways, kNever, kMeanAtLeast, kHashModulo };

  explicit MockDetector(std::string_view rule) : rule_(rule) {
    auto parse_number = [&](std::string_view text, auto& out) {
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw UsageError("mock detector: bad rule '" + rule_ + "'");
      }
    };
    if (rule == "always") {
      kind_ = Kind::kAlways;
    } else if (rule == "never") {
      kind_ = Kind::kNever;
    } else if (rule.starts_with("mean>=")) {
      kind_ = Kind::kMeanAtLeast;
      parse_number(rule.substr(6), threshold_);
    } else if (rule.starts_with("hash%")) {
      kind_ = Kind::kHashModulo;
      parse_number(rule.substr(5), modulus_);
      if (modulus_ == 0) throw UsageError("mock detector: modulus must be positive");
    } else {
      throw UsageError("mock detector: unknown rule '" + rule_ + "'");
    }
  }

  AdapterInfo info() const override { return {.id = "mock-detector:" + rule_, .deterministic = true, .concurrency_safe = true}; }

  bool detect(const Image& image) const override {
    switch (kind_) {
      case Kind::kAlways: return true;
      case Kind::kNever: return false;
      case Kind::kMeanAtLeast: return image.mean() >= threshold_;
      case Kind::kHashModulo: return content_hash(image) % modulus_ == 0;
    }
    return false;
  }

 private:
  std::string rule_;
  Kind kind_ = Kind::kAlways;
  double threshold_ = 0.0;
  std::uint64_t modulus_ = 1;
};

class MockScorer final : public ImageScorer {
 public:
  explicit MockScorer(std::uint64_t seed) : seed_(seed) {}

  AdapterInfo info() const override { return {.id = "mock-clipscore", .deterministic = true, .concurrency_safe = true}; }

  double score(const Image& image, std::string_view text) const override {
    const Vec a = feature(fnv1a64(std::as_bytes(std::span(image.pixels))));
    const Vec b = feature(fnv1a64(text));
    return a.dot(b) / (a.norm() * b.norm());
  }

 private:
  Vec feature(std::uint64_t key) const {
    Rng rng(mix64(key ^ mix64(seed_)));
    return rng.normal_vector(64);
  }

  std::uint64_t seed_;
};

// --- sampler ------------------------------------------------------------------

class SyntheticSampler final : public Sampler {
 public:
  SyntheticSampler(std::shared_ptr<const Denoiser> denoiser, std::shared_ptr<const LatentCodec> codec,
                   NoiseSchedule schedule)
      : denoiser_(std::move(denoiser)), codec_(std::move(codec)), schedule_(std::move(schedule)) {
    shape_ = codec_->encode(Image(1, 1));
  }

  AdapterInfo info() const override { return {.id = "synthetic-ddim", .deterministic = true, .concurrency_safe = true}; }

  Image sample(const Mat& condition, std::uint64_t seed, const SamplerParams& params) const override {
    if (params.steps < 1) throw UsageError("sampler: steps must be >= 1");
    const int T = schedule_.steps();
    const int steps = std::min(params.steps, T);
    std::vector<int> timesteps(steps);
    for (int i = 0; i < steps; ++i) {
      timesteps[i] = steps == 1 ? T : static_cast<int>(std::lround(T - static_cast<double>(i) * (T - 1) / (steps - 1)));
    }
    Rng rng(derive_seed(seed, "sampler-init"));
    Latent x = shape_;
    x.values = rng.normal_vector(x.size());
    const bool guided = params.guidance != 1.0 && params.unconditional.has_value();
    Latent x0 = x;
    for (int i = 0; i < steps; ++i) {
      const int t = timesteps[i];
      Latent eps = denoiser_->predict_noise(x, t, condition);
      if (guided) {
        const Latent uncond = denoiser_->predict_noise(x, t, *params.unconditional);
        eps.values = uncond.values + params.guidance * (eps.values - uncond.values);
      }
      const double abar = schedule_.alpha_bar(t);
      x0.values = (x.values - std::sqrt(1.0 - abar) * eps.values) / std::sqrt(abar);
      const double abar_prev = i + 1 < steps ? schedule_.alpha_bar(timesteps[i + 1]) : 1.0;
      x.values = std::sqrt(abar_prev) * x0.values + std::sqrt(1.0 - abar_prev) * eps.values;
    }
    if (!x.values.allFinite()) throw AdapterError("sampler produced non-finite latents");
    Image decoded = codec_->decode(x);
    if (params.image_size > 0 && (decoded.width != params.image_size || decoded.height != params.image_size)) {
      decoded = resize(decoded, params.image_size, params.image_size);
    }
    return decoded;
  }

 private:
  std::shared_ptr<const Denoiser> denoiser_;
  std::shared_ptr<const LatentCodec> codec_;
  NoiseSchedule schedule_;
  Latent shape_;
};

}  // namespace

// --- toy denoiser ---------------------------------------------------------------

ToyDenoiser::ToyDenoiser(const ToyDenoiserOptions& options, NoiseSchedule schedule)
    : options_(options), schedule_(std::move(schedule)) {
  if (options.channels < 1 || options.height < 1 || options.width < 1 || options.cond_dim < 1) {
    throw DataError("toy denoiser: dimensions must be positive");
  }
  if (!(options.prior_std > 0.0)) throw DataError("toy denoiser: prior_std must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(options.channels) * options.height * options.width;
  Rng rng(derive_seed(options.seed, "toy-denoiser"));
  const double scale = options.decoder_gain / std::sqrt(static_cast<double>(options.cond_dim));
  decoder_.resize(n, options.cond_dim);
  for (Eigen::Index i = 0; i < decoder_.size(); ++i) decoder_.data()[i] = scale * rng.normal();
  offset_ = rng.normal_vector(n, options.offset_std);
}

AdapterInfo ToyDenoiser::info() const { return {.id = "toy-denoiser", .deterministic = true, .concurrency_safe = !trainable_}; }

Vec ToyDenoiser::decode_condition(const Mat& condition) const {
  if (condition.cols() != options_.cond_dim || condition.rows() < 1) {
    throw AdapterError("toy denoiser: condition must be l x " + std::to_string(options_.cond_dim));
  }
  const Vec pooled = condition.colwise().mean().transpose();
  return decoder_ * pooled + offset_;
}

Latent ToyDenoiser::predict_noise(const Latent& z_t, int t, const Mat& condition) const {
  if (z_t.channels != options_.channels || z_t.height != options_.height || z_t.width != options_.width) {
    throw AdapterError("toy denoiser: latent shape mismatch");
  }
  const double abar = schedule_.alpha_bar(t);
  const double gain = std::sqrt(1.0 - abar) / (1.0 - abar + abar * options_.prior_std * options_.prior_std);
  Latent out = z_t;
  out.values = gain * (z_t.values - std::sqrt(abar) * decode_condition(condition));
  return out;
}

Mat ToyDenoiser::condition_vjp(const Latent& z_t, int t, const Mat& condition, const Vec& grad_output) const {
  if (grad_output.size() != z_t.size()) throw AdapterError("toy denoiser vjp: gradient shape mismatch");
  const double abar = schedule_.alpha_bar(t);
  const double gain = std::sqrt(1.0 - abar) / (1.0 - abar + abar * options_.prior_std * options_.prior_std);
  const Vec grad_x0 = -gain * std::sqrt(abar) * grad_output;
  if (trainable_) offset_ -= 1e-3 * grad_x0;
  const Vec grad_pooled = decoder_.transpose() * grad_x0;
  const Eigen::Index l = condition.rows();
  Mat grad(l, condition.cols());
  grad.rowwise() = grad_pooled.transpose() / static_cast<double>(l);
  return grad;
}

std::vector<NamedParameter> ToyDenoiser::parameters() const {
  return {{"decoder", parameter_bytes(decoder_)}, {"offset", parameter_bytes(offset_)}};
}

// --- factories ------------------------------------------------------------------

std::shared_ptr<const TextEncoder> synthetic_text_encoder(const SyntheticTextEncoderOptions& options) {
  return std::make_shared<SyntheticTextEncoder>(options);
}

std::shared_ptr<const LatentCodec> toy_latent_codec(int channels, int height, int width) {
  return std::make_shared<ToyLatentCodec>(channels, height, width);
}

std::shared_ptr<ToyDenoiser> toy_denoiser(const ToyDenoiserOptions& options, const NoiseSchedule& schedule) {
  return std::make_shared<ToyDenoiser>(options, schedule);
}

std::shared_ptr<const FaceEncoder> synthetic_face_encoder(std::uint64_t seed) {
  return std::make_shared<SyntheticFaceEncoder>(seed);
}

std::shared_ptr<const FaceDetector> mock_detector(std::string_view rule) { return std::make_shared<MockDetector>(rule); }

std::shared_ptr<const ImageScorer> mock_scorer(std::uint64_t seed) { return std::make_shared<MockScorer>(seed); }

std::shared_ptr<const Sampler> synthetic_sampler(std::shared_ptr<const Denoiser> denoiser,
                                                 std::shared_ptr<const LatentCodec> codec, NoiseSchedule schedule) {
  return std::make_shared<SyntheticSampler>(std::move(denoiser), std::move(codec), std::move(schedule));
}

// --- config and registry -----------------------------------------------------------

void to_json(nlohmann::json& j, const BackendConfig& c) {
  j = nlohmann::json{{"text_encoder", c.text_encoder}, {"encoder_seed", c.encoder_seed}, {"dim", c.dim},
                     {"max_length", c.max_length},     {"denoiser", c.denoiser},         {"backend_seed", c.backend_seed},
                     {"face_encoder", c.face_encoder}, {"detector", c.detector},         {"scorer", c.scorer},
                     {"sampler", c.sampler},           {"timesteps", c.timesteps}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
  const BackendConfig d;
  c.text_encoder = j.value("text_encoder", d.text_encoder);
  c.encoder_seed = j.value("encoder_seed", d.encoder_seed);
  c.dim = j.value("dim", d.dim);
  c.max_length = j.value("max_length", d.max_length);
  c.denoiser = j.value("denoiser", d.denoiser);
  c.backend_seed = j.value("backend_seed", d.backend_seed);
  c.face_encoder = j.value("face_encoder", d.face_encoder);
  c.detector = j.value("detector", d.detector);
  c.scorer = j.value("scorer", d.scorer);
  c.sampler = j.value("sampler", d.sampler);
  c.timesteps = j.value("timesteps", d.timesteps);
}

std::map<std::string, std::string> Backends::identifiers() const {
  std::map<std::string, std::string> ids;
  if (text_encoder) ids["text_encoder"] = text_encoder->info().id;
  if (denoiser) ids["denoiser"] = denoiser->info().id;
  if (codec) ids["codec"] = codec->info().id;
  if (face_encoder) ids["face_encoder"] = face_encoder->info().id;
  if (face_detector) ids["face_detector"] = face_detector->info().id;
  if (scorer) ids["scorer"] = scorer->info().id;
  if (sampler) ids["sampler"] = sampler->info().id;
  return ids;
}

std::vector<NamedParameter> Backends::frozen_parameters() const {
  std::vector<NamedParameter> out;
  auto add = [&](const std::string& role, std::vector<NamedParameter> params) {
    for (auto& p : params) out.push_back({role + "/" + p.name, p.bytes});
  };
  if (text_encoder) add("text_encoder", text_encoder->parameters());
  if (denoiser) add("denoiser", denoiser->parameters());
  if (codec) add("codec", codec->parameters());
  if (face_encoder) add("face_encoder", face_encoder->parameters());
  out.push_back({"schedule/alpha_bars", std::as_bytes(std::span(schedule.alpha_bars))});
  return out;
}

AdapterRegistry& AdapterRegistry::instance() {
  static AdapterRegistry registry;
  return registry;
}

AdapterRegistry::AdapterRegistry() {
  add_text_encoder("synthetic-clip", [](const BackendConfig& c) {
    return synthetic_text_encoder(SyntheticTextEncoderOptions{.seed = c.encoder_seed, .dim = c.dim, .max_length = c.max_length});
  });
  add_denoiser("toy-denoiser", [](const BackendConfig& c, const NoiseSchedule& s) -> std::shared_ptr<const Denoiser> {
    return toy_denoiser(ToyDenoiserOptions{.seed = derive_seed(c.backend_seed, "denoiser"), .cond_dim = c.dim}, s);
  });
  add_face_encoder("synthetic-arcface",
                   [](const BackendConfig& c) { return synthetic_face_encoder(derive_seed(c.backend_seed, "face")); });
  add_scorer("mock-clipscore", [](const BackendConfig& c) { return mock_scorer(derive_seed(c.backend_seed, "scorer")); });
  add_sampler("synthetic-ddim", [](const BackendConfig&, std::shared_ptr<const Denoiser> d,
                                   std::shared_ptr<const LatentCodec> codec, const NoiseSchedule& s) {
    return synthetic_sampler(std::move(d), std::move(codec), s);
  });
}

void AdapterRegistry::add_text_encoder(std::string name, TextEncoderFactory factory) {
  text_encoders_[std::move(name)] = std::move(factory);
}
void AdapterRegistry::add_denoiser(std::string name, DenoiserFactory factory) {
  denoisers_[std::move(name)] = std::move(factory);
}
void AdapterRegistry::add_face_encoder(std::string name, FaceEncoderFactory factory) {
  face_encoders_[std::move(name)] = std::move(factory);
}
void AdapterRegistry::add_scorer(std::string name, ScorerFactory factory) { scorers_[std::move(name)] = std::move(factory); }
void AdapterRegistry::add_sampler(std::string name, SamplerFactory factory) {
  samplers_[std::move(name)] = std::move(factory);
}

namespace {

template <typename Map>
const typename Map::mapped_type& lookup(const Map& table, const std::string& name, const char* role) {
  auto it = table.find(name);
  if (it == table.end()) {
    std::string known;
    for (const auto& [k, v] : table) known += (known.empty() ? "" : ", ") + k;
    throw AdapterError(std::string("unknown ") + role + " adapter '" + name + "' (available: " + known + ")");
  }
  return it->second;
}

}  // namespace

Backends AdapterRegistry::create(const BackendConfig& config) const {
  Backends b;
  b.schedule = NoiseSchedule::linear(config.timesteps);
  b.text_encoder = lookup(text_encoders_, config.text_encoder, "text encoder")(config);
  b.codec = toy_latent_codec();
  b.denoiser = lookup(denoisers_, config.denoiser, "denoiser")(config, b.schedule);
  b.face_encoder = lookup(face_encoders_, config.face_encoder, "face encoder")(config);
  b.face_detector = mock_detector(config.detector);
  b.scorer = lookup(scorers_, config.scorer, "scorer")(config);
  b.sampler = lookup(samplers_, config.sampler, "sampler")(config, b.denoiser, b.codec, b.schedule);
  return b;
}

}  // namespace celeb
