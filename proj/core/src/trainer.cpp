// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "celebbasis/error.hpp"

namespace celeb {

// --- augmentation --------------------------------------------------------------

AugmentConfig AugmentConfig::disabled() {
  return AugmentConfig{.horizontal_flip = false, .jitter_strength = 0.0, .scale_min = 1.0, .scale_max = 1.0, .shift = false};
}

void AugmentConfig::validate() const {
  if (!(jitter_strength >= 0.0 && jitter_strength < 1.0)) throw UsageError("augment: jitter must lie in [0, 1)");
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0)) {
    throw UsageError("augment: scale range must satisfy 0 < min <= max <= 1");
  }
}

Image augment(const Image& image, const AugmentConfig& config, Rng& rng) {
  config.validate();
  if (image.empty()) throw DataError("augment: empty image");
  Image work = (config.horizontal_flip && rng.bernoulli(0.5)) ? flip_horizontal(image) : image;

  if (config.jitter_strength > 0.0) {
    const double s = config.jitter_strength;
    double gain[Image::kChannels];
    double bias[Image::kChannels];
    for (int c = 0; c < Image::kChannels; ++c) {
      gain[c] = rng.uniform(1.0 - s, 1.0 + s);
      bias[c] = rng.uniform(-s, s);
    }
    for (std::size_t i = 0; i < work.pixels.size(); ++i) {
      const int c = static_cast<int>(i % Image::kChannels);
      work.pixels[i] = static_cast<float>(std::clamp(gain[c] * work.pixels[i] + bias[c], 0.0, 1.0));
    }
  }

  const double scale = config.scale_min == config.scale_max ? config.scale_min
                                                           : rng.uniform(config.scale_min, config.scale_max);
  const int w = std::clamp(static_cast<int>(std::lround(scale * work.width)), 1, work.width);
  const int h = std::clamp(static_cast<int>(std::lround(scale * work.height)), 1, work.height);
  if (w == work.width && h == work.height) return work;

  const Image content = resize(work, w, h);
  int ox = (work.width - w) / 2;
  int oy = (work.height - h) / 2;
  if (config.shift) {
    ox = static_cast<int>(rng.uniform_int(0, work.width - w));
    oy = static_cast<int>(rng.uniform_int(0, work.height - h));
  }
  Image canvas(work.width, work.height, 0.0f);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < Image::kChannels; ++c) canvas.at(ox + x, oy + y, c) = content.at(x, y, c);
  return canvas;
}

// --- configuration -------------------------------------------------------------

TrainConfig TrainConfig::joint_defaults() {
  TrainConfig c;
  c.steps = kJointSteps;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be positive");
  if (batch_size < 1) throw UsageError("batch size must be positive");
  if (steps < 0) throw UsageError("steps must be non-negative");
  if (p < 1) throw UsageError("p must be positive");
  augmentation.validate();
}

namespace {

const char* mode_name(TrainMode m) { return m == TrainMode::kMlp ? "mlp" : "direct"; }

const char* optimizer_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
  }
  return "sgd";
}

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"steps", c.steps},
      {"seed", c.seed},
      {"mode", mode_name(c.mode)},
      {"optimizer", optimizer_name(c.optimizer)},
      {"p", c.p},
      {"augmentation",
       {{"horizontal_flip", c.augmentation.horizontal_flip},
        {"jitter_strength", c.augmentation.jitter_strength},
        {"scale_min", c.augmentation.scale_min},
        {"scale_max", c.augmentation.scale_max},
        {"shift", c.augmentation.shift}}},
  };
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.steps = j.value("steps", d.steps);
  c.seed = j.value("seed", d.seed);
  c.p = j.value("p", d.p);
  const std::string mode = j.value("mode", std::string(mode_name(d.mode)));
  if (mode == "mlp") c.mode = TrainMode::kMlp;
  else if (mode == "direct") c.mode = TrainMode::kDirectCoeffs;
  else throw UsageError("unknown training mode '" + mode + "'");
  const std::string opt = j.value("optimizer", std::string("sgd"));
  if (opt == "sgd") c.optimizer = OptimizerKind::kSgd;
  else if (opt == "momentum") c.optimizer = OptimizerKind::kMomentum;
  else if (opt == "adam") c.optimizer = OptimizerKind::kAdam;
  else throw UsageError("unknown optimizer '" + opt + "'");
  if (j.contains("augmentation")) {
    const auto& a = j.at("augmentation");
    c.augmentation.horizontal_flip = a.value("horizontal_flip", d.augmentation.horizontal_flip);
    c.augmentation.jitter_strength = a.value("jitter_strength", d.augmentation.jitter_strength);
    c.augmentation.scale_min = a.value("scale_min", d.augmentation.scale_min);
    c.augmentation.scale_max = a.value("scale_max", d.augmentation.scale_max);
    c.augmentation.shift = a.value("shift", d.augmentation.shift);
  }
}

// --- loss ----------------------------------------------------------------------

int sample_timestep(Rng& rng, int steps) { return static_cast<int>(rng.uniform_int(1, steps)); }

double denoising_loss(const Denoiser& denoiser, const Latent& z_t, int t, const Mat& condition, const Latent& eps) {
  if (!z_t.same_shape(eps) || z_t.size() != eps.size() || eps.size() == 0) {
    throw DataError("denoising_loss: latent and noise shapes differ");
  }
  const Latent pred = denoiser.predict_noise(z_t, t, condition);
  if (pred.size() != eps.size()) throw AdapterError("denoiser returned a prediction of the wrong size");
  if (!pred.values.allFinite()) {
    throw TrainingError("non-finite denoiser output at t=" + std::to_string(t) + " (|z_t|max=" +
                        std::to_string(z_t.values.cwiseAbs().maxCoeff()) + ")");
  }
  const double loss = (eps.values - pred.values).squaredNorm() / static_cast<double>(eps.size());
  if (!std::isfinite(loss)) throw TrainingError("non-finite loss at t=" + std::to_string(t));
  return loss;
}

IdentityObjective::IdentityObjective(const CelebBasis& basis, const Backends& backends,
                                     std::vector<PromptTemplate> templates)
    : basis_(basis), backends_(backends), templates_(std::move(templates)) {
  if (templates_.empty()) throw DataError("objective needs at least one prompt template");
  if (!backends.text_encoder || !backends.denoiser || !backends.codec) {
    throw AdapterError("objective needs a text encoder, denoiser and latent codec");
  }
  if (backends.text_encoder->dim() != basis.dim()) {
    throw DataError("text encoder d=" + std::to_string(backends.text_encoder->dim()) + " does not match basis d=" +
                    std::to_string(basis.dim()));
  }
}

double IdentityObjective::loss(const IdentityCoefficients& coeffs, const DenoisingSample& sample,
                               IdentityCoefficients* grad) const {
  const auto& tmpl = templates_.at(static_cast<std::size_t>(sample.template_index));
  const auto labels = tmpl.markers();
  std::map<std::string, EmbeddingPair> bound;
  const EmbeddingPair pair = synthesize_embedding(basis_, coeffs);
  for (const auto& label : labels) bound.emplace(label, pair);

  const TextEncoder& encoder = *backends_.text_encoder;
  const ConditionedSequence seq = substitute_identity(tmpl, bound, encoder);
  const Mat condition = encoder.transform(seq.embeddings);
  const Latent z_t = noise_image(sample.z0, sample.t, sample.eps, backends_.schedule);
  const double value = denoising_loss(*backends_.denoiser, z_t, sample.t, condition, sample.eps);
  if (!grad) return value;

  const Latent pred = backends_.denoiser->predict_noise(z_t, sample.t, condition);
  const Vec grad_pred = 2.0 * (pred.values - sample.eps.values) / static_cast<double>(sample.eps.size());
  const Mat grad_condition = backends_.denoiser->condition_vjp(z_t, sample.t, condition, grad_pred);
  const Mat grad_sequence = encoder.transform_vjp(seq.embeddings, grad_condition);
  Vec grad_v1 = Vec::Zero(basis_.dim());
  Vec grad_v2 = Vec::Zero(basis_.dim());
  for (const auto& span : seq.placeholder_spans) {
    grad_v1 += grad_sequence.row(span.start).transpose();
    grad_v2 += grad_sequence.row(span.start + 1).transpose();
  }
  grad->a1 = basis_.first().directions * grad_v1;
  grad->a2 = basis_.second().directions * grad_v2;
  return value;
}

double IdentityObjective::loss(const MappingNetwork& net, const Vec& feature, const DenoisingSample& sample,
                               MappingGradient* grad) const {
  const MappingTrace trace = map_with_trace(feature, net);
  if (!grad) return loss(trace.coeffs, sample, nullptr);
  IdentityCoefficients coeff_grad;
  const double value = loss(trace.coeffs, sample, &coeff_grad);
  *grad = mapping_backward(feature, trace, coeff_grad.a1, coeff_grad.a2);
  return value;
}

DenoisingSample IdentityObjective::draw(const Image& image, const AugmentConfig& augmentation, Rng& rng) const {
  DenoisingSample s;
  s.template_index = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(templates_.size()) - 1));
  s.z0 = backends_.codec->encode(augment(image, augmentation, rng));
  s.t = sample_timestep(rng, backends_.schedule.steps());
  s.eps = s.z0;
  s.eps.values = rng.normal_vector(s.z0.size());
  return s;
}

std::string format_step(const StepRecord& record) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", record.loss);
  return "step=" + std::to_string(record.step) + " loss=" + buf + " label=" + record.label;
}

// --- training loop ---------------------------------------------------------------

namespace {

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, Eigen::Index n) : kind_(kind), lr_(lr) {
    if (kind != OptimizerKind::kSgd) first_ = Vec::Zero(n);
    if (kind == OptimizerKind::kAdam) second_ = Vec::Zero(n);
  }

  void step(Vec& params, const Vec& grad) {
    switch (kind_) {
      case OptimizerKind::kSgd:
        params -= lr_ * grad;
        break;
      case OptimizerKind::kMomentum:
        first_ = 0.9 * first_ + grad;
        params -= lr_ * first_;
        break;
      case OptimizerKind::kAdam: {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        first_ = b1 * first_ + (1 - b1) * grad;
        second_ = b2 * second_ + (1 - b2) * grad.cwiseAbs2();
        const double c1 = 1 - std::pow(b1, t_);
        const double c2 = 1 - std::pow(b2, t_);
        params.array() -= lr_ * (first_.array() / c1) / ((second_.array() / c2).sqrt() + eps);
        break;
      }
    }
  }

 private:
  OptimizerKind kind_;
  double lr_;
  Vec first_;
  Vec second_;
  int t_ = 0;
};

struct Subject {
  std::string label;
  const Image* image = nullptr;
  Vec feature;
};

Vec pack(const MappingNetwork& net) {
  Vec v(net.weight.size() + net.bias.size());
  v.head(net.weight.size()) = Eigen::Map<const Vec>(net.weight.data(), net.weight.size());
  v.tail(net.bias.size()) = net.bias;
  return v;
}

void unpack(const Vec& v, MappingNetwork& net) {
  Eigen::Map<Vec>(net.weight.data(), net.weight.size()) = v.head(net.weight.size());
  net.bias = v.tail(net.bias.size());
}

Vec random_unit(Rng& rng, int p) {
  Vec v = rng.normal_vector(p);
  return v / v.norm();
}

TrainResult run_training(std::vector<Subject> subjects, const CelebBasis& basis, const Backends& backends,
                         const TrainConfig& config, const StepCallback& on_step) {
  config.validate();
  if (config.p != basis.p()) {
    throw DataError("training config p=" + std::to_string(config.p) + " does not match basis p=" +
                    std::to_string(basis.p()));
  }
  if (!backends.face_encoder) throw AdapterError("training needs a face encoder");
  const IdentityObjective objective(basis, backends);
  const int p = basis.p();
  const bool direct = config.mode == TrainMode::kDirectCoeffs;

  TrainResult result;
  result.network = MappingNetwork::initialize(p, config.seed);
  for (auto& s : subjects) {
    s.feature = extract_face_features(*s.image, *backends.face_encoder).values;
    result.labels.push_back(s.label);
  }

  // Direct mode optimizes one [a1; a2] block per subject.
  Vec params;
  if (direct) {
    params.resize(static_cast<Eigen::Index>(subjects.size()) * 2 * p);
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      Rng init(derive_seed(config.seed, "direct-init/" + subjects[i].label));
      params.segment(static_cast<Eigen::Index>(i) * 2 * p, p) = random_unit(init, p);
      params.segment(static_cast<Eigen::Index>(i) * 2 * p + p, p) = random_unit(init, p);
    }
  } else {
    params = pack(result.network);
  }
  Optimizer optimizer(config.optimizer, config.learning_rate, params.size());

  Rng rng(derive_seed(config.seed, "train"));
  const auto n_subjects = static_cast<std::int64_t>(subjects.size());
  Vec grad(params.size());
  for (int step = 0; step < config.steps; ++step) {
    grad.setZero();
    for (int b = 0; b < config.batch_size; ++b) {
      const std::size_t k = n_subjects == 1 ? 0 : static_cast<std::size_t>(rng.uniform_int(0, n_subjects - 1));
      const Subject& subject = subjects[k];
      const DenoisingSample sample = objective.draw(*subject.image, config.augmentation, rng);
      double value = 0.0;
      if (direct) {
        const Eigen::Index at = static_cast<Eigen::Index>(k) * 2 * p;
        IdentityCoefficients coeffs{.a1 = params.segment(at, p), .a2 = params.segment(at + p, p)};
        IdentityCoefficients g;
        value = objective.loss(coeffs, sample, &g);
        grad.segment(at, p) += g.a1 / config.batch_size;
        grad.segment(at + p, p) += g.a2 / config.batch_size;
      } else {
        MappingGradient g;
        value = objective.loss(result.network, subject.feature, sample, &g);
        grad.head(g.weight.size()) += Eigen::Map<const Vec>(g.weight.data(), g.weight.size()) / config.batch_size;
        grad.tail(g.bias.size()) += g.bias / config.batch_size;
      }
      StepRecord record{step, value, subject.label};
      if (on_step) on_step(record);
      result.log.push_back(std::move(record));
    }
    optimizer.step(params, grad);
    if (direct) {
      for (Eigen::Index at = 0; at < params.size(); at += p) {
        params.segment(at, p) /= std::max(params.segment(at, p).norm(), kNormEpsilon);
      }
    } else {
      unpack(params, result.network);
    }
    if (!params.allFinite()) throw TrainingError("parameters became non-finite at step " + std::to_string(step));
  }

  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (direct) {
      const Eigen::Index at = static_cast<Eigen::Index>(i) * 2 * p;
      result.coefficients.push_back({params.segment(at, p), params.segment(at + p, p)});
    } else {
      result.coefficients.push_back(map_to_coefficients(FaceFeature{subjects[i].feature, ""}, result.network));
    }
  }
  return result;
}

}  // namespace

TrainResult train_single(const Image& image, const CelebBasis& basis, const Backends& backends,
                         const TrainConfig& config, const std::string& label, const StepCallback& on_step) {
  return run_training({Subject{label, &image, {}}}, basis, backends, config, on_step);
}

TrainResult train_joint(std::span<const LabeledImage> images, const CelebBasis& basis, const Backends& backends,
                        const TrainConfig& config, const StepCallback& on_step) {
  if (images.size() < 2) throw DataError("joint training needs at least 2 labelled images");
  std::set<std::string> seen;
  std::vector<Subject> subjects;
  for (const auto& item : images) {
    if (item.label.empty()) throw DataError("joint training: empty label");
    if (!seen.insert(item.label).second) throw DataError("joint training: duplicate label '" + item.label + "'");
    subjects.push_back(Subject{item.label, &item.image, {}});
  }
  return run_training(std::move(subjects), basis, backends, config, on_step);
}

double probe_loss(const IdentityObjective& objective, const IdentityCoefficients& coeffs, const Image& image,
                  std::uint64_t probe_seed, int samples, const AugmentConfig& augmentation) {
  if (samples < 1) throw DataError("probe_loss: need at least one sample");
  Rng rng(probe_seed);
  double total = 0.0;
  for (int i = 0; i < samples; ++i) total += objective.loss(coeffs, objective.draw(image, augmentation, rng));
  return total / samples;
}

// --- frozen audit ------------------------------------------------------------------

FrozenSnapshot snapshot_frozen(const Backends& backends, const CelebBasis& basis) {
  FrozenSnapshot snap;
  for (const auto& param : backends.frozen_parameters()) snap.digests[param.name] = fnv1a64(param.bytes);
  snap.digests["basis"] = basis.fingerprint();
  return snap;
}

AuditReport frozen_audit(const FrozenSnapshot& before, const FrozenSnapshot& after) {
  AuditReport report;
  for (const auto& [name, digest] : before.digests) {
    auto it = after.digests.find(name);
    if (it == after.digests.end() || it->second != digest) report.changed.push_back(name);
  }
  for (const auto& [name, digest] : after.digests) {
    if (!before.digests.contains(name)) report.changed.push_back(name);
  }
  return report;
}

}  // namespace celeb
