// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/generation_eval.hpp"

#include <cmath>

#include "celebbasis/binary_io.hpp"
#include "celebbasis/error.hpp"
#include "celebbasis/rng.hpp"

namespace celeb {

std::vector<Image> generate(const GenerationRequest& request, const CelebBasis& basis, const Backends& backends) {
  if (!backends.text_encoder || !backends.sampler) throw AdapterError("generation needs a text encoder and sampler");
  if (request.count < 1) throw UsageError("generate: count must be positive");

  // Validate every binding before touching the sampler.
  std::map<std::string, EmbeddingPair> bound;
  for (const auto& label : request.prompt.markers()) {
    auto it = request.identities.find(label);
    if (it == request.identities.end()) {
      throw DataError("unbound marker {" + label + "} in '" + request.prompt.text + "'");
    }
    check_fingerprint(it->second, basis, FingerprintPolicy::kError);
    bound.emplace(label, synthesize_embedding(basis, it->second.coefficients));
  }
  const TextEncoder& encoder = *backends.text_encoder;
  const ConditionedSequence seq = substitute_identity(request.prompt, bound, encoder);
  const Mat condition = encoder.transform(seq.embeddings);

  SamplerParams params = request.sampler;
  if (params.guidance != 1.0 && !params.unconditional) params.unconditional = encoder.transform(encode_plain("", encoder));

  std::vector<Image> images;
  images.reserve(static_cast<std::size_t>(request.count));
  for (int i = 0; i < request.count; ++i) {
    images.push_back(backends.sampler->sample(condition, derive_seed(request.seed, static_cast<std::uint64_t>(i)), params));
  }
  return images;
}

double cosine_similarity(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DataError("cosine_similarity: dimension mismatch");
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return std::clamp(a.dot(b) / denom, -1.0, 1.0);
}

double prompt_score(const Image& image, std::string_view prompt, const ImageScorer& scorer) {
  const double s = scorer.score(image, prompt);
  if (!std::isfinite(s)) throw AdapterError("scorer '" + scorer.info().id + "' returned a non-finite score");
  return s;
}

std::optional<double> identity_score(const Image& image, const FaceFeature& reference, const FaceEncoder& encoder) {
  const auto feature = encoder.extract(image);
  if (!feature) return std::nullopt;
  return cosine_similarity(*feature, reference.values);
}

double detection_rate(std::span<const Image> images, const FaceDetector& detector) {
  if (images.empty()) throw DataError("detection_rate: no images");
  int detected = 0;
  for (const auto& im : images) detected += detector.detect(im) ? 1 : 0;
  return static_cast<double>(detected) / static_cast<double>(images.size());
}

EvalReport aggregate(std::vector<EvalRow> rows, std::map<std::string, std::string> adapters) {
  if (rows.empty()) throw DataError("evaluation: empty input");
  EvalReport report;
  report.adapters = std::move(adapters);
  report.total = static_cast<int>(rows.size());
  double prompt_sum = 0.0;
  double identity_sum = 0.0;
  int identity_count = 0;
  for (const auto& row : rows) {
    prompt_sum += row.prompt_score;
    report.detected += row.detected ? 1 : 0;
    if (row.detected && row.identity_score) {
      identity_sum += *row.identity_score;
      ++identity_count;
    }
  }
  report.prompt_score = prompt_sum / report.total;
  report.detect_rate = static_cast<double>(report.detected) / report.total;
  report.identity_excluded = report.total - identity_count;
  if (identity_count > 0) report.identity_score = identity_sum / identity_count;
  report.rows = std::move(rows);
  return report;
}

EvalReport evaluate_run(std::span<const EvalItem> items, const std::map<std::string, FaceFeature>& references,
                        const Backends& backends) {
  if (items.empty()) throw DataError("evaluation: empty input");
  if (!backends.scorer || !backends.face_encoder || !backends.face_detector) {
    throw AdapterError("evaluation needs a scorer, face encoder and face detector");
  }
  std::vector<EvalRow> rows;
  rows.reserve(items.size());
  for (const auto& item : items) {
    const FaceFeature* reference = nullptr;
    if (!item.label.empty()) {
      auto ref = references.find(item.label);
      if (ref == references.end()) throw DataError("evaluation: no reference face for label '" + item.label + "'");
      reference = &ref->second;
    }
    EvalRow row;
    row.image_path = item.image_path;
    row.content_hash = hex64(content_hash(item.image));
    row.prompt = item.prompt;
    row.label = item.label;
    row.prompt_score = prompt_score(item.image, item.prompt, *backends.scorer);
    row.detected = backends.face_detector->detect(item.image);
    if (row.detected && reference) row.identity_score = identity_score(item.image, *reference, *backends.face_encoder);
    rows.push_back(std::move(row));
  }
  auto ids = backends.identifiers();
  return aggregate(std::move(rows), {{"scorer", ids["scorer"]},
                                     {"face_encoder", ids["face_encoder"]},
                                     {"face_detector", ids["face_detector"]}});
}

void to_json(nlohmann::json& j, const EvalRow& r) {
  j = nlohmann::json{{"image", r.image_path},   {"content_hash", r.content_hash}, {"prompt", r.prompt},
                     {"label", r.label},        {"prompt_score", r.prompt_score}, {"detected", r.detected},
                     {"identity_score", nullptr}};
  if (r.identity_score) j["identity_score"] = *r.identity_score;
}

void from_json(const nlohmann::json& j, EvalRow& r) {
  r.image_path = j.at("image").get<std::string>();
  r.content_hash = j.at("content_hash").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.prompt_score = j.at("prompt_score").get<double>();
  r.detected = j.at("detected").get<bool>();
  const auto& id = j.at("identity_score");
  r.identity_score = id.is_null() ? std::nullopt : std::optional<double>(id.get<double>());
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"schema_version", r.schema_version},
                     {"prompt_score", r.prompt_score},
                     {"identity_score", nullptr},
                     {"detect_rate", r.detect_rate},
                     {"total", r.total},
                     {"detected", r.detected},
                     {"identity_excluded", r.identity_excluded},
                     {"adapters", r.adapters},
                     {"rows", r.rows}};
  if (r.identity_score) j["identity_score"] = *r.identity_score;
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != EvalReport::kSchemaVersion) {
    throw FormatError("eval report: unsupported schema version " + std::to_string(r.schema_version));
  }
  r.prompt_score = j.at("prompt_score").get<double>();
  const auto& id = j.at("identity_score");
  r.identity_score = id.is_null() ? std::nullopt : std::optional<double>(id.get<double>());
  r.detect_rate = j.at("detect_rate").get<double>();
  r.total = j.at("total").get<int>();
  r.detected = j.at("detected").get<int>();
  r.identity_excluded = j.at("identity_excluded").get<int>();
  r.adapters = j.at("adapters").get<std::map<std::string, std::string>>();
  r.rows = j.at("rows").get<std::vector<EvalRow>>();
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  // max_digits10 output keeps doubles lossless through the text format.
  atomic_write_file(path, nlohmann::json(report).dump(2) + "\n");
}

EvalReport read_report(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end()).get<EvalReport>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace celeb
