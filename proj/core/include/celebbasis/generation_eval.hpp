// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "celebbasis/backends.hpp"
#include "celebbasis/celeb_basis.hpp"
#include "celebbasis/identity_mapper.hpp"
#include "celebbasis/image.hpp"
#include "celebbasis/prompt.hpp"

namespace celeb {

struct GenerationRequest {
  PromptTemplate prompt;
  std::map<std::string, IdentityCheckpoint> identities;
  std::uint64_t seed = 0;
  int count = 1;
  SamplerParams sampler;
};

/// Per image: coefficients -> basis synthesis -> substitution -> text
/// transform -> sampler. Bindings and fingerprints are validated before the
/// first sampler call.
std::vector<Image> generate(const GenerationRequest& request, const CelebBasis& basis,
                            const Backends& backends);

double cosine_similarity(const Vec& a, const Vec& b);

double prompt_score(const Image& image, std::string_view prompt, const ImageScorer& scorer);

/// Cosine between the image's face feature and the reference; nullopt when
/// the encoder finds no face.
std::optional<double> identity_score(const Image& image, const FaceFeature& reference,
                                     const FaceEncoder& encoder);

double detection_rate(std::span<const Image> images, const FaceDetector& detector);

struct EvalItem {
  std::string image_path;
  Image image;
  std::string prompt;
  std::string label;  // empty: no identity reference
};

struct EvalRow {
  std::string image_path;
  std::string content_hash;
  std::string prompt;
  std::string label;
  double prompt_score = 0.0;
  bool detected = false;
  std::optional<double> identity_score;
};

struct EvalReport {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  double prompt_score = 0.0;
  std::optional<double> identity_score;  // over detected images with a defined score
  double detect_rate = 0.0;
  int total = 0;
  int detected = 0;
  int identity_excluded = 0;
  std::map<std::string, std::string> adapters;
  std::vector<EvalRow> rows;
};

/// Recomputes the summary fields from `rows` in index order.
EvalReport aggregate(std::vector<EvalRow> rows, std::map<std::string, std::string> adapters = {});

/// Images without a detected face are excluded from the identity mean but
/// count in the detection denominator.
EvalReport evaluate_run(std::span<const EvalItem> items,
                        const std::map<std::string, FaceFeature>& references,
                        const Backends& backends);

void to_json(nlohmann::json& j, const EvalRow& r);
void from_json(const nlohmann::json& j, EvalRow& r);
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

}  // namespace celeb
