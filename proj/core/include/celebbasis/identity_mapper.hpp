// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "celebbasis/backends.hpp"
#include "celebbasis/binary_io.hpp"
#include "celebbasis/celeb_basis.hpp"
#include "celebbasis/image.hpp"
#include "celebbasis/types.hpp"

namespace celeb {

struct FaceFeature {
  Vec values;  // kFaceFeatureDim
  std::string source;
};

/// Throws AdapterError when the encoder finds no face.
FaceFeature extract_face_features(const Image& image, const FaceEncoder& encoder);

inline constexpr double kNormEpsilon = 1e-8;

/// One affine layer from the face feature to 2p raw coefficients.
struct MappingNetwork {
  Mat weight;  // 2p x 512
  Vec bias;    // 2p
  std::uint64_t seed = 0;

  /// Weights uniform in +-1/sqrt(512), zero bias.
  static MappingNetwork initialize(int p, std::uint64_t seed);

  int p() const { return static_cast<int>(bias.size() / 2); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(weight.size() + bias.size()); }
};

/// r = W f + b split into halves, each divided by max(||r_k||, eps).
IdentityCoefficients map_to_coefficients(const FaceFeature& feature, const MappingNetwork& net);

/// Forward values kept for backpropagation.
struct MappingTrace {
  Vec raw;  // 2p
  double norm1 = 0.0;
  double norm2 = 0.0;
  IdentityCoefficients coeffs;
};

MappingTrace map_with_trace(const Vec& feature, const MappingNetwork& net);

/// Gradient of a_k = r_k / max(||r_k||, eps) pulled back to r_k.
Vec normalize_vjp(const Vec& normalized, double norm, const Vec& grad_normalized);

struct MappingGradient {
  Mat weight;
  Vec bias;
};

MappingGradient mapping_backward(const Vec& feature, const MappingTrace& trace, const Vec& grad_a1,
                                 const Vec& grad_a2);

enum class FingerprintPolicy { kWarn, kError };

/// Stored identity. Coefficients are kept as binary16 on disk.
struct IdentityCheckpoint {
  IdentityCoefficients coefficients;
  std::uint64_t basis_fingerprint = 0;
  std::string label;
};

// Container: "CELBID01", u16 version, u32 p, u64 basis fingerprint,
// u32 label length, label bytes, 2p binary16 values (a1 then a2), CRC32.
inline constexpr char kIdentityMagic[8] = {'C', 'E', 'L', 'B', 'I', 'D', '0', '1'};
inline constexpr std::uint16_t kIdentityVersion = 1;
inline constexpr std::size_t kMaxLabelBytes = 256;

std::size_t identity_file_size(int p, std::size_t label_bytes);

/// Rounds every coefficient through binary16.
IdentityCoefficients quantize_half(const IdentityCoefficients& coeffs);

Bytes serialize_identity(const IdentityCheckpoint& checkpoint);
IdentityCheckpoint deserialize_identity(std::span<const std::uint8_t> bytes);
void save_identity(const IdentityCheckpoint& checkpoint, const std::filesystem::path& path);
IdentityCheckpoint load_identity(const std::filesystem::path& path);

/// Checks the checkpoint was fit against `basis`. Under kWarn a mismatch is
/// logged and false returned; under kError it throws FingerprintMismatch.
bool check_fingerprint(const IdentityCheckpoint& checkpoint, const CelebBasis& basis,
                       FingerprintPolicy policy = FingerprintPolicy::kError);

}  // namespace celeb
