// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "celebbasis/binary_io.hpp"
#include "celebbasis/embedding_dictionary.hpp"
#include "celebbasis/types.hpp"

namespace celeb {

/// Mean and principal directions of one name slot.
struct BasisComponent {
  Vec mean;                 // d
  Mat directions;           // p x d, orthonormal rows
  Vec explained_variance;   // p, nonincreasing

  int dim() const { return static_cast<int>(mean.size()); }
  int rank() const { return static_cast<int>(directions.rows()); }
};

/// Two p-dim coefficient vectors, one per slot. Together they are the whole
/// stored identity.
struct IdentityCoefficients {
  Vec a1;
  Vec a2;

  int p() const { return static_cast<int>(a1.size()); }
};

enum class BasisLayout { kPaired, kFlatten };

struct BasisProvenance {
  std::uint32_t rows_first = 0;
  std::uint32_t rows_second = 0;
  std::uint64_t build_seed = 0;
};

class CelebBasis {
 public:
  CelebBasis(BasisComponent first, BasisComponent second, BasisProvenance provenance);

  const BasisComponent& first() const { return first_; }
  const BasisComponent& second() const { return second_; }
  const BasisComponent& component(SlotRole role) const {
    return role == SlotRole::kFirst ? first_ : second_;
  }
  int dim() const { return first_.dim(); }
  int p() const { return first_.rank(); }
  const BasisProvenance& provenance() const { return provenance_; }
  /// Flattened bases store one pooled component in both slots.
  BasisLayout layout() const;

  /// FNV-1a-64 of the serialized basis.
  std::uint64_t fingerprint() const;

 private:
  BasisComponent first_;
  BasisComponent second_;
  BasisProvenance provenance_;
};

Vec compute_mean(const EmbeddingSet& set);

/// Mean-centred SVD; directions are the top-p right singular vectors with
/// the largest-magnitude entry made positive. Variances use the m' - 1
/// divisor. Requires 1 <= p <= min(m' - 1, d) and p <= numerical rank.
BasisComponent compute_pca(const EmbeddingSet& set, int p);

/// Builds both slot components. Values are rounded to single precision so
/// the in-memory basis matches its serialized form exactly.
CelebBasis build_basis(const EmbeddingSet& first, const EmbeddingSet& second, int p,
                       std::uint64_t build_seed = 0);

/// One component over the pooled rows of both slots, shared by both slots.
CelebBasis build_flat_basis(const EmbeddingSet& first, const EmbeddingSet& second, int p,
                            std::uint64_t build_seed = 0);

/// v_k = mean_k + directions_k^T a_k
EmbeddingPair synthesize_embedding(const CelebBasis& basis, const IdentityCoefficients& coeffs);

/// a_k = directions_k (v_k - mean_k). Not renormalized.
IdentityCoefficients project(const CelebBasis& basis, const EmbeddingPair& pair);

/// lambda * v1 + (1 - lambda) * v2, lambda in [0, 1].
Vec interpolate(const Vec& v1, const Vec& v2, double lambda);
EmbeddingPair interpolate(const EmbeddingPair& a, const EmbeddingPair& b, double lambda);

// Container: "CELBBAS1", u16 version, u32 d, u32 p, u32 m'_first,
// u32 m'_second, u64 build seed, then per component mean (d f32),
// directions (p*d f32, row-major), explained variance (p f32); CRC32 last.
inline constexpr char kBasisMagic[8] = {'C', 'E', 'L', 'B', 'B', 'A', 'S', '1'};
inline constexpr std::uint16_t kBasisVersion = 1;
inline constexpr std::size_t kBasisHeaderBytes = 8 + 2 + 4 * 4 + 8;

std::size_t basis_file_size(int d, int p);
Bytes serialize_basis(const CelebBasis& basis);
CelebBasis deserialize_basis(std::span<const std::uint8_t> bytes);
void save_basis(const CelebBasis& basis, const std::filesystem::path& path);
CelebBasis load_basis(const std::filesystem::path& path);

}  // namespace celeb
