// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/celeb_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/SVD>

#include "celebbasis/error.hpp"
#include "celebbasis/rng.hpp"

namespace celeb {

namespace {

template <typename Dense>
void round_to_f32(Dense& m) {
  m = m.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

void check_component(const BasisComponent& c, int d, int p, const char* which) {
  if (c.mean.size() != d || c.directions.rows() != p || c.directions.cols() != d ||
      c.explained_variance.size() != p) {
    throw DataError(std::string("basis component '") + which + "' has inconsistent shapes");
  }
}

}  // namespace

CelebBasis::CelebBasis(BasisComponent first, BasisComponent second, BasisProvenance provenance)
    : first_(std::move(first)), second_(std::move(second)), provenance_(provenance) {
  const int d = first_.dim();
  const int p = first_.rank();
  if (d <= 0 || p <= 0) throw DataError("basis must have positive d and p");
  check_component(first_, d, p, "first");
  check_component(second_, d, p, "second");
}

BasisLayout CelebBasis::layout() const {
  const bool same = first_.mean == second_.mean && first_.directions == second_.directions &&
                    first_.explained_variance == second_.explained_variance;
  return same ? BasisLayout::kFlatten : BasisLayout::kPaired;
}

std::uint64_t CelebBasis::fingerprint() const {
  const Bytes bytes = serialize_basis(*this);
  return fnv1a64(std::as_bytes(std::span(bytes)));
}

Vec compute_mean(const EmbeddingSet& set) {
  if (set.size() == 0) throw DataError("compute_mean: empty embedding set");
  return set.rows.colwise().mean().transpose();
}

BasisComponent compute_pca(const EmbeddingSet& set, int p) {
  const int m = set.size();
  const int d = set.dim();
  if (m < 2) throw DataError("compute_pca: need at least 2 rows, got " + std::to_string(m));
  if (!set.rows.allFinite()) throw DataError("compute_pca: non-finite embeddings");
  const int limit = std::min(m - 1, d);
  if (p < 1 || p > limit) {
    throw RankError("p=" + std::to_string(p) + " out of range [1, " + std::to_string(limit) + "] for " +
                        std::to_string(m) + " rows of dimension " + std::to_string(d),
                    limit);
  }

  BasisComponent out;
  out.mean = compute_mean(set);
  const Eigen::MatrixXd centered = set.rows.rowwise() - out.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();

  const double tol = sigma.size() > 0 ? sigma[0] * std::max(m, d) * std::numeric_limits<double>::epsilon() : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) rank += sigma[i] > tol ? 1 : 0;
  if (p > rank) {
    throw RankError("p=" + std::to_string(p) + " exceeds the numerical rank " + std::to_string(rank) +
                        " of the centred embedding set (achievable rank " + std::to_string(rank) + ")",
                    rank);
  }

  out.directions = svd.matrixV().leftCols(p).transpose();
  for (int k = 0; k < p; ++k) {
    Eigen::Index arg = 0;
    out.directions.row(k).cwiseAbs().maxCoeff(&arg);
    if (out.directions(k, arg) < 0) out.directions.row(k) *= -1.0;
  }
  out.explained_variance = sigma.head(p).array().square() / static_cast<double>(m - 1);
  return out;
}

namespace {

BasisComponent storable(BasisComponent c) {
  round_to_f32(c.mean);
  round_to_f32(c.directions);
  round_to_f32(c.explained_variance);
  return c;
}

}  // namespace

CelebBasis build_basis(const EmbeddingSet& first, const EmbeddingSet& second, int p, std::uint64_t build_seed) {
  if (first.dim() != second.dim()) {
    throw DataError("build_basis: first set has d=" + std::to_string(first.dim()) + ", second has d=" +
                    std::to_string(second.dim()));
  }
  BasisProvenance provenance{.rows_first = static_cast<std::uint32_t>(first.size()),
                             .rows_second = static_cast<std::uint32_t>(second.size()),
                             .build_seed = build_seed};
  return CelebBasis(storable(compute_pca(first, p)), storable(compute_pca(second, p)), provenance);
}

CelebBasis build_flat_basis(const EmbeddingSet& first, const EmbeddingSet& second, int p,
                            std::uint64_t build_seed) {
  const EmbeddingSet pooled = pool_sets(first, second);
  BasisComponent shared = storable(compute_pca(pooled, p));
  const auto rows = static_cast<std::uint32_t>(pooled.size());
  return CelebBasis(shared, shared, BasisProvenance{.rows_first = rows, .rows_second = rows, .build_seed = build_seed});
}

EmbeddingPair synthesize_embedding(const CelebBasis& basis, const IdentityCoefficients& coeffs) {
  if (coeffs.a1.size() != basis.p() || coeffs.a2.size() != basis.p()) {
    throw DataError("synthesize: coefficients have p=" + std::to_string(coeffs.a1.size()) + "/" +
                    std::to_string(coeffs.a2.size()) + ", basis has p=" + std::to_string(basis.p()));
  }
  return EmbeddingPair{
      .first = basis.first().mean + basis.first().directions.transpose() * coeffs.a1,
      .second = basis.second().mean + basis.second().directions.transpose() * coeffs.a2,
  };
}

IdentityCoefficients project(const CelebBasis& basis, const EmbeddingPair& pair) {
  if (pair.first.size() != basis.dim() || pair.second.size() != basis.dim()) {
    throw DataError("project: pair dimension does not match basis d=" + std::to_string(basis.dim()));
  }
  return IdentityCoefficients{
      .a1 = basis.first().directions * (pair.first - basis.first().mean),
      .a2 = basis.second().directions * (pair.second - basis.second().mean),
  };
}

Vec interpolate(const Vec& v1, const Vec& v2, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DataError("interpolate: lambda must lie in [0, 1]");
  if (v1.size() != v2.size()) throw DataError("interpolate: dimension mismatch");
  return lambda * v1 + (1.0 - lambda) * v2;
}

EmbeddingPair interpolate(const EmbeddingPair& a, const EmbeddingPair& b, double lambda) {
  return EmbeddingPair{.first = interpolate(a.first, b.first, lambda),
                       .second = interpolate(a.second, b.second, lambda)};
}

// --- container --------------------------------------------------------------

std::size_t basis_file_size(int d, int p) {
  const std::size_t per_component = static_cast<std::size_t>(d) + static_cast<std::size_t>(p) * d + p;
  return kBasisHeaderBytes + 2 * per_component * sizeof(float) + sizeof(std::uint32_t);
}

namespace {

template <typename Dense>
void put_floats(ByteWriter& w, const Dense& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) w.put_f32(static_cast<float>(m.data()[i]));
}

template <typename Dense>
void get_floats(ByteReader& r, Dense& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(r.get_f32());
}

}  // namespace

Bytes serialize_basis(const CelebBasis& basis) {
  ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(kBasisMagic), sizeof(kBasisMagic)));
  w.put_u16(kBasisVersion);
  w.put_u32(static_cast<std::uint32_t>(basis.dim()));
  w.put_u32(static_cast<std::uint32_t>(basis.p()));
  w.put_u32(basis.provenance().rows_first);
  w.put_u32(basis.provenance().rows_second);
  w.put_u64(basis.provenance().build_seed);
  for (const BasisComponent* c : {&basis.first(), &basis.second()}) {
    put_floats(w, c->mean);
    put_floats(w, c->directions);  // row-major storage
    put_floats(w, c->explained_variance);
  }
  seal_with_crc(w);
  return w.take();
}

CelebBasis deserialize_basis(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kBasisHeaderBytes + 4) throw FormatError("basis: truncated header");
  if (std::memcmp(bytes.data(), kBasisMagic, sizeof(kBasisMagic)) != 0) throw FormatError("basis: bad magic");
  ByteReader header(bytes.subspan(sizeof(kBasisMagic)));
  const std::uint16_t version = header.get_u16();
  if (version != kBasisVersion) {
    throw FormatError("basis: unsupported version " + std::to_string(version));
  }
  const std::uint32_t d = header.get_u32();
  const std::uint32_t p = header.get_u32();
  if (d == 0 || p == 0 || p > d || d > (1u << 20)) throw FormatError("basis: implausible header d/p");
  if (bytes.size() != basis_file_size(static_cast<int>(d), static_cast<int>(p))) {
    throw FormatError("basis: file is " + std::to_string(bytes.size()) + " bytes, header implies " +
                      std::to_string(basis_file_size(static_cast<int>(d), static_cast<int>(p))));
  }
  const auto body = verify_crc(bytes, "basis");
  ByteReader r(body.subspan(sizeof(kBasisMagic) + 2 + 8));
  BasisProvenance provenance;
  provenance.rows_first = r.get_u32();
  provenance.rows_second = r.get_u32();
  provenance.build_seed = r.get_u64();
  BasisComponent comps[2];
  for (auto& c : comps) {
    c.mean.resize(d);
    c.directions.resize(p, d);
    c.explained_variance.resize(p);
    get_floats(r, c.mean);
    get_floats(r, c.directions);
    get_floats(r, c.explained_variance);
  }
  return CelebBasis(std::move(comps[0]), std::move(comps[1]), provenance);
}

void save_basis(const CelebBasis& basis, const std::filesystem::path& path) {
  atomic_write_file(path, serialize_basis(basis));
}

CelebBasis load_basis(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return deserialize_basis(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace celeb
