// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/identity_mapper.hpp"

#include <cmath>
#include <cstring>

#include <spdlog/spdlog.h>

#include "celebbasis/error.hpp"
#include "celebbasis/rng.hpp"

namespace celeb {

FaceFeature extract_face_features(const Image& image, const FaceEncoder& encoder) {
  auto values = encoder.extract(image);
  if (!values) throw AdapterError("face encoder '" + encoder.info().id + "' found no face");
  if (values->size() != kFaceFeatureDim || !values->allFinite()) {
    throw AdapterError("face encoder '" + encoder.info().id + "' returned an invalid feature");
  }
  return FaceFeature{.values = std::move(*values), .source = encoder.info().id};
}

MappingNetwork MappingNetwork::initialize(int p, std::uint64_t seed) {
  if (p <= 0) throw DataError("mapping network: p must be positive");
  MappingNetwork net;
  net.seed = seed;
  net.weight.resize(2 * p, kFaceFeatureDim);
  net.bias = Vec::Zero(2 * p);
  Rng rng(derive_seed(seed, "mapping-network"));
  const double bound = 1.0 / std::sqrt(static_cast<double>(kFaceFeatureDim));
  for (Eigen::Index i = 0; i < net.weight.size(); ++i) net.weight.data()[i] = rng.uniform(-bound, bound);
  return net;
}

MappingTrace map_with_trace(const Vec& feature, const MappingNetwork& net) {
  if (feature.size() != net.weight.cols()) {
    throw DataError("mapping network expects a " + std::to_string(net.weight.cols()) + "-dim feature, got " +
                    std::to_string(feature.size()));
  }
  if (net.bias.size() != net.weight.rows() || net.bias.size() % 2 != 0) {
    throw DataError("mapping network has inconsistent output dimension");
  }
  const int p = net.p();
  MappingTrace trace;
  trace.raw = net.weight * feature + net.bias;
  trace.norm1 = trace.raw.head(p).norm();
  trace.norm2 = trace.raw.tail(p).norm();
  trace.coeffs.a1 = trace.raw.head(p) / std::max(trace.norm1, kNormEpsilon);
  trace.coeffs.a2 = trace.raw.tail(p) / std::max(trace.norm2, kNormEpsilon);
  return trace;
}

IdentityCoefficients map_to_coefficients(const FaceFeature& feature, const MappingNetwork& net) {
  return map_with_trace(feature.values, net).coeffs;
}

Vec normalize_vjp(const Vec& normalized, double norm, const Vec& grad_normalized) {
  if (norm <= kNormEpsilon) return grad_normalized / kNormEpsilon;
  return (grad_normalized - normalized * normalized.dot(grad_normalized)) / norm;
}

MappingGradient mapping_backward(const Vec& feature, const MappingTrace& trace, const Vec& grad_a1,
                                 const Vec& grad_a2) {
  const Eigen::Index p = trace.coeffs.a1.size();
  Vec grad_raw(2 * p);
  grad_raw.head(p) = normalize_vjp(trace.coeffs.a1, trace.norm1, grad_a1);
  grad_raw.tail(p) = normalize_vjp(trace.coeffs.a2, trace.norm2, grad_a2);
  MappingGradient g;
  g.weight = grad_raw * feature.transpose();
  g.bias = std::move(grad_raw);
  return g;
}

// --- checkpoint -------------------------------------------------------------

std::size_t identity_file_size(int p, std::size_t label_bytes) {
  return sizeof(kIdentityMagic) + 2 + 4 + 8 + 4 + label_bytes + 2 * static_cast<std::size_t>(p) * 2 + 4;
}

namespace {

std::uint16_t to_half_bits(double v) { return Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(static_cast<float>(v))); }

double from_half_bits(std::uint16_t bits) {
  return static_cast<double>(static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits)));
}

}  // namespace

IdentityCoefficients quantize_half(const IdentityCoefficients& coeffs) {
  auto q = [](const Vec& v) { return Vec(v.unaryExpr([](double x) { return from_half_bits(to_half_bits(x)); })); };
  return IdentityCoefficients{.a1 = q(coeffs.a1), .a2 = q(coeffs.a2)};
}

Bytes serialize_identity(const IdentityCheckpoint& checkpoint) {
  const auto& c = checkpoint.coefficients;
  if (c.a1.size() != c.a2.size() || c.a1.size() == 0) throw DataError("identity: coefficient groups must share p > 0");
  if (!c.a1.allFinite() || !c.a2.allFinite()) throw DataError("identity: non-finite coefficients");
  if (checkpoint.label.size() > kMaxLabelBytes) throw DataError("identity: label longer than 256 bytes");
  ByteWriter w;
  w.put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(kIdentityMagic), sizeof(kIdentityMagic)));
  w.put_u16(kIdentityVersion);
  w.put_u32(static_cast<std::uint32_t>(c.a1.size()));
  w.put_u64(checkpoint.basis_fingerprint);
  w.put_u32(static_cast<std::uint32_t>(checkpoint.label.size()));
  w.put_text(checkpoint.label);
  for (const Vec* group : {&c.a1, &c.a2})
    for (Eigen::Index i = 0; i < group->size(); ++i) w.put_u16(to_half_bits((*group)[i]));
  seal_with_crc(w);
  return w.take();
}

IdentityCheckpoint deserialize_identity(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kIdentityMagic) || std::memcmp(bytes.data(), kIdentityMagic, sizeof(kIdentityMagic)) != 0) {
    throw FormatError("identity: bad magic");
  }
  const auto body = verify_crc(bytes, "identity");
  ByteReader r(body.subspan(sizeof(kIdentityMagic)));
  const std::uint16_t version = r.get_u16();
  if (version != kIdentityVersion) throw FormatError("identity: unsupported version " + std::to_string(version));
  const std::uint32_t p = r.get_u32();
  IdentityCheckpoint out;
  out.basis_fingerprint = r.get_u64();
  const std::uint32_t label_len = r.get_u32();
  if (label_len > kMaxLabelBytes) throw FormatError("identity: label length out of range");
  out.label = r.get_text(label_len);
  if (p == 0 || r.remaining() != 4ull * p) {
    throw FormatError("identity: payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
                      std::to_string(4ull * p));
  }
  out.coefficients.a1.resize(p);
  out.coefficients.a2.resize(p);
  for (Vec* group : {&out.coefficients.a1, &out.coefficients.a2})
    for (std::uint32_t i = 0; i < p; ++i) (*group)[i] = from_half_bits(r.get_u16());
  if (!out.coefficients.a1.allFinite() || !out.coefficients.a2.allFinite()) {
    throw FormatError("identity: non-finite coefficients");
  }
  return out;
}

void save_identity(const IdentityCheckpoint& checkpoint, const std::filesystem::path& path) {
  atomic_write_file(path, serialize_identity(checkpoint));
}

IdentityCheckpoint load_identity(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return deserialize_identity(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

bool check_fingerprint(const IdentityCheckpoint& checkpoint, const CelebBasis& basis, FingerprintPolicy policy) {
  if (checkpoint.coefficients.p() != basis.p()) {
    throw DataError("identity '" + checkpoint.label + "' has p=" + std::to_string(checkpoint.coefficients.p()) +
                    " but the basis has p=" + std::to_string(basis.p()));
  }
  const std::uint64_t expected = basis.fingerprint();
  if (checkpoint.basis_fingerprint == expected) return true;
  const std::string message = "identity '" + checkpoint.label + "' was fit against basis " +
                              hex64(checkpoint.basis_fingerprint) + ", loaded basis is " + hex64(expected);
  if (policy == FingerprintPolicy::kError) throw FingerprintMismatch("fingerprint mismatch: " + message);
  spdlog::warn("fingerprint mismatch: {}", message);
  return false;
}

}  // namespace celeb
