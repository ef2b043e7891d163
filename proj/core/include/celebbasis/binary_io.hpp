// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace celeb {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian append-only encoder.
class ByteWriter {
 public:
  void put_u16(std::uint16_t v);
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f32(float v);
  void put_bytes(std::span<const std::uint8_t> bytes);
  void put_text(std::string_view text);

  const Bytes& bytes() const { return bytes_; }
  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

/// Little-endian decoder over a borrowed buffer. Every read is bounds
/// checked and throws FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint16_t get_u16();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  float get_f32();
  std::span<const std::uint8_t> get_bytes(std::size_t n);
  std::string get_text(std::size_t n);

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void require(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// Appends a CRC32 of everything written so far.
void seal_with_crc(ByteWriter& writer);

/// Checks the trailing CRC32 and returns the bytes it covers.
std::span<const std::uint8_t> verify_crc(std::span<const std::uint8_t> file, std::string_view what);

Bytes read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it over `path`, so readers
/// never observe a partially written file.
void atomic_write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void atomic_write_file(const std::filesystem::path& path, std::string_view text);

/// Hex FNV-1a-64 digest of a file's bytes.
std::string file_digest(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace celeb
