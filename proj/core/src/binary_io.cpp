// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

#include <zlib.h>

#include "celebbasis/error.hpp"
#include "celebbasis/rng.hpp"

namespace celeb {

namespace {

template <typename T>
void put_le(Bytes& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

void ByteWriter::put_u16(std::uint16_t v) { put_le(bytes_, v); }
void ByteWriter::put_u32(std::uint32_t v) { put_le(bytes_, v); }
void ByteWriter::put_u64(std::uint64_t v) { put_le(bytes_, v); }
void ByteWriter::put_f32(float v) { put_le(bytes_, std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::put_bytes(std::span<const std::uint8_t> bytes) {
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::put_text(std::string_view text) {
  bytes_.insert(bytes_.end(), text.begin(), text.end());
}

void ByteReader::require(std::size_t n) const {
  if (remaining() < n) {
    throw FormatError("truncated input: need " + std::to_string(n) + " bytes at offset " +
                      std::to_string(offset_) + ", have " + std::to_string(remaining()));
  }
}

std::uint16_t ByteReader::get_u16() {
  require(2);
  std::uint16_t v = static_cast<std::uint16_t>(bytes_[offset_] | (bytes_[offset_ + 1] << 8));
  offset_ += 2;
  return v;
}

std::uint32_t ByteReader::get_u32() {
  require(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[offset_ + i]) << (8 * i);
  offset_ += 4;
  return v;
}

std::uint64_t ByteReader::get_u64() {
  require(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_ + i]) << (8 * i);
  offset_ += 8;
  return v;
}

float ByteReader::get_f32() { return std::bit_cast<float>(get_u32()); }

std::span<const std::uint8_t> ByteReader::get_bytes(std::size_t n) {
  require(n);
  auto out = bytes_.subspan(offset_, n);
  offset_ += n;
  return out;
}

std::string ByteReader::get_text(std::size_t n) {
  auto raw = get_bytes(n);
  return std::string(raw.begin(), raw.end());
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void seal_with_crc(ByteWriter& writer) { writer.put_u32(crc32(writer.bytes())); }

std::span<const std::uint8_t> verify_crc(std::span<const std::uint8_t> file, std::string_view what) {
  if (file.size() < 4) throw FormatError(std::string(what) + ": file too short for checksum");
  auto body = file.first(file.size() - 4);
  ByteReader trailer(file.last(4));
  const std::uint32_t stored = trailer.get_u32();
  if (stored != crc32(body)) throw FormatError(std::string(what) + ": checksum mismatch");
  return body;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void atomic_write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw DataError("cannot create directory for " + path.string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp, ec);
      throw DataError("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot replace " + path.string());
  }
}

void atomic_write_file(const std::filesystem::path& path, std::string_view text) {
  atomic_write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string file_digest(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return hex64(fnv1a64(std::as_bytes(std::span(bytes))));
}

}  // namespace celeb
