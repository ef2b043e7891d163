// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace celeb {

/// Base of every error raised by the library. The category decides the
/// process exit code used by the command-line tool.
class Error : public std::runtime_error {
 public:
  enum class Category { kUsage, kData, kAdapter };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Category::kUsage, what) {}
};

/// Malformed input, violated precondition, or corrupt file.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::kData, what) {}
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class CompositionError : public DataError {
 public:
  using DataError::DataError;
};

/// Requested more principal components than the data supports.
class RankError : public DataError {
 public:
  RankError(const std::string& what, int achievable_rank)
      : DataError(what), achievable_rank_(achievable_rank) {}
  int achievable_rank() const noexcept { return achievable_rank_; }

 private:
  int achievable_rank_;
};

class FingerprintMismatch : public DataError {
 public:
  using DataError::DataError;
};

class AdapterError : public Error {
 public:
  explicit AdapterError(const std::string& what) : Error(Category::kAdapter, what) {}
};

/// Raised when the denoising objective leaves the finite range.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(Category::kData, what) {}
};

}  // namespace celeb
