// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "celebbasis/backends.hpp"
#include "celebbasis/types.hpp"

namespace celeb {

/// Ordered, whitespace-normalized, duplicate-free list of names.
struct NameList {
  std::vector<std::string> names;
  std::string source_path;
};

/// One name per line; `#` lines are comments and blank lines are skipped.
/// Internal whitespace runs collapse to one space before deduplication.
NameList load_names(const std::filesystem::path& path);
NameList parse_names(std::istream& in, std::string source_path);

/// Token embeddings the encoder assigns to one bare name.
struct EmbeddingGroup {
  std::string name;
  std::vector<TokenId> token_ids;
  std::vector<Vec> embeddings;

  int size() const { return static_cast<int>(token_ids.size()); }
};

EmbeddingGroup embed_name(std::string_view name, const TextEncoder& encoder);

/// Two-slot embedding: first-name and last-name roles.
struct EmbeddingPair {
  Vec first;
  Vec second;
};

/// A pair together with the token ids it was taken from.
struct ComposedPair {
  std::string name;
  EmbeddingPair pair;
  TokenId first_token = 0;
  TokenId second_token = 0;
};

/// First two distinct-token embeddings of the group, in order. Throws
/// CompositionError when the group has fewer than two distinct tokens.
ComposedPair compose_to_pair(const EmbeddingGroup& group);

enum class SlotRole { kFirst, kSecond };

struct EmbeddingSet {
  SlotRole role = SlotRole::kFirst;
  Mat rows;  // m' x d
  std::vector<TokenId> source_token_ids;

  int size() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
};

/// Stacks slot embeddings in input order, keeping only the first row seen
/// for each token id.
std::pair<EmbeddingSet, EmbeddingSet> build_sets(std::span<const ComposedPair> pairs);

/// Pools both slots into one deduplicated set (the flattened-basis variant).
EmbeddingSet pool_sets(const EmbeddingSet& first, const EmbeddingSet& second);

/// Prompts used to screen a candidate name by rendering it.
std::array<std::string, 3> filter_prompts(std::string_view name);

struct DictionaryBuild {
  std::vector<ComposedPair> pairs;
  std::vector<std::string> dropped;  // names with fewer than two distinct tokens
};

/// Embeds and composes every name; names that cannot be composed are
/// dropped with a warning.
DictionaryBuild embed_names(const NameList& names, const TextEncoder& encoder);

}  // namespace celeb
