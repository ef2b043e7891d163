// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "celebbasis/backends.hpp"
#include "celebbasis/embedding_dictionary.hpp"
#include "celebbasis/types.hpp"

namespace celeb {

/// Prompt text with identity markers `{ID}`, `{ID1}`, `{ID2}`, ...
/// Each marker names the identity bound to it ("ID", "ID1", ...).
struct PromptTemplate {
  std::string text;

  struct Piece {
    bool is_marker = false;
    std::string text;  // literal text, or the marker label
  };
  std::vector<Piece> pieces() const;
  std::vector<std::string> markers() const;
};

/// The six personalization prompts, each with one `{ID}` marker.
std::vector<PromptTemplate> training_prompts();

struct PlaceholderSpan {
  std::string label;
  int start = 0;
  int length = 2;
};

/// Token embeddings of a full prompt, with identity slots filled in.
struct ConditionedSequence {
  Mat embeddings;  // l x d, begin and end sentinels included
  std::vector<PlaceholderSpan> placeholder_spans;

  int length() const { return static_cast<int>(embeddings.rows()); }
};

/// Tokenizes the template between sentinels; every marker takes two
/// consecutive slots holding its pair. Throws DataError on a template with
/// no markers, an unbound marker, or overflow of the encoder's max length.
ConditionedSequence substitute_identity(const PromptTemplate& prompt,
                                        const std::map<std::string, EmbeddingPair>& identities,
                                        const TextEncoder& encoder);

/// Plain encoding of text with no markers (sentinels included).
Mat encode_plain(std::string_view text, const TextEncoder& encoder);

}  // namespace celeb
