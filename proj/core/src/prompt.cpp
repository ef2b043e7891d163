// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/prompt.hpp"

#include <cctype>

#include "celebbasis/error.hpp"

namespace celeb {

namespace {

// Length of a marker `{ID<digits>}` starting at `pos`, or 0.
std::size_t marker_length(std::string_view text, std::size_t pos) {
  if (text.substr(pos, 3) != "{ID") return 0;
  std::size_t end = pos + 3;
  while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
  if (end < text.size() && text[end] == '}') return end - pos + 1;
  return 0;
}

}  // namespace

std::vector<PromptTemplate::Piece> PromptTemplate::pieces() const {
  std::vector<Piece> out;
  std::string literal;
  for (std::size_t i = 0; i < text.size();) {
    if (const std::size_t n = marker_length(text, i); n > 0) {
      if (!literal.empty()) out.push_back({false, std::move(literal)});
      literal.clear();
      out.push_back({true, text.substr(i + 1, n - 2)});
      i += n;
    } else {
      literal.push_back(text[i++]);
    }
  }
  if (!literal.empty()) out.push_back({false, std::move(literal)});
  return out;
}

std::vector<std::string> PromptTemplate::markers() const {
  std::vector<std::string> out;
  for (auto& piece : pieces())
    if (piece.is_marker) out.push_back(piece.text);
  return out;
}

std::vector<PromptTemplate> training_prompts() {
  return {
      {"A photo of a face of {ID} person"},
      {"A rendering of a face of {ID} person"},
      {"The photo of a face of {ID} person"},
      {"A rendition of a face of {ID} person"},
      {"A illustration of a face of {ID} person"},
      {"A depiction of a face of {ID} person"},
  };
}

ConditionedSequence substitute_identity(const PromptTemplate& prompt,
                                        const std::map<std::string, EmbeddingPair>& identities,
                                        const TextEncoder& encoder) {
  const auto pieces = prompt.pieces();
  bool any_marker = false;
  for (const auto& piece : pieces) {
    if (!piece.is_marker) continue;
    any_marker = true;
    auto it = identities.find(piece.text);
    if (it == identities.end()) throw DataError("unbound marker {" + piece.text + "} in '" + prompt.text + "'");
    if (it->second.first.size() != encoder.dim() || it->second.second.size() != encoder.dim()) {
      throw DataError("identity '" + piece.text + "' has the wrong embedding dimension");
    }
  }
  if (!any_marker) throw DataError("missing marker: '" + prompt.text + "' has no identity marker");

  // Slot plan: a token id, or a (label, slot) reference.
  struct Slot {
    TokenId id = 0;
    const EmbeddingPair* pair = nullptr;
    int which = 0;
  };
  std::vector<Slot> slots{{encoder.begin_token()}};
  ConditionedSequence out;
  for (const auto& piece : pieces) {
    if (piece.is_marker) {
      const EmbeddingPair* pair = &identities.at(piece.text);
      out.placeholder_spans.push_back({piece.text, static_cast<int>(slots.size()), 2});
      slots.push_back({0, pair, 0});
      slots.push_back({0, pair, 1});
    } else {
      for (TokenId id : encoder.tokenize(piece.text)) slots.push_back({id});
    }
  }
  slots.push_back({encoder.end_token()});
  if (static_cast<int>(slots.size()) > encoder.max_length()) {
    throw DataError("prompt overflow: " + std::to_string(slots.size()) + " tokens exceed max length " +
                    std::to_string(encoder.max_length()));
  }

  std::vector<TokenId> ids;
  for (const auto& s : slots)
    if (!s.pair) ids.push_back(s.id);
  const Mat dictionary = encoder.dictionary_embed(ids);
  out.embeddings.resize(static_cast<Eigen::Index>(slots.size()), encoder.dim());
  Eigen::Index next = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (slots[i].pair) {
      out.embeddings.row(row) = (slots[i].which == 0 ? slots[i].pair->first : slots[i].pair->second).transpose();
    } else {
      out.embeddings.row(row) = dictionary.row(next++);
    }
  }
  return out;
}

Mat encode_plain(std::string_view text, const TextEncoder& encoder) {
  std::vector<TokenId> ids{encoder.begin_token()};
  for (TokenId id : encoder.tokenize(text)) ids.push_back(id);
  ids.push_back(encoder.end_token());
  if (static_cast<int>(ids.size()) > encoder.max_length()) throw DataError("prompt overflow");
  return encoder.dictionary_embed(ids);
}

}  // namespace celeb
