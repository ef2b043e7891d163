// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#include "celebbasis/embedding_dictionary.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "celebbasis/error.hpp"

namespace celeb {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

std::string normalize_whitespace(std::string_view line) {
  std::string out;
  bool pending_space = false;
  for (char c : line) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

NameList parse_names(std::istream& in, std::string source_path) {
  NameList list{.names = {}, .source_path = std::move(source_path)};
  std::unordered_set<std::string> seen;
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (first_line && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    first_line = false;
    std::string name = normalize_whitespace(line);
    if (name.empty() || name.front() == '#') continue;
    if (seen.insert(name).second) list.names.push_back(std::move(name));
  }
  if (in.bad()) throw DataError("error reading name list " + list.source_path);
  if (list.names.empty()) throw DataError("empty result: no names in " + list.source_path);
  return list;
}

NameList load_names(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open name list " + path.string());
  return parse_names(in, path.string());
}

EmbeddingGroup embed_name(std::string_view name, const TextEncoder& encoder) {
  if (normalize_whitespace(name).empty()) throw DataError("embed_name: empty name");
  EmbeddingGroup group;
  group.name = std::string(name);
  group.token_ids = encoder.tokenize(name);
  if (group.token_ids.empty()) throw DataError("embed_name: '" + group.name + "' produced no tokens");
  const Mat rows = encoder.dictionary_embed(group.token_ids);
  if (rows.rows() != static_cast<Eigen::Index>(group.token_ids.size()) || rows.cols() != encoder.dim()) {
    throw AdapterError("text encoder returned a " + std::to_string(rows.rows()) + "x" +
                       std::to_string(rows.cols()) + " embedding block");
  }
  group.embeddings.reserve(group.token_ids.size());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) group.embeddings.emplace_back(rows.row(i).transpose());
  return group;
}

ComposedPair compose_to_pair(const EmbeddingGroup& group) {
  if (group.token_ids.size() != group.embeddings.size()) {
    throw DataError("embedding group '" + group.name + "' has mismatched token and embedding counts");
  }
  int first = -1;
  int second = -1;
  for (int i = 0; i < group.size(); ++i) {
    if (first < 0) {
      first = i;
    } else if (group.token_ids[i] != group.token_ids[first]) {
      second = i;
      break;
    }
  }
  if (second < 0) {
    throw CompositionError("'" + group.name + "' has fewer than two distinct tokens");
  }
  ComposedPair out;
  out.name = group.name;
  out.pair.first = group.embeddings[first];
  out.pair.second = group.embeddings[second];
  out.first_token = group.token_ids[first];
  out.second_token = group.token_ids[second];
  if (!out.pair.first.allFinite() || !out.pair.second.allFinite()) {
    throw CompositionError("'" + group.name + "' has non-finite embeddings");
  }
  return out;
}

namespace {

EmbeddingSet stack_unique(SlotRole role, const std::vector<std::pair<TokenId, const Vec*>>& rows) {
  EmbeddingSet set;
  set.role = role;
  std::unordered_set<TokenId> seen;
  std::vector<const Vec*> kept;
  for (const auto& [id, vec] : rows) {
    if (seen.insert(id).second) {
      set.source_token_ids.push_back(id);
      kept.push_back(vec);
    }
  }
  const Eigen::Index d = kept.empty() ? 0 : kept.front()->size();
  set.rows.resize(static_cast<Eigen::Index>(kept.size()), d);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i]->size() != d) throw DataError("embedding set rows have inconsistent dimension");
    set.rows.row(static_cast<Eigen::Index>(i)) = kept[i]->transpose();
  }
  return set;
}

}  // namespace

std::pair<EmbeddingSet, EmbeddingSet> build_sets(std::span<const ComposedPair> pairs) {
  if (pairs.size() < 2) throw DataError("build_sets: need at least 2 pairs, got " + std::to_string(pairs.size()));
  std::vector<std::pair<TokenId, const Vec*>> first;
  std::vector<std::pair<TokenId, const Vec*>> second;
  for (const auto& p : pairs) {
    first.emplace_back(p.first_token, &p.pair.first);
    second.emplace_back(p.second_token, &p.pair.second);
  }
  auto sets = std::make_pair(stack_unique(SlotRole::kFirst, first), stack_unique(SlotRole::kSecond, second));
  if (sets.first.size() < 2 || sets.second.size() < 2) {
    throw DataError("build_sets: fewer than 2 distinct rows survive (first " + std::to_string(sets.first.size()) +
                    ", second " + std::to_string(sets.second.size()) + ")");
  }
  return sets;
}

EmbeddingSet pool_sets(const EmbeddingSet& first, const EmbeddingSet& second) {
  if (first.dim() != second.dim()) throw DataError("pool_sets: dimension mismatch");
  std::vector<Vec> storage;
  storage.reserve(first.source_token_ids.size() + second.source_token_ids.size());
  std::vector<std::pair<TokenId, const Vec*>> rows;
  for (const EmbeddingSet* set : {&first, &second}) {
    for (int i = 0; i < set->size(); ++i) storage.emplace_back(set->rows.row(i).transpose());
  }
  std::size_t k = 0;
  for (const EmbeddingSet* set : {&first, &second}) {
    for (TokenId id : set->source_token_ids) rows.emplace_back(id, &storage[k++]);
  }
  return stack_unique(SlotRole::kFirst, rows);
}

std::array<std::string, 3> filter_prompts(std::string_view name) {
  if (name.empty()) throw DataError("filter_prompts: empty name");
  const std::string n(name);
  return {"A photo of " + n, n + " is playing the guitar", n + " talks with Barack Obama"};
}

DictionaryBuild embed_names(const NameList& names, const TextEncoder& encoder) {
  DictionaryBuild build;
  build.pairs.reserve(names.names.size());
  for (const auto& name : names.names) {
    try {
      build.pairs.push_back(compose_to_pair(embed_name(name, encoder)));
    } catch (const CompositionError& e) {
      spdlog::warn("dropping name: {}", e.what());
      build.dropped.push_back(name);
    }
  }
  return build;
}

}  // namespace celeb
