// Copyright 2026 The CrossRank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace crossrank {

// Token vocabulary with reserved PAD/UNK slots and contiguous ids.
struct Vocabulary {
  static constexpr std::int32_t kPadId = 0;
  static constexpr std::int32_t kUnkId = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  std::unordered_map<std::string, std::int32_t> token_to_id;
  std::vector<std::string> id_to_token;  // index == id
  std::int32_t max_size = 0;

  std::int32_t size() const {
    return static_cast<std::int32_t>(id_to_token.size());
  }

  // Lookup with the UNK fallback.
  std::int32_t id_of(std::string_view token) const {
    auto it = token_to_id.find(std::string(token));
    return it == token_to_id.end() ? kUnkId : it->second;
  }

  bool contains(std::string_view token) const {
    return token_to_id.count(std::string(token)) > 0;
  }
};

struct Document {
  std::string id;
  std::string domain;
  std::vector<std::string> tokens;
};

enum class Provenance { kOriginal, kSampledQuery, kSampledDocument };

const char* to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

// One training pair. `provenance` records whether either side came from a
// teacher sample.
struct PairedExample {
  Document query;
  Document document;
  Provenance provenance = Provenance::kOriginal;
};

struct IdSequence {
  std::vector<std::int32_t> ids;
  std::size_t length() const { return ids.size(); }
};

// Lowercased whitespace split, with identifier splitting on underscores and
// camel-case boundaries; punctuation characters become standalone tokens.
// Total: an empty result is possible and the caller decides what to do.
// The domain tag is accepted for interface parity; all domains currently
// share one rule.
std::vector<std::string> tokenize(std::string_view text,
                                  std::string_view domain = {});

// Frequency-ranked vocabulary from explicit counts; ties broken
// lexicographically, tokens below min_count dropped, PAD/UNK reserved.
Vocabulary build_vocab_from_counts(
    const std::map<std::string, std::int64_t>& counts, std::int32_t max_size,
    std::int32_t min_count);

// Counts every token on both sides of every example.
Vocabulary build_vocab(const std::vector<PairedExample>& examples,
                       std::int32_t max_size, std::int32_t min_count);

IdSequence encode_ids(const Document& doc, const Vocabulary& vocab,
                      std::size_t max_len);

struct LoadReport {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
  std::vector<std::string> issues;  // line-numbered messages
};

inline constexpr const char* kDefaultQueryDomain = "query";

// JSON Lines corpus reader. Each record: id, domain (the document domain),
// query_tokens or query_text, doc_tokens or doc_text, optional provenance.
// Token arrays take precedence over text fields. Malformed lines and
// documents that tokenize to empty are skipped with a report when
// `permissive`, otherwise abort the load.
std::vector<PairedExample> load_jsonl(
    const std::string& path, bool permissive, LoadReport* report = nullptr,
    std::string_view query_domain = kDefaultQueryDomain);

// Query-only JSONL: id plus query_tokens or query_text per line.
std::vector<Document> load_query_jsonl(
    const std::string& path, bool permissive, LoadReport* report = nullptr,
    std::string_view query_domain = kDefaultQueryDomain);

void write_jsonl(const std::string& path,
                 const std::vector<PairedExample>& examples);

}  // namespace crossrank
