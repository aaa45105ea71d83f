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

#include "crossrank/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "crossrank/common.hpp"
#include "json.hpp"

namespace crossrank {

namespace {

using nlohmann::json;

bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

// Bytes >= 0x80 are treated as word characters so UTF-8 sequences stay
// intact; they carry no case information.
bool is_word_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u >= 0x80 || is_ascii_upper(c) || is_ascii_lower(c) ||
         is_ascii_digit(c);
}

char to_lower_ascii(char c) {
  return is_ascii_upper(c) ? static_cast<char>(c - 'A' + 'a') : c;
}

// Splits one whitespace-free chunk: '_' is a separator, punctuation is
// emitted as a standalone token, and identifier case boundaries
// (lower->Upper, and ACRONYMWord -> ACRONYM Word) start a new token.
void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(current);
      current.clear();
    }
  };
  const std::size_t n = chunk.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = chunk[i];
    if (c == '_') {
      flush();
      continue;
    }
    if (!is_word_char(c)) {
      flush();
      out.emplace_back(1, c);
      continue;
    }
    if (!current.empty()) {
      const char prev = chunk[i - 1];
      const bool lower_to_upper = is_ascii_lower(prev) && is_ascii_upper(c);
      // "HTTPRequest": the last upper of an acronym run starts the next word.
      const bool acronym_end = is_ascii_upper(prev) && is_ascii_upper(c) &&
                               i + 1 < n && is_ascii_lower(chunk[i + 1]);
      if (lower_to_upper || acronym_end) flush();
    }
    current.push_back(to_lower_ascii(c));
  }
  flush();
}

json pair_to_json(const PairedExample& ex) {
  json rec;
  // The record id names the pair: the sampled side's derived id when one
  // side came from the teacher, the shared corpus id otherwise.
  rec["id"] = ex.provenance == Provenance::kSampledDocument ? ex.document.id
                                                            : ex.query.id;
  rec["domain"] = ex.document.domain;
  rec["query_tokens"] = ex.query.tokens;
  rec["doc_tokens"] = ex.document.tokens;
  rec["provenance"] = to_string(ex.provenance);
  return rec;
}

// Pulls the token list for one side of a record; arrays win over text.
std::vector<std::string> side_tokens(const json& rec,
                                     const std::string& tokens_key,
                                     const std::string& text_key,
                                     std::string_view domain) {
  if (rec.contains(tokens_key)) {
    const json& arr = rec.at(tokens_key);
    if (!arr.is_array()) fail_data(tokens_key + " must be an array");
    std::vector<std::string> tokens;
    tokens.reserve(arr.size());
    for (const auto& t : arr) {
      if (!t.is_string()) fail_data(tokens_key + " entries must be strings");
      tokens.push_back(t.get<std::string>());
    }
    return tokens;
  }
  if (rec.contains(text_key)) {
    return tokenize(rec.at(text_key).get<std::string>(), domain);
  }
  fail_data("record has neither " + tokens_key + " nor " + text_key);
}

}  // namespace

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::kOriginal:
      return "original";
    case Provenance::kSampledQuery:
      return "sampled-query";
    case Provenance::kSampledDocument:
      return "sampled-document";
  }
  return "original";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "original") return Provenance::kOriginal;
  if (s == "sampled-query") return Provenance::kSampledQuery;
  if (s == "sampled-document") return Provenance::kSampledDocument;
  fail_data("unknown provenance tag: " + std::string(s));
}

std::vector<std::string> tokenize(std::string_view text,
                                  std::string_view domain) {
  (void)domain;
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) split_chunk(text.substr(start, i - start), out);
  }
  return out;
}

Vocabulary build_vocab_from_counts(
    const std::map<std::string, std::int64_t>& counts, std::int32_t max_size,
    std::int32_t min_count) {
  require(max_size >= 2, "build_vocab: max_size must be >= 2");
  require(min_count >= 1, "build_vocab: min_count must be >= 1");

  std::vector<std::pair<std::string, std::int64_t>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    if (count >= min_count) ranked.emplace_back(token, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  vocab.max_size = max_size;
  vocab.id_to_token = {Vocabulary::kPadToken, Vocabulary::kUnkToken};
  const std::size_t capacity = static_cast<std::size_t>(max_size) - 2;
  for (std::size_t i = 0; i < ranked.size() && i < capacity; ++i) {
    vocab.id_to_token.push_back(ranked[i].first);
  }
  for (std::size_t id = 0; id < vocab.id_to_token.size(); ++id) {
    vocab.token_to_id[vocab.id_to_token[id]] = static_cast<std::int32_t>(id);
  }
  return vocab;
}

Vocabulary build_vocab(const std::vector<PairedExample>& examples,
                       std::int32_t max_size, std::int32_t min_count) {
  if (examples.empty()) fail_data("empty corpus");
  std::map<std::string, std::int64_t> counts;
  for (const auto& ex : examples) {
    for (const auto& t : ex.query.tokens) ++counts[t];
    for (const auto& t : ex.document.tokens) ++counts[t];
  }
  return build_vocab_from_counts(counts, max_size, min_count);
}

IdSequence encode_ids(const Document& doc, const Vocabulary& vocab,
                      std::size_t max_len) {
  require(max_len >= 1, "encode_ids: max_len must be >= 1");
  if (doc.tokens.empty()) fail_data("empty document: " + doc.id);
  IdSequence seq;
  const std::size_t n = std::min(doc.tokens.size(), max_len);
  seq.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    seq.ids.push_back(vocab.id_of(doc.tokens[i]));
  }
  return seq;
}

namespace {

// Shared line-by-line JSONL walk; `parse_record` returns false to skip.
template <typename ParseRecord>
void for_each_jsonl_record(const std::string& path, bool permissive,
                           LoadReport* report, ParseRecord&& parse_record) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open file: " + path);
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      if (!rec.is_object()) fail_data("line is not a JSON object");
      parse_record(rec);
      ++rep.loaded;
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": " << e.what();
      if (!permissive) fail_data(msg.str());
      ++rep.skipped;
      rep.issues.push_back(msg.str());
    }
  }
  if (rep.loaded == 0) {
    rep.issues.push_back(path + ": no records loaded");
  }
}

}  // namespace

std::vector<PairedExample> load_jsonl(const std::string& path, bool permissive,
                                      LoadReport* report,
                                      std::string_view query_domain) {
  std::vector<PairedExample> examples;
  for_each_jsonl_record(path, permissive, report, [&](const json& rec) {
    PairedExample ex;
    const std::string id = rec.at("id").get<std::string>();
    const std::string domain = rec.at("domain").get<std::string>();
    ex.query.id = id;
    ex.query.domain = std::string(query_domain);
    ex.query.tokens = side_tokens(rec, "query_tokens", "query_text",
                                  query_domain);
    ex.document.id = id;
    ex.document.domain = domain;
    ex.document.tokens = side_tokens(rec, "doc_tokens", "doc_text", domain);
    if (rec.contains("provenance")) {
      ex.provenance =
          provenance_from_string(rec.at("provenance").get<std::string>());
    }
    if (ex.query.tokens.empty()) fail_data("query tokenizes to empty");
    if (ex.document.tokens.empty()) fail_data("document tokenizes to empty");
    examples.push_back(std::move(ex));
  });
  return examples;
}

std::vector<Document> load_query_jsonl(const std::string& path,
                                       bool permissive, LoadReport* report,
                                       std::string_view query_domain) {
  std::vector<Document> queries;
  for_each_jsonl_record(path, permissive, report, [&](const json& rec) {
    Document q;
    q.id = rec.at("id").get<std::string>();
    q.domain = std::string(query_domain);
    q.tokens = side_tokens(rec, "query_tokens", "query_text", query_domain);
    if (q.tokens.empty()) fail_data("query tokenizes to empty");
    queries.push_back(std::move(q));
  });
  return queries;
}

void write_jsonl(const std::string& path,
                 const std::vector<PairedExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("cannot write file: " + path);
  for (const auto& ex : examples) {
    out << pair_to_json(ex).dump() << "\n";
  }
  if (!out) fail_data("write failed: " + path);
}

}  // namespace crossrank
