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
#include <span>
#include <string>
#include <vector>

#include "crossrank/corpus.hpp"
#include "crossrank/distill.hpp"
#include "crossrank/trainer.hpp"

namespace crossrank {

// Index rows with norm below this are rejected at build time; above it they
// normalize to unit length within the same tolerance.
inline constexpr double kIndexNormEpsilon = 1e-9;

// Precomputed document embeddings: one unit-normalized row per document,
// stamped with the fingerprint of the encoder parameters that produced it.
struct EmbeddingIndex {
  std::int32_t dim = 0;
  std::vector<std::string> doc_ids;
  std::vector<std::string> domains;  // parallel to doc_ids
  std::vector<double> matrix;        // size() x dim, row-major, unit rows
  std::uint64_t fingerprint = 0;

  std::size_t size() const { return doc_ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return {matrix.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
};

// Descending score; ties broken by doc_id ascending.
struct SearchResult {
  std::vector<ScoredDoc> hits;
};

// Embeds every document with its domain encoder and L2-normalizes. A
// document that embeds to a (near-)zero vector or names an unknown domain
// aborts the build with a diagnostic.
EmbeddingIndex build_index(const Checkpoint& checkpoint,
                           const std::vector<Document>& docs, int threads = 1);

// Cosine of the query embedding against every index row, no pruning.
std::vector<double> brute_force_scores(const EmbeddingIndex& index,
                                       std::span<const double> query_embedding);

// Exact top-k: embed the query, score all rows, sort by (score desc,
// doc_id asc), clamp k to the index size. The checkpoint must be the one
// that built the index (fingerprint check).
SearchResult search_topk(const EmbeddingIndex& index, const Document& query,
                         const Checkpoint& checkpoint, std::size_t k);

// Full per-query rankings by teacher log p(doc | query); the cross-scoring
// path used to evaluate a scoring-capable teacher. `limit` guards the
// |queries| x |docs| blowup.
std::vector<SearchResult> teacher_rerank(const TeacherSampler& teacher,
                                         const std::vector<Document>& queries,
                                         const std::vector<Document>& docs,
                                         std::size_t limit = 10'000'000,
                                         int threads = 1);

// Same binary envelope as checkpoints, magic "NBIX1".
void save_index(const std::string& path, const EmbeddingIndex& index);
EmbeddingIndex load_index(const std::string& path);

}  // namespace crossrank
