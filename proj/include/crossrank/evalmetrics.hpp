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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crossrank/corpus.hpp"
#include "crossrank/distill.hpp"
#include "crossrank/trainer.hpp"
#include "json.hpp"

namespace crossrank {

// One query's ranking over a candidate pool; ranks are 1-based.
struct RankedList {
  std::string query_id;
  std::vector<std::string> doc_ids;  // best first
  std::optional<int> rank_of_true;
};

// Graded relevance; absent pairs mean grade 0.
struct RelevanceLabels {
  std::map<std::pair<std::string, std::string>, double> grades;

  double grade(const std::string& query_id, const std::string& doc_id) const;
  // Every (doc_id, grade) labeled for the query, doc_id-sorted.
  std::vector<std::pair<std::string, double>> labeled_docs(
      const std::string& query_id) const;
};

// JSONL with query_id, doc_id, relevance (non-negative, finite).
RelevanceLabels load_relevance_labels(const std::string& path);

// Mean of 1/rank_of_true; every list must carry a rank.
double mrr(const std::vector<RankedList>& ranked);

// DCG = sum_{i<=k} rel_i / log2(i+1) with gain = the raw relevance grade;
// IDCG ranks all docs labeled for the query; all-zero relevance -> 0.
double ndcg(const RankedList& ranked, const RelevanceLabels& labels, int k);

// Rank one pool's score matrix (row-major p x p, entry (i, j) scoring
// query i against document j). Query i's true document is document i. Ties
// break by doc id ascending, then input position.
std::vector<RankedList> rank_pool(std::span<const double> scores,
                                  const std::vector<std::string>& query_ids,
                                  const std::vector<std::string>& doc_ids);

// Scores a pool of examples: row-major |pool| x |pool| matrix over
// (query_i, doc_j). Higher is better; NLL treats rows as logits.
class PoolScorer {
 public:
  virtual ~PoolScorer() = default;
  virtual std::vector<double> score_pool(
      const std::vector<const PairedExample*>& pool) const = 0;
};

// Bi-encoder scores: cosine / temperature under the checkpoint's encoders.
class StudentPoolScorer final : public PoolScorer {
 public:
  explicit StudentPoolScorer(const Checkpoint& checkpoint, int threads = 1)
      : checkpoint_(checkpoint), threads_(threads) {}
  std::vector<double> score_pool(
      const std::vector<const PairedExample*>& pool) const override;

 private:
  const Checkpoint& checkpoint_;
  int threads_;
};

// Teacher log p(doc | query); requires a scoring-capable teacher.
class TeacherPoolScorer final : public PoolScorer {
 public:
  explicit TeacherPoolScorer(const TeacherSampler& teacher, int threads = 1);
  std::vector<double> score_pool(
      const std::vector<const PairedExample*>& pool) const override;

 private:
  const TeacherSampler& teacher_;
  int threads_;
};

struct DomainMetrics {
  std::size_t count = 0;
  double mrr = 0.0;
  double nll = 0.0;
  std::optional<double> ndcg;
};

struct EvalReport {
  int pool_size = 0;
  bool mixed_pools = false;
  std::map<std::string, DomainMetrics> per_domain;
  DomainMetrics overall;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Seeded shuffle partitions the test pairs into pools of `pool_size` (the
// last pool may be smaller; a set smaller than one pool evaluates as a
// single pool with a warning). Each query is scored against all documents
// in its pool; MRR and NLL aggregate per document domain and overall.
// Pools are per-domain unless `mixed_pools`.
EvalReport evaluate_pools(const PoolScorer& scorer,
                          const std::vector<PairedExample>& test,
                          int pool_size, std::uint64_t seed,
                          bool mixed_pools = false);

EvalReport evaluate_pools(const Checkpoint& checkpoint,
                          const std::vector<PairedExample>& test,
                          int pool_size, std::uint64_t seed,
                          bool mixed_pools = false);

// Mean NDCG@k over queries that have labeled candidates: each query's
// candidates are exactly its labeled docs, ranked by student score.
// Queries without labels are skipped and counted in the report warning.
EvalReport evaluate_ndcg(const Checkpoint& checkpoint,
                         const std::vector<Document>& queries,
                         const std::vector<Document>& docs,
                         const RelevanceLabels& labels, int k,
                         int threads = 1);

}  // namespace crossrank
