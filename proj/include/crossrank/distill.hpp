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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crossrank/corpus.hpp"

namespace crossrank {

// Teacher contract: conditional samplers in both directions, plus optional
// exact scoring for teachers that can provide it. Sampling is deterministic
// given the seed. The flat-prior assumption (all queries and documents
// equally likely) makes the joint proportional to either conditional.
class TeacherSampler {
 public:
  virtual ~TeacherSampler() = default;

  // m documents drawn from p(doc | query).
  virtual std::vector<Document> sample_docs(const Document& query, int m,
                                            std::uint64_t seed) const = 0;
  // m queries drawn from p(query | doc).
  virtual std::vector<Document> sample_queries(const Document& doc, int m,
                                               std::uint64_t seed) const = 0;

  virtual bool can_score() const { return false; }
  // log p(doc | query); only for teachers with can_score().
  virtual double log_prob(const Document& doc, const Document& query) const;
};

// Offline pre-sampled pairs, one JSONL record per sample:
//   {"example_id": ..., "direction": "q2d"|"d2q", "sample_index": n,
//    "tokens": [...]}
// Samples are keyed by the original example id; requests take the first m
// by sample index.
class FileTeacher final : public TeacherSampler {
 public:
  explicit FileTeacher(const std::string& path);

  std::vector<Document> sample_docs(const Document& query, int m,
                                    std::uint64_t seed) const override;
  std::vector<Document> sample_queries(const Document& doc, int m,
                                       std::uint64_t seed) const override;

  // Invariant check: every referenced id exists in the corpus and sample
  // indices form a contiguous 0..k-1 run per direction.
  void validate_against(const std::vector<PairedExample>& corpus) const;

  std::size_t num_examples() const { return samples_.size(); }

 private:
  struct DirectionSamples {
    std::vector<std::vector<std::string>> q2d;  // indexed by sample_index
    std::vector<std::vector<std::string>> d2q;
  };
  std::vector<Document> take(const std::string& example_id, bool q2d, int m,
                             const char* direction_name) const;

  std::map<std::string, DirectionSamples> samples_;
};

// Per-token stochastic channel between a query-token alphabet and a
// document-token alphabet; length-preserving, so conditionals factor over
// positions and are exactly enumerable for short sequences. Stands in for a
// neural teacher wherever closed-form checks are needed.
class SyntheticChannelTeacher final : public TeacherSampler {
 public:
  using Row = std::map<std::string, double>;  // target token -> probability

  SyntheticChannelTeacher(std::string query_domain, std::string doc_domain,
                          std::map<std::string, Row> forward);
  SyntheticChannelTeacher(std::string query_domain, std::string doc_domain,
                          std::map<std::string, Row> forward,
                          std::map<std::string, Row> inverse);

  std::vector<Document> sample_docs(const Document& query, int m,
                                    std::uint64_t seed) const override;
  std::vector<Document> sample_queries(const Document& doc, int m,
                                       std::uint64_t seed) const override;
  bool can_score() const override { return true; }
  // Sum of per-position log channel probabilities; -inf for a length
  // mismatch or an unreachable token.
  double log_prob(const Document& doc, const Document& query) const override;

  const std::string& query_domain() const { return query_domain_; }
  const std::string& doc_domain() const { return doc_domain_; }
  const std::map<std::string, Row>& forward() const { return forward_; }
  const std::map<std::string, Row>& inverse() const { return inverse_; }

  // Sorted token alphabets.
  std::vector<std::string> query_alphabet() const;
  std::vector<std::string> doc_alphabet() const;

 private:
  const Row& forward_row(const std::string& token) const;
  const Row& inverse_row(const std::string& token) const;

  std::string query_domain_;
  std::string doc_domain_;
  std::map<std::string, Row> forward_;
  std::map<std::string, Row> inverse_;
};

// Channel JSON file: {"query_domain", "doc_domain", "forward": {tok: {tok:
// p}}, optional "inverse"}. A missing inverse is derived by Bayes under the
// flat prior.
SyntheticChannelTeacher load_channel(const std::string& path);
void save_channel(const std::string& path,
                  const SyntheticChannelTeacher& teacher);

// Random channel generator for desk-scale experiments: `alphabet` tokens
// per side (q0.., d0..), each query token mapping to `fanout` document
// tokens with normalized random weights; every document token is reachable.
SyntheticChannelTeacher make_random_channel(int alphabet, int fanout,
                                            std::uint64_t seed,
                                            const std::string& query_domain,
                                            const std::string& doc_domain);

// Corpus of (query, channel-sampled document) pairs with uniform random
// query tokens and lengths in [min_len, max_len].
std::vector<PairedExample> sample_channel_corpus(
    const SyntheticChannelTeacher& teacher, std::size_t n, int min_len,
    int max_len, std::uint64_t seed, const std::string& id_prefix);

// Full enumeration of p(doc-sequence | query) for a length-preserving
// channel. Outcome index encodes the sequence in base |alphabet|, position
// 0 most significant.
struct EnumeratedDistribution {
  std::vector<std::string> alphabet;  // sorted document-token alphabet
  std::size_t length = 0;
  std::vector<double> probs;  // |alphabet|^length entries

  double entropy() const;  // nats
  std::vector<std::string> sequence_at(std::size_t index) const;
  std::size_t index_of(const std::vector<std::string>& tokens) const;
};

EnumeratedDistribution exact_conditional(const SyntheticChannelTeacher& teacher,
                                         const Document& query,
                                         std::size_t max_outcomes = 1000000);

// The augmented pool: originals plus teacher samples in both directions.
struct AugmentedDataset {
  std::vector<PairedExample> examples;
  int m = 0;
  std::size_t count_original = 0;
  std::size_t count_sampled_query = 0;
  std::size_t count_sampled_document = 0;
  std::size_t dropped_duplicates = 0;
};

// For each original pair: keep it, add m documents sampled from
// p(doc|query) and m queries sampled from p(query|doc), then shuffle the
// pool with the given seed. Per-example sample seeds derive from the global
// seed and the example id, so the result is order- and thread-independent.
// With dedup on, samples that reproduce their original token-for-token are
// dropped and reported. Teacher failures skip the example's samples when
// strict is off, abort otherwise.
AugmentedDataset augment_dataset(const std::vector<PairedExample>& data,
                                 const TeacherSampler& teacher, int m,
                                 std::uint64_t seed, bool dedup,
                                 bool strict = false,
                                 std::vector<std::string>* reports = nullptr);

// Monte Carlo estimate of the teacher-student cross-entropy:
// -(1/(N m)) sum over doc samples of student log-probability.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

using StudentLogProb =
    std::function<double(const Document& doc, const Document& query)>;

McEstimate mc_cross_entropy_stats(const TeacherSampler& teacher,
                                  const StudentLogProb& student_log_prob,
                                  const std::vector<Document>& queries, int m,
                                  std::uint64_t seed);

double mc_cross_entropy(const TeacherSampler& teacher,
                        const StudentLogProb& student_log_prob,
                        const std::vector<Document>& queries, int m,
                        std::uint64_t seed);

}  // namespace crossrank
