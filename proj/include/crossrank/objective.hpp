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

#include <span>
#include <vector>

#include "crossrank/encoder.hpp"

namespace crossrank {

// Guard against zero-norm embeddings in cosine computations.
inline constexpr double kNormEpsilon = 1e-12;

// (u.v) / (max(|u|,eps) * max(|v|,eps)), clamped to [-1, 1].
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Pairwise similarity matrix for one training batch: entry (i,j) is
// cosine(query_i, doc_j) / temperature. The raw cosines are kept for the
// backward pass.
struct SimilarityBatch {
  std::size_t batch = 0;
  double temperature = 1.0;
  std::vector<double> sims;     // B x B row-major, temperature applied
  std::vector<double> raw_cos;  // B x B row-major, before temperature
};

SimilarityBatch similarity_batch(
    const std::vector<PooledEmbedding>& query_embs,
    const std::vector<PooledEmbedding>& doc_embs, double temperature);

// In-batch softmax cross-entropy. Default normalization is per query over
// the batch documents; the symmetric variant averages in the per-document
// direction as well.
struct LossOutput {
  double loss = 0.0;
  std::vector<double> prob;  // B x B row-stochastic (query-direction)
  bool symmetric = false;
};

LossOutput contrastive_loss(const SimilarityBatch& batch,
                            bool symmetric = false);

// Loss gradients with respect to the pooled query and document embeddings.
struct PairGradients {
  std::vector<std::vector<double>> d_query;  // B x dim
  std::vector<std::vector<double>> d_doc;    // B x dim
};

PairGradients loss_backward(const SimilarityBatch& batch,
                            const LossOutput& loss_out,
                            const std::vector<PooledEmbedding>& query_embs,
                            const std::vector<PooledEmbedding>& doc_embs);

// Sum_x p_x ln(p_x/q_x) with 0 ln(0/q) = 0; errors where p_x > 0, q_x = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Mean of -log softmax diagonal for one pool's score matrix (row-major,
// n x n). Rows whose scores are all -inf fall back to the uniform pool.
double pool_nll_from_scores(std::span<const double> scores, std::size_t n);

}  // namespace crossrank
