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

#include "crossrank/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crossrank/common.hpp"

namespace crossrank {

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

}  // namespace

double cosine_similarity(std::span<const double> u,
                         std::span<const double> v) {
  require(u.size() == v.size(), "cosine_similarity: dimension mismatch");
  const double nu = std::max(norm(u), kNormEpsilon);
  const double nv = std::max(norm(v), kNormEpsilon);
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

SimilarityBatch similarity_batch(
    const std::vector<PooledEmbedding>& query_embs,
    const std::vector<PooledEmbedding>& doc_embs, double temperature) {
  require(query_embs.size() == doc_embs.size(),
          "similarity_batch: query/document count mismatch");
  require(!query_embs.empty(), "similarity_batch: empty batch");
  require(temperature > 0.0, "similarity_batch: temperature must be > 0");
  const std::size_t b = query_embs.size();
  SimilarityBatch batch;
  batch.batch = b;
  batch.temperature = temperature;
  batch.raw_cos.resize(b * b);
  batch.sims.resize(b * b);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double c =
          cosine_similarity(query_embs[i].vector, doc_embs[j].vector);
      batch.raw_cos[i * b + j] = c;
      batch.sims[i * b + j] = c / temperature;
    }
  }
  return batch;
}

namespace {

// Row-softmax with max subtraction; returns mean -log(diag).
double softmax_rows(std::span<const double> sims, std::size_t b,
                    std::vector<double>& prob) {
  prob.resize(b * b);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double* row = sims.data() + i * b;
    double row_max = row[0];
    for (std::size_t j = 1; j < b; ++j) row_max = std::max(row_max, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const double e = std::exp(row[j] - row_max);
      prob[i * b + j] = e;
      sum += e;
    }
    for (std::size_t j = 0; j < b; ++j) prob[i * b + j] /= sum;
    loss -= row[i] - row_max - std::log(sum);
  }
  return loss / double(b);
}

}  // namespace

LossOutput contrastive_loss(const SimilarityBatch& batch, bool symmetric) {
  const std::size_t b = batch.batch;
  require(b >= 1, "contrastive_loss: empty batch");
  for (double s : batch.sims) {
    if (!std::isfinite(s)) fail_data("contrastive_loss: non-finite similarity");
  }

  LossOutput out;
  out.symmetric = symmetric;
  out.loss = softmax_rows(batch.sims, b, out.prob);
  if (symmetric) {
    // Column direction: softmax over queries for each document.
    std::vector<double> transposed(b * b);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        transposed[j * b + i] = batch.sims[i * b + j];
      }
    }
    std::vector<double> col_prob;
    const double col_loss = softmax_rows(transposed, b, col_prob);
    out.loss = 0.5 * (out.loss + col_loss);
  }
  return out;
}

PairGradients loss_backward(const SimilarityBatch& batch,
                            const LossOutput& loss_out,
                            const std::vector<PooledEmbedding>& query_embs,
                            const std::vector<PooledEmbedding>& doc_embs) {
  const std::size_t b = batch.batch;
  require(query_embs.size() == b && doc_embs.size() == b,
          "loss_backward: embedding count mismatch");
  require(loss_out.prob.size() == b * b, "loss_backward: prob size mismatch");
  const std::size_t dim = query_embs[0].vector.size();

  // dL/dsims: softmax cross-entropy gradient, (p - I)/B per direction.
  std::vector<double> dsims(b * b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      dsims[i * b + j] =
          (loss_out.prob[i * b + j] - (i == j ? 1.0 : 0.0)) / double(b);
    }
  }
  if (loss_out.symmetric) {
    // Recompute the column-direction probabilities and average.
    std::vector<double> transposed(b * b);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        transposed[j * b + i] = batch.sims[i * b + j];
      }
    }
    std::vector<double> col_prob;
    softmax_rows(transposed, b, col_prob);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        const double col_grad =
            (col_prob[j * b + i] - (i == j ? 1.0 : 0.0)) / double(b);
        dsims[i * b + j] = 0.5 * (dsims[i * b + j] + col_grad);
      }
    }
  }

  PairGradients grads;
  grads.d_query.assign(b, std::vector<double>(dim, 0.0));
  grads.d_doc.assign(b, std::vector<double>(dim, 0.0));

  std::vector<double> query_norms(b), doc_norms(b);
  for (std::size_t i = 0; i < b; ++i) {
    query_norms[i] = std::max(norm(query_embs[i].vector), kNormEpsilon);
    doc_norms[i] = std::max(norm(doc_embs[i].vector), kNormEpsilon);
  }

  // Chain through cosine: d cos(u,v)/du = v/(|u||v|) - cos(u,v) u/|u|^2.
  for (std::size_t i = 0; i < b; ++i) {
    const auto& u = query_embs[i].vector;
    for (std::size_t j = 0; j < b; ++j) {
      const double g = dsims[i * b + j] / batch.temperature;
      if (g == 0.0) continue;
      const auto& v = doc_embs[j].vector;
      const double c = batch.raw_cos[i * b + j];
      const double inv_uv = 1.0 / (query_norms[i] * doc_norms[j]);
      const double inv_uu = 1.0 / (query_norms[i] * query_norms[i]);
      const double inv_vv = 1.0 / (doc_norms[j] * doc_norms[j]);
      for (std::size_t d = 0; d < dim; ++d) {
        grads.d_query[i][d] += g * (v[d] * inv_uv - c * u[d] * inv_uu);
        grads.d_doc[j][d] += g * (u[d] * inv_uv - c * v[d] * inv_vv);
      }
    }
  }
  return grads;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "kl_divergence: support size mismatch");
  require(!p.empty(), "kl_divergence: empty distributions");
  double p_sum = 0.0, q_sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] >= 0.0 && q[i] >= 0.0, "kl_divergence: negative probability");
    p_sum += p[i];
    q_sum += q[i];
  }
  require(std::abs(p_sum - 1.0) < 1e-6, "kl_divergence: p does not sum to 1");
  require(std::abs(q_sum - 1.0) < 1e-6, "kl_divergence: q does not sum to 1");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) fail_data("absolute continuity violated");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double pool_nll_from_scores(std::span<const double> scores, std::size_t n) {
  require(n >= 1 && scores.size() == n * n,
          "pool_nll_from_scores: bad matrix shape");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = scores.data() + i * n;
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) row_max = std::max(row_max, row[j]);
    if (!std::isfinite(row_max)) {
      total += std::log(double(n));  // degenerate row: uniform fallback
      continue;
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(row[j] - row_max);
    total += -(row[i] - row_max - std::log(sum));
  }
  return total / double(n);
}

}  // namespace crossrank
