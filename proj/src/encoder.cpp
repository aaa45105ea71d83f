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

#include "crossrank/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "crossrank/common.hpp"
#include "crossrank/rng.hpp"

namespace crossrank {

EncoderParams init_params(std::int32_t vocab_size, std::int32_t dim,
                          std::uint64_t seed) {
  require(vocab_size >= 2, "init_params: vocab_size must be >= 2");
  require(dim >= 1, "init_params: dim must be >= 1");
  EncoderParams params;
  params.vocab_size = vocab_size;
  params.dim = dim;
  params.embedding.resize(static_cast<std::size_t>(vocab_size) * dim);
  params.attn_vector.resize(dim);
  SplitMix64 rng(seed);
  for (double& w : params.embedding) w = rng.uniform(-0.1, 0.1);
  for (double& w : params.attn_vector) w = rng.uniform(-0.1, 0.1);
  params.mix_logits = {0.0, 0.0, 0.0};
  return params;
}

namespace {

// Stable softmax into `out`; returns nothing, weights sum to 1.
void softmax_inplace(std::span<double> values) {
  double max_val = values[0];
  for (double v : values) max_val = std::max(max_val, v);
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - max_val);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

}  // namespace

PooledEmbedding embed_sequence(const EncoderParams& params,
                               const IdSequence& ids) {
  if (ids.ids.empty()) fail_data("empty sequence");
  const std::int32_t dim = params.dim;
  const std::size_t len = ids.ids.size();
  for (std::int32_t id : ids.ids) {
    require(id >= 0 && id < params.vocab_size,
            "embed_sequence: token id out of range");
  }

  PooledEmbedding out;
  out.seq_length = len;
  out.max_pool.assign(dim, 0.0);
  out.mean_pool.assign(dim, 0.0);
  out.attn_pool.assign(dim, 0.0);
  out.argmax_pos.assign(dim, 0);
  out.attn_weights.resize(len);

  // Max and mean pooling, plus raw attention scores.
  for (std::size_t t = 0; t < len; ++t) {
    const auto e = params.row(ids.ids[t]);
    double score = 0.0;
    for (std::int32_t d = 0; d < dim; ++d) {
      const double v = e[d];
      if (t == 0) {
        out.max_pool[d] = v;
      } else if (v > out.max_pool[d]) {  // strict: ties keep the first position
        out.max_pool[d] = v;
        out.argmax_pos[d] = static_cast<std::int32_t>(t);
      }
      out.mean_pool[d] += v;
      score += params.attn_vector[d] * v;
    }
    out.attn_weights[t] = score;
  }
  for (std::int32_t d = 0; d < dim; ++d) out.mean_pool[d] /= double(len);

  softmax_inplace(out.attn_weights);
  for (std::size_t t = 0; t < len; ++t) {
    const auto e = params.row(ids.ids[t]);
    const double a = out.attn_weights[t];
    for (std::int32_t d = 0; d < dim; ++d) out.attn_pool[d] += a * e[d];
  }

  std::array<double, 3> w = params.mix_logits;
  softmax_inplace(w);
  out.mix_weights = w;

  out.vector.resize(dim);
  for (std::int32_t d = 0; d < dim; ++d) {
    out.vector[d] =
        w[0] * out.max_pool[d] + w[1] * out.mean_pool[d] + w[2] * out.attn_pool[d];
  }
  return out;
}

void EncoderGradients::accumulate(const EncoderGradients& other) {
  for (const auto& [row, grad] : other.embedding_rows) {
    auto& acc = embedding_rows[row];
    if (acc.empty()) {
      acc = grad;
    } else {
      for (std::size_t d = 0; d < grad.size(); ++d) acc[d] += grad[d];
    }
  }
  if (attn_vector.empty()) {
    attn_vector = other.attn_vector;
  } else {
    for (std::size_t d = 0; d < other.attn_vector.size(); ++d) {
      attn_vector[d] += other.attn_vector[d];
    }
  }
  for (std::size_t k = 0; k < 3; ++k) mix_logits[k] += other.mix_logits[k];
}

EncoderGradients encoder_backward(const EncoderParams& params,
                                  const IdSequence& ids,
                                  const PooledEmbedding& cached,
                                  std::span<const double> upstream) {
  const std::int32_t dim = params.dim;
  const std::size_t len = ids.ids.size();
  require(upstream.size() == static_cast<std::size_t>(dim),
          "encoder_backward: upstream size mismatch");
  if (cached.seq_length != len ||
      cached.vector.size() != static_cast<std::size_t>(dim)) {
    fail_data("encoder_backward: cached intermediates do not match inputs");
  }

  EncoderGradients grads;
  grads.attn_vector.assign(dim, 0.0);

  const auto& w = cached.mix_weights;

  // Mixture logits: softmax Jacobian against the per-pooling dot products.
  std::array<double, 3> pool_dots{0.0, 0.0, 0.0};
  double out_dot = 0.0;
  for (std::int32_t d = 0; d < dim; ++d) {
    pool_dots[0] += upstream[d] * cached.max_pool[d];
    pool_dots[1] += upstream[d] * cached.mean_pool[d];
    pool_dots[2] += upstream[d] * cached.attn_pool[d];
    out_dot += upstream[d] * cached.vector[d];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    grads.mix_logits[k] = w[k] * (pool_dots[k] - out_dot);
  }

  // Attention softmax Jacobian: b_t = u . e_t with u the attention-branch
  // upstream; ds_t = a_t (b_t - sum_j a_j b_j).
  std::vector<double> b(len, 0.0);
  double b_mean = 0.0;
  for (std::size_t t = 0; t < len; ++t) {
    const auto e = params.row(ids.ids[t]);
    double dot = 0.0;
    for (std::int32_t d = 0; d < dim; ++d) dot += w[2] * upstream[d] * e[d];
    b[t] = dot;
    b_mean += cached.attn_weights[t] * dot;
  }

  auto grad_row = [&](std::int32_t id) -> std::vector<double>& {
    auto& g = grads.embedding_rows[id];
    if (g.empty()) g.assign(dim, 0.0);
    return g;
  };

  for (std::size_t t = 0; t < len; ++t) {
    const auto e = params.row(ids.ids[t]);
    const double a = cached.attn_weights[t];
    const double ds = a * (b[t] - b_mean);  // gradient into the raw score
    auto& g = grad_row(ids.ids[t]);
    for (std::int32_t d = 0; d < dim; ++d) {
      double gd = w[1] / double(len) * upstream[d];  // mean branch
      gd += a * w[2] * upstream[d];                  // attention, direct
      gd += ds * params.attn_vector[d];              // attention, via score
      g[d] += gd;
      grads.attn_vector[d] += ds * e[d];
    }
  }

  // Max branch: subgradient to the first position attaining each coordinate.
  for (std::int32_t d = 0; d < dim; ++d) {
    const std::int32_t t = cached.argmax_pos[d];
    grad_row(ids.ids[t])[d] += w[0] * upstream[d];
  }

  return grads;
}

const EncoderParams& EncoderBundle::encoder_for(
    const std::string& domain) const {
  if (domain == query_domain) return query_encoder;
  auto it = doc_encoders.find(domain);
  if (it == doc_encoders.end()) fail_data("unknown domain tag: " + domain);
  return it->second;
}

EncoderParams& EncoderBundle::encoder_for(const std::string& domain) {
  if (domain == query_domain) return query_encoder;
  auto it = doc_encoders.find(domain);
  if (it == doc_encoders.end()) fail_data("unknown domain tag: " + domain);
  return it->second;
}

}  // namespace crossrank
