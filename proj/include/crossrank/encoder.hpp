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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crossrank/corpus.hpp"

namespace crossrank {

// Hybrid Neural-Bag-of-Words encoder: token embeddings reduced by max,
// mean, and attention pooling, mixed by a learned convex combination.
struct EncoderParams {
  std::int32_t vocab_size = 0;
  std::int32_t dim = 0;
  std::vector<double> embedding;    // vocab_size x dim, row-major
  std::vector<double> attn_vector;  // dim
  std::array<double, 3> mix_logits{0.0, 0.0, 0.0};  // max, mean, attn

  std::span<const double> row(std::int32_t id) const {
    return {embedding.data() + static_cast<std::size_t>(id) * dim,
            static_cast<std::size_t>(dim)};
  }
};

// Uniform [-0.1, 0.1] embeddings and attention vector from a seeded stream;
// zero mixture logits start the three poolings at equal weight.
EncoderParams init_params(std::int32_t vocab_size, std::int32_t dim,
                          std::uint64_t seed);

// Forward result plus the intermediates the backward pass needs.
struct PooledEmbedding {
  std::vector<double> vector;          // dim
  std::vector<double> max_pool;        // dim
  std::vector<double> mean_pool;       // dim
  std::vector<double> attn_pool;       // dim
  std::vector<double> attn_weights;    // seq length, sums to 1
  std::array<double, 3> mix_weights{}; // sums to 1
  std::vector<std::int32_t> argmax_pos;  // dim; first position hitting max
  std::size_t seq_length = 0;
};

PooledEmbedding embed_sequence(const EncoderParams& params,
                               const IdSequence& ids);

// Gradients in parameter shapes; embedding rows are sparse over the rows a
// sequence actually touched. The ordered map fixes the reduction order.
struct EncoderGradients {
  std::map<std::int32_t, std::vector<double>> embedding_rows;
  std::vector<double> attn_vector;
  std::array<double, 3> mix_logits{0.0, 0.0, 0.0};

  void accumulate(const EncoderGradients& other);
};

// d(upstream . output)/d(params) for the cached forward pass. Max pooling
// routes its subgradient to the first position attaining each coordinate.
EncoderGradients encoder_backward(const EncoderParams& params,
                                  const IdSequence& ids,
                                  const PooledEmbedding& cached,
                                  std::span<const double> upstream);

// One encoder for the query domain plus one per document domain.
struct EncoderBundle {
  std::string query_domain;
  EncoderParams query_encoder;
  std::map<std::string, EncoderParams> doc_encoders;

  const EncoderParams& encoder_for(const std::string& domain) const;
  EncoderParams& encoder_for(const std::string& domain);
};

}  // namespace crossrank
