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
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "crossrank/corpus.hpp"
#include "crossrank/distill.hpp"
#include "crossrank/encoder.hpp"
#include "json.hpp"

namespace crossrank {

// Hyperparameters; recorded verbatim into every checkpoint.
struct TrainConfig {
  int batch_size = 256;
  int epochs = 10;
  double learning_rate = 1e-3;
  int dim = 128;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int max_len = 200;
  int vocab_max_size = 50000;
  int vocab_min_count = 1;
  int m = 0;  // samples per direction per original pair
  int patience = 5;
  int valid_pool_size = 1000;
  bool symmetric_loss = false;
  int threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// One vocabulary per encoder: the query side plus one per document domain.
struct VocabBundle {
  Vocabulary query;
  std::map<std::string, Vocabulary> docs;  // domain -> vocabulary

  const Vocabulary& doc_vocab(const std::string& domain) const;
};

VocabBundle build_vocab_bundle(const std::vector<PairedExample>& data,
                               std::int32_t max_size, std::int32_t min_count);

// Rebuild a vocabulary from its id-ordered token list (checkpoint loading).
Vocabulary vocabulary_from_tokens(const std::vector<std::string>& tokens);

// Adam accumulators for one encoder. Embedding moments are dense in memory
// but updated sparsely: only rows touched by a batch move.
struct OptimizerState {
  std::vector<double> m_embedding, v_embedding;  // vocab_size x dim
  std::vector<double> m_attn, v_attn;            // dim
  std::array<double, 3> m_mix{}, v_mix{};
  std::int64_t step = 0;

  static OptimizerState zeros_like(const EncoderParams& params);
};

struct OptimizerBundle {
  OptimizerState query;
  std::map<std::string, OptimizerState> docs;  // domain -> state
};

// One Adam update (beta1=0.9, beta2=0.999, eps=1e-8, bias correction by the
// per-encoder step counter). Rows absent from `grads` keep their moments.
void adam_step(EncoderParams& params, const EncoderGradients& grads,
               OptimizerState& state, double learning_rate);

// A training example with both sides already mapped to token ids.
struct EncodedExample {
  IdSequence query_ids;
  IdSequence doc_ids;
  std::string doc_domain;
  std::string example_id;
};

std::vector<EncodedExample> encode_examples(
    const std::vector<PairedExample>& data, const VocabBundle& vocabs,
    std::size_t max_len);

struct BatchGradients {
  EncoderGradients query;
  std::map<std::string, EncoderGradients> docs;  // domain -> gradients
};

// In-batch contrastive loss over one batch; forward only. The indices pick
// rows of `examples`.
double batch_forward(const EncoderBundle& bundle,
                     const std::vector<EncodedExample>& examples,
                     const std::vector<std::size_t>& batch, double temperature,
                     bool symmetric);

// Forward plus parameter gradients, reduced over the batch in index order.
double batch_forward_backward(const EncoderBundle& bundle,
                              const std::vector<EncodedExample>& examples,
                              const std::vector<std::size_t>& batch,
                              double temperature, bool symmetric,
                              BatchGradients* grads, int threads);

// Everything needed to resume or apply a trained model.
struct Checkpoint {
  TrainConfig config;
  VocabBundle vocabs;
  EncoderBundle encoders;
  OptimizerBundle optimizer;
  int epoch = 0;  // epoch (1-based) whose parameters these are
  double best_valid_nll = std::numeric_limits<double>::infinity();
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_nll = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;  // best-validation-NLL parameters
  std::vector<EpochStats> history;
};

// Mini-batch training with per-epoch seeded shuffles, Adam updates, and
// early stopping on validation NLL (strict improvement, `patience` stalls
// allowed). Examples are canonically ordered before training so any
// permutation of the same multiset trains identically. Deterministic for a
// fixed seed regardless of thread count.
TrainResult train(const std::vector<PairedExample>& data,
                  const std::vector<PairedExample>& valid,
                  const TrainConfig& config);

inline TrainResult train(const AugmentedDataset& data,
                         const std::vector<PairedExample>& valid,
                         const TrainConfig& config) {
  return train(data.examples, valid, config);
}

// Mean per-example NLL where each example's softmax pool is its evaluation
// batch: a seeded shuffle splits `data` into pools of `pool_size` (last
// partial pool kept), each query is scored against all pool documents.
double evaluate_nll(const Checkpoint& checkpoint,
                    const std::vector<PairedExample>& data, int pool_size,
                    std::uint64_t seed);

// The same computation on already-encoded examples (used inside train()).
double evaluate_nll_encoded(const EncoderBundle& bundle,
                            const std::vector<EncodedExample>& examples,
                            int pool_size, std::uint64_t seed,
                            double temperature, int threads);

// FNV-1a over the serialized parameter bytes of every encoder; ties an
// index to the checkpoint that produced it.
std::uint64_t params_fingerprint(const EncoderBundle& encoders);

// Little-endian binary checkpoint: magic "NBOW1", u32 format version, JSON
// header (config, vocabularies, array manifest), then f64 arrays.
// save -> load -> save is byte-identical.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace crossrank
