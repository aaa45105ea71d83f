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

#include "crossrank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "crossrank/common.hpp"
#include "crossrank/objective.hpp"
#include "crossrank/parallel.hpp"
#include "crossrank/rng.hpp"
#include "crossrank/serialize.hpp"

namespace crossrank {

namespace {

using nlohmann::json;

constexpr const char* kCheckpointMagic = "NBOW1";
constexpr std::uint32_t kCheckpointVersion = 1;

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

const EncoderParams& doc_encoder(const EncoderBundle& bundle,
                                 const std::string& domain) {
  auto it = bundle.doc_encoders.find(domain);
  if (it == bundle.doc_encoders.end()) {
    fail_data("no document encoder for domain '" + domain + "'");
  }
  return it->second;
}

// Canonical training order: a pure function of the example multiset, so two
// corpora holding the same examples train identically however their files
// were ordered.
bool canonical_less(const PairedExample& a, const PairedExample& b) {
  if (a.query.id != b.query.id) return a.query.id < b.query.id;
  if (a.document.id != b.document.id) return a.document.id < b.document.id;
  const int pa = static_cast<int>(a.provenance);
  const int pb = static_cast<int>(b.provenance);
  if (pa != pb) return pa < pb;
  if (a.query.tokens != b.query.tokens) return a.query.tokens < b.query.tokens;
  return a.document.tokens < b.document.tokens;
}

}  // namespace

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  require(batch_size >= 1, "config: batch_size must be >= 1");
  require(epochs >= 1, "config: epochs must be >= 1");
  require(learning_rate > 0.0, "config: learning_rate must be > 0");
  require(dim >= 1, "config: dim must be >= 1");
  require(temperature > 0.0, "config: temperature must be > 0");
  require(max_len >= 1, "config: max_len must be >= 1");
  require(vocab_max_size >= 3, "config: vocab_max_size must be >= 3");
  require(vocab_min_count >= 1, "config: vocab_min_count must be >= 1");
  require(m >= 0, "config: m must be >= 0");
  require(patience >= 1, "config: patience must be >= 1");
  require(valid_pool_size >= 1, "config: valid_pool_size must be >= 1");
  require(threads >= 1, "config: threads must be >= 1");
}

json TrainConfig::to_json() const {
  return json{{"batch_size", batch_size},
              {"epochs", epochs},
              {"learning_rate", learning_rate},
              {"dim", dim},
              {"temperature", temperature},
              {"seed", seed},
              {"max_len", max_len},
              {"vocab_max_size", vocab_max_size},
              {"vocab_min_count", vocab_min_count},
              {"m", m},
              {"patience", patience},
              {"valid_pool_size", valid_pool_size},
              {"symmetric_loss", symmetric_loss},
              {"threads", threads}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig config;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") {
        config.batch_size = value.get<int>();
      } else if (key == "epochs") {
        config.epochs = value.get<int>();
      } else if (key == "learning_rate") {
        config.learning_rate = value.get<double>();
      } else if (key == "dim") {
        config.dim = value.get<int>();
      } else if (key == "temperature") {
        config.temperature = value.get<double>();
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "max_len") {
        config.max_len = value.get<int>();
      } else if (key == "vocab_max_size") {
        config.vocab_max_size = value.get<int>();
      } else if (key == "vocab_min_count") {
        config.vocab_min_count = value.get<int>();
      } else if (key == "m") {
        config.m = value.get<int>();
      } else if (key == "patience") {
        config.patience = value.get<int>();
      } else if (key == "valid_pool_size") {
        config.valid_pool_size = value.get<int>();
      } else if (key == "symmetric_loss") {
        config.symmetric_loss = value.get<bool>();
      } else if (key == "threads") {
        config.threads = value.get<int>();
      } else {
        fail_data("unknown config key: " + key);
      }
    }
  } catch (const json::exception& e) {
    fail_data(std::string("bad config value: ") + e.what());
  }
  return config;
}

// ---------------------------------------------------------------------------
// Vocabularies

const Vocabulary& VocabBundle::doc_vocab(const std::string& domain) const {
  auto it = docs.find(domain);
  if (it == docs.end()) {
    fail_data("no vocabulary for document domain '" + domain + "'");
  }
  return it->second;
}

VocabBundle build_vocab_bundle(const std::vector<PairedExample>& data,
                               std::int32_t max_size, std::int32_t min_count) {
  std::map<std::string, std::int64_t> query_counts;
  std::map<std::string, std::map<std::string, std::int64_t>> doc_counts;
  for (const auto& ex : data) {
    for (const auto& token : ex.query.tokens) ++query_counts[token];
    auto& counts = doc_counts[ex.document.domain];
    for (const auto& token : ex.document.tokens) ++counts[token];
  }
  VocabBundle bundle;
  bundle.query = build_vocab_from_counts(query_counts, max_size, min_count);
  for (const auto& [domain, counts] : doc_counts) {
    bundle.docs[domain] = build_vocab_from_counts(counts, max_size, min_count);
  }
  return bundle;
}

Vocabulary vocabulary_from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < 2 || tokens[0] != Vocabulary::kPadToken ||
      tokens[1] != Vocabulary::kUnkToken) {
    fail_data("corrupt vocabulary: reserved tokens missing");
  }
  Vocabulary vocab;
  vocab.id_to_token = tokens;
  vocab.max_size = static_cast<std::int32_t>(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!vocab.token_to_id.emplace(tokens[i], static_cast<std::int32_t>(i))
             .second) {
      fail_data("corrupt vocabulary: duplicate token '" + tokens[i] + "'");
    }
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Optimizer

OptimizerState OptimizerState::zeros_like(const EncoderParams& params) {
  OptimizerState state;
  state.m_embedding.assign(params.embedding.size(), 0.0);
  state.v_embedding.assign(params.embedding.size(), 0.0);
  state.m_attn.assign(params.attn_vector.size(), 0.0);
  state.v_attn.assign(params.attn_vector.size(), 0.0);
  return state;
}

void adam_step(EncoderParams& params, const EncoderGradients& grads,
               OptimizerState& state, double learning_rate) {
  require(state.m_embedding.size() == params.embedding.size() &&
              state.m_attn.size() == params.attn_vector.size(),
          "adam_step: optimizer/parameter shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  auto update = [&](double& theta, double& m, double& v, double g) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g * g;
    theta -= learning_rate * (m / bc1) / (std::sqrt(v / bc2) + kAdamEpsilon);
  };

  const std::size_t dim = static_cast<std::size_t>(params.dim);
  for (const auto& [row, grad] : grads.embedding_rows) {
    require(row >= 0 && row < params.vocab_size && grad.size() == dim,
            "adam_step: gradient row shape mismatch");
    const std::size_t offset = static_cast<std::size_t>(row) * dim;
    for (std::size_t d = 0; d < dim; ++d) {
      update(params.embedding[offset + d], state.m_embedding[offset + d],
             state.v_embedding[offset + d], grad[d]);
    }
  }
  if (!grads.attn_vector.empty()) {
    require(grads.attn_vector.size() == dim,
            "adam_step: attention gradient shape mismatch");
    for (std::size_t d = 0; d < dim; ++d) {
      update(params.attn_vector[d], state.m_attn[d], state.v_attn[d],
             grads.attn_vector[d]);
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    update(params.mix_logits[k], state.m_mix[k], state.v_mix[k],
           grads.mix_logits[k]);
  }
}

// ---------------------------------------------------------------------------
// Batch forward/backward

std::vector<EncodedExample> encode_examples(
    const std::vector<PairedExample>& data, const VocabBundle& vocabs,
    std::size_t max_len) {
  std::vector<EncodedExample> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    EncodedExample enc;
    enc.query_ids = encode_ids(ex.query, vocabs.query, max_len);
    enc.doc_ids =
        encode_ids(ex.document, vocabs.doc_vocab(ex.document.domain), max_len);
    enc.doc_domain = ex.document.domain;
    enc.example_id = ex.query.id;
    out.push_back(std::move(enc));
  }
  return out;
}

double batch_forward(const EncoderBundle& bundle,
                     const std::vector<EncodedExample>& examples,
                     const std::vector<std::size_t>& batch, double temperature,
                     bool symmetric) {
  require(!batch.empty(), "batch_forward: empty batch");
  const std::size_t b = batch.size();
  std::vector<PooledEmbedding> query_embs(b), doc_embs(b);
  for (std::size_t i = 0; i < b; ++i) {
    const EncodedExample& ex = examples[batch[i]];
    query_embs[i] = embed_sequence(bundle.query_encoder, ex.query_ids);
    doc_embs[i] = embed_sequence(doc_encoder(bundle, ex.doc_domain), ex.doc_ids);
  }
  const SimilarityBatch sims = similarity_batch(query_embs, doc_embs, temperature);
  return contrastive_loss(sims, symmetric).loss;
}

double batch_forward_backward(const EncoderBundle& bundle,
                              const std::vector<EncodedExample>& examples,
                              const std::vector<std::size_t>& batch,
                              double temperature, bool symmetric,
                              BatchGradients* grads, int threads) {
  require(!batch.empty(), "batch_forward_backward: empty batch");
  const std::size_t b = batch.size();
  std::vector<PooledEmbedding> query_embs(b), doc_embs(b);
  parallel_for(b, threads, [&](std::size_t i) {
    const EncodedExample& ex = examples[batch[i]];
    query_embs[i] = embed_sequence(bundle.query_encoder, ex.query_ids);
    doc_embs[i] = embed_sequence(doc_encoder(bundle, ex.doc_domain), ex.doc_ids);
  });

  const SimilarityBatch sims = similarity_batch(query_embs, doc_embs, temperature);
  const LossOutput loss = contrastive_loss(sims, symmetric);
  if (grads == nullptr) return loss.loss;

  const PairGradients pair_grads = loss_backward(sims, loss, query_embs, doc_embs);
  std::vector<EncoderGradients> query_grads(b), doc_grads(b);
  parallel_for(b, threads, [&](std::size_t i) {
    const EncodedExample& ex = examples[batch[i]];
    query_grads[i] = encoder_backward(bundle.query_encoder, ex.query_ids,
                                      query_embs[i], pair_grads.d_query[i]);
    doc_grads[i] = encoder_backward(doc_encoder(bundle, ex.doc_domain),
                                    ex.doc_ids, doc_embs[i], pair_grads.d_doc[i]);
  });

  // Serial reduction in batch order keeps the result thread-count
  // independent.
  grads->query = EncoderGradients{};
  grads->docs.clear();
  for (std::size_t i = 0; i < b; ++i) {
    grads->query.accumulate(query_grads[i]);
    grads->docs[examples[batch[i]].doc_domain].accumulate(doc_grads[i]);
  }
  return loss.loss;
}

// ---------------------------------------------------------------------------
// Validation NLL

double evaluate_nll_encoded(const EncoderBundle& bundle,
                            const std::vector<EncodedExample>& examples,
                            int pool_size, std::uint64_t seed,
                            double temperature, int threads) {
  require(pool_size >= 1, "evaluate_nll: pool_size must be >= 1");
  if (examples.empty()) fail_data("evaluate_nll: empty data");
  const std::size_t n = examples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  deterministic_shuffle(order, rng);

  double total = 0.0;
  for (std::size_t start = 0; start < n; start += pool_size) {
    const std::size_t end = std::min(n, start + pool_size);
    const std::size_t p = end - start;
    std::vector<PooledEmbedding> query_embs(p), doc_embs(p);
    parallel_for(p, threads, [&](std::size_t i) {
      const EncodedExample& ex = examples[order[start + i]];
      query_embs[i] = embed_sequence(bundle.query_encoder, ex.query_ids);
      doc_embs[i] =
          embed_sequence(doc_encoder(bundle, ex.doc_domain), ex.doc_ids);
    });
    const SimilarityBatch sims =
        similarity_batch(query_embs, doc_embs, temperature);
    total += pool_nll_from_scores(sims.sims, p) * static_cast<double>(p);
  }
  return total / static_cast<double>(n);
}

double evaluate_nll(const Checkpoint& checkpoint,
                    const std::vector<PairedExample>& data, int pool_size,
                    std::uint64_t seed) {
  const auto examples = encode_examples(
      data, checkpoint.vocabs,
      static_cast<std::size_t>(checkpoint.config.max_len));
  return evaluate_nll_encoded(checkpoint.encoders, examples, pool_size, seed,
                              checkpoint.config.temperature,
                              checkpoint.config.threads);
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const std::vector<PairedExample>& data,
                  const std::vector<PairedExample>& valid,
                  const TrainConfig& config) {
  config.validate();
  require(!data.empty(), "train: empty training set");
  require(!valid.empty(), "train: empty validation set");

  std::vector<PairedExample> ordered = data;
  std::sort(ordered.begin(), ordered.end(), canonical_less);

  VocabBundle vocabs =
      build_vocab_bundle(ordered, config.vocab_max_size, config.vocab_min_count);
  const auto examples =
      encode_examples(ordered, vocabs, static_cast<std::size_t>(config.max_len));
  const auto valid_examples =
      encode_examples(valid, vocabs, static_cast<std::size_t>(config.max_len));

  EncoderBundle bundle;
  bundle.query_domain = ordered.front().query.domain;
  bundle.query_encoder =
      init_params(vocabs.query.size(), config.dim,
                  mix_seed(config.seed, fnv1a64("encoder:query")));
  OptimizerBundle optimizer;
  optimizer.query = OptimizerState::zeros_like(bundle.query_encoder);
  for (const auto& [domain, vocab] : vocabs.docs) {
    bundle.doc_encoders[domain] =
        init_params(vocab.size(), config.dim,
                    mix_seed(config.seed, fnv1a64("encoder:doc:" + domain)));
    optimizer.docs[domain] =
        OptimizerState::zeros_like(bundle.doc_encoders[domain]);
  }

  const std::uint64_t shuffle_base =
      mix_seed(config.seed, fnv1a64("epoch-shuffle"));
  const std::uint64_t valid_seed =
      mix_seed(config.seed, fnv1a64("validation-pools"));
  const std::size_t n = examples.size();
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

  TrainResult result;
  EncoderBundle best_encoders;
  OptimizerBundle best_optimizer;
  double best_nll = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int stale = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(mix_seed(shuffle_base, static_cast<std::uint64_t>(epoch)));
    deterministic_shuffle(order, rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      const std::vector<std::size_t> batch(order.begin() + start,
                                           order.begin() + end);
      BatchGradients grads;
      double loss = std::numeric_limits<double>::quiet_NaN();
      std::string failure;
      try {
        loss = batch_forward_backward(bundle, examples, batch,
                                      config.temperature,
                                      config.symmetric_loss, &grads,
                                      config.threads);
      } catch (const DataError& e) {
        failure = e.what();
      }
      if (!failure.empty() || !std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training aborted at epoch " << epoch << ", batch " << batches
            << ": " << (failure.empty() ? "non-finite loss" : failure)
            << " (examples:";
        for (std::size_t i : batch) msg << ' ' << examples[i].example_id;
        msg << ")";
        fail_data(msg.str());
      }
      loss_sum += loss;
      ++batches;

      adam_step(bundle.query_encoder, grads.query, optimizer.query,
                config.learning_rate);
      for (const auto& [domain, doc_grads] : grads.docs) {
        adam_step(bundle.doc_encoders.at(domain), doc_grads,
                  optimizer.docs.at(domain), config.learning_rate);
      }
    }

    const double train_loss = loss_sum / static_cast<double>(batches);
    const double valid_nll =
        evaluate_nll_encoded(bundle, valid_examples, config.valid_pool_size,
                             valid_seed, config.temperature, config.threads);
    result.history.push_back({epoch, train_loss, valid_nll});

    if (valid_nll < best_nll) {
      best_nll = valid_nll;
      best_epoch = epoch;
      best_encoders = bundle;
      best_optimizer = optimizer;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }

  result.checkpoint.config = config;
  result.checkpoint.vocabs = std::move(vocabs);
  result.checkpoint.encoders = std::move(best_encoders);
  result.checkpoint.optimizer = std::move(best_optimizer);
  result.checkpoint.epoch = best_epoch;
  result.checkpoint.best_valid_nll = best_nll;
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

std::uint64_t params_fingerprint(const EncoderBundle& encoders) {
  std::string bytes;
  auto append_f64 = [&bytes](double x) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof(bits));
    for (int k = 0; k < 8; ++k) {
      bytes.push_back(static_cast<char>((bits >> (8 * k)) & 0xff));
    }
  };
  auto append_params = [&](const std::string& name, const EncoderParams& p) {
    bytes += name;
    bytes.push_back('\0');
    for (double x : p.embedding) append_f64(x);
    for (double x : p.attn_vector) append_f64(x);
    for (double x : p.mix_logits) append_f64(x);
  };
  append_params("query", encoders.query_encoder);
  for (const auto& [domain, params] : encoders.doc_encoders) {
    append_params("doc:" + domain, params);
  }
  return fnv1a64(bytes);
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  json header;
  header["config"] = checkpoint.config.to_json();
  header["epoch"] = checkpoint.epoch;
  if (std::isfinite(checkpoint.best_valid_nll)) {
    header["best_valid_nll"] = checkpoint.best_valid_nll;
  } else {
    header["best_valid_nll"] = nullptr;
  }
  header["query_domain"] = checkpoint.encoders.query_domain;

  json vocab_json;
  vocab_json["query"] = checkpoint.vocabs.query.id_to_token;
  json doc_vocabs = json::object();
  for (const auto& [domain, vocab] : checkpoint.vocabs.docs) {
    doc_vocabs[domain] = vocab.id_to_token;
  }
  vocab_json["docs"] = std::move(doc_vocabs);
  header["vocabularies"] = std::move(vocab_json);

  json steps = json::object();
  steps["query"] = checkpoint.optimizer.query.step;
  for (const auto& [domain, state] : checkpoint.optimizer.docs) {
    steps["doc:" + domain] = state.step;
  }
  header["optimizer_steps"] = std::move(steps);

  std::vector<std::pair<std::string, std::span<const double>>> arrays;
  auto add_encoder = [&arrays](const std::string& prefix,
                               const EncoderParams& params,
                               const OptimizerState& state) {
    arrays.emplace_back(prefix + "/embedding",
                        std::span<const double>(params.embedding));
    arrays.emplace_back(prefix + "/attn_vector",
                        std::span<const double>(params.attn_vector));
    arrays.emplace_back(prefix + "/mix_logits",
                        std::span<const double>(params.mix_logits));
    arrays.emplace_back(prefix + "/m_embedding",
                        std::span<const double>(state.m_embedding));
    arrays.emplace_back(prefix + "/v_embedding",
                        std::span<const double>(state.v_embedding));
    arrays.emplace_back(prefix + "/m_attn_vector",
                        std::span<const double>(state.m_attn));
    arrays.emplace_back(prefix + "/v_attn_vector",
                        std::span<const double>(state.v_attn));
    arrays.emplace_back(prefix + "/m_mix_logits",
                        std::span<const double>(state.m_mix));
    arrays.emplace_back(prefix + "/v_mix_logits",
                        std::span<const double>(state.v_mix));
  };
  add_encoder("query", checkpoint.encoders.query_encoder,
              checkpoint.optimizer.query);
  for (const auto& [domain, params] : checkpoint.encoders.doc_encoders) {
    auto state = checkpoint.optimizer.docs.find(domain);
    require(state != checkpoint.optimizer.docs.end(),
            "save_checkpoint: missing optimizer state for domain " + domain);
    add_encoder("doc:" + domain, params, state->second);
  }
  write_envelope(path, kCheckpointMagic, kCheckpointVersion, std::move(header),
                 arrays);
}

namespace {

// Rebuilds one encoder plus its optimizer state from the envelope arrays.
void load_encoder(const LoadedEnvelope& env, const std::string& prefix,
                  const Vocabulary& vocab, int dim, EncoderParams* params,
                  OptimizerState* state) {
  params->vocab_size = vocab.size();
  params->dim = dim;
  const std::size_t expect_emb =
      static_cast<std::size_t>(params->vocab_size) * dim;

  auto fetch = [&](const char* name, std::size_t expect) {
    const auto& arr = env.array(prefix + "/" + name);
    if (arr.size() != expect) {
      fail_data("corrupt checkpoint: array " + prefix + "/" + name +
                " has wrong size");
    }
    return arr;
  };

  params->embedding = fetch("embedding", expect_emb);
  params->attn_vector = fetch("attn_vector", dim);
  const auto& mix = fetch("mix_logits", 3);
  std::copy(mix.begin(), mix.end(), params->mix_logits.begin());

  state->m_embedding = fetch("m_embedding", expect_emb);
  state->v_embedding = fetch("v_embedding", expect_emb);
  state->m_attn = fetch("m_attn_vector", dim);
  state->v_attn = fetch("v_attn_vector", dim);
  const auto& m_mix = fetch("m_mix_logits", 3);
  std::copy(m_mix.begin(), m_mix.end(), state->m_mix.begin());
  const auto& v_mix = fetch("v_mix_logits", 3);
  std::copy(v_mix.begin(), v_mix.end(), state->v_mix.begin());
}

}  // namespace

Checkpoint load_checkpoint(const std::string& path) {
  const LoadedEnvelope env =
      read_envelope(path, kCheckpointMagic, kCheckpointVersion, "checkpoint");
  Checkpoint checkpoint;
  try {
    checkpoint.config = TrainConfig::from_json(env.header.at("config"));
    checkpoint.epoch = env.header.at("epoch").get<int>();
    const auto& nll = env.header.at("best_valid_nll");
    checkpoint.best_valid_nll =
        nll.is_null() ? std::numeric_limits<double>::infinity()
                      : nll.get<double>();
    checkpoint.encoders.query_domain =
        env.header.at("query_domain").get<std::string>();

    const auto& vocab_json = env.header.at("vocabularies");
    checkpoint.vocabs.query = vocabulary_from_tokens(
        vocab_json.at("query").get<std::vector<std::string>>());
    for (const auto& [domain, tokens] : vocab_json.at("docs").items()) {
      checkpoint.vocabs.docs[domain] =
          vocabulary_from_tokens(tokens.get<std::vector<std::string>>());
    }

    const auto& steps = env.header.at("optimizer_steps");
    load_encoder(env, "query", checkpoint.vocabs.query,
                 checkpoint.config.dim, &checkpoint.encoders.query_encoder,
                 &checkpoint.optimizer.query);
    checkpoint.optimizer.query.step = steps.at("query").get<std::int64_t>();
    for (const auto& [domain, vocab] : checkpoint.vocabs.docs) {
      load_encoder(env, "doc:" + domain, vocab, checkpoint.config.dim,
                   &checkpoint.encoders.doc_encoders[domain],
                   &checkpoint.optimizer.docs[domain]);
      checkpoint.optimizer.docs[domain].step =
          steps.at("doc:" + domain).get<std::int64_t>();
    }
  } catch (const json::exception& e) {
    fail_data("corrupt checkpoint header: " + std::string(e.what()));
  }
  return checkpoint;
}

}  // namespace crossrank
