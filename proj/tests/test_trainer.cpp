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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "crossrank/common.hpp"
#include "crossrank/distill.hpp"
#include "crossrank/rng.hpp"
#include "crossrank/serialize.hpp"
#include "crossrank/trainer.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace crossrank;
using testutil::TempDir;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 2;
  c.dim = 6;
  c.learning_rate = 1e-3;
  c.vocab_max_size = 200;
  c.valid_pool_size = 16;
  c.seed = 7;
  return c;
}

std::string checkpoint_bytes(const Checkpoint& ckpt) {
  TempDir dir;
  const auto path = dir.file("ckpt.bin");
  save_checkpoint(path, ckpt);
  return testutil::read_file_bytes(path);
}

bool params_equal(const EncoderParams& a, const EncoderParams& b) {
  return a.vocab_size == b.vocab_size && a.dim == b.dim &&
         a.embedding == b.embedding && a.attn_vector == b.attn_vector &&
         a.mix_logits == b.mix_logits;
}

Checkpoint untrained_checkpoint(const std::vector<PairedExample>& corpus,
                                TrainConfig config) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.vocabs =
      build_vocab_bundle(corpus, config.vocab_max_size, config.vocab_min_count);
  ckpt.encoders.query_domain = corpus.front().query.domain;
  ckpt.encoders.query_encoder =
      init_params(ckpt.vocabs.query.size(), config.dim, 1);
  std::uint64_t seed = 2;
  for (const auto& [domain, vocab] : ckpt.vocabs.docs) {
    ckpt.encoders.doc_encoders[domain] =
        init_params(vocab.size(), config.dim, seed++);
  }
  ckpt.optimizer.query = OptimizerState::zeros_like(ckpt.encoders.query_encoder);
  for (const auto& [domain, p] : ckpt.encoders.doc_encoders) {
    ckpt.optimizer.docs[domain] = OptimizerState::zeros_like(p);
  }
  return ckpt;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("batch_size"),
                       std::invalid_argument);
  c = TrainConfig{};
  c.temperature = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("temperature"),
                       std::invalid_argument);
  c = TrainConfig{};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  TrainConfig{}.validate();  // defaults are valid
}

TEST_CASE("config serializes to json and back unchanged") {
  TrainConfig c;
  c.batch_size = 31;
  c.epochs = 4;
  c.learning_rate = 0.025;
  c.dim = 48;
  c.temperature = 0.07;
  c.seed = 1234567890123ull;
  c.max_len = 33;
  c.vocab_max_size = 777;
  c.vocab_min_count = 2;
  c.m = 3;
  c.patience = 2;
  c.valid_pool_size = 55;
  c.symmetric_loss = true;
  c.threads = 4;
  const auto j = c.to_json();
  const auto back = TrainConfig::from_json(j);
  CHECK(back.batch_size == c.batch_size);
  CHECK(back.epochs == c.epochs);
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.dim == c.dim);
  CHECK(back.temperature == c.temperature);
  CHECK(back.seed == c.seed);
  CHECK(back.max_len == c.max_len);
  CHECK(back.vocab_max_size == c.vocab_max_size);
  CHECK(back.vocab_min_count == c.vocab_min_count);
  CHECK(back.m == c.m);
  CHECK(back.patience == c.patience);
  CHECK(back.valid_pool_size == c.valid_pool_size);
  CHECK(back.symmetric_loss == c.symmetric_loss);
  CHECK(back.threads == c.threads);

  SUBCASE("unknown keys are rejected") {
    auto bad = j;
    bad["learning_rat"] = 0.1;
    CHECK_THROWS_WITH_AS(TrainConfig::from_json(bad),
                         doctest::Contains("unknown config key"), DataError);
  }
  SUBCASE("wrongly typed values are rejected") {
    auto bad = j;
    bad["epochs"] = "many";
    CHECK_THROWS_WITH_AS(TrainConfig::from_json(bad),
                         doctest::Contains("bad config value"), DataError);
  }
  SUBCASE("missing keys keep their defaults") {
    const auto partial = TrainConfig::from_json({{"dim", 12}});
    CHECK(partial.dim == 12);
    CHECK(partial.batch_size == TrainConfig{}.batch_size);
  }
}

TEST_CASE("vocab bundle splits the query side from each document domain") {
  std::vector<PairedExample> corpus{
      testutil::make_pair("e0", {"alpha", "beta"}, {"impl", "one"}, "go"),
      testutil::make_pair("e1", {"alpha"}, {"impl", "two"}, "rust"),
      testutil::make_pair("e2", {"gamma"}, {"three"}, "go")};
  const auto vocabs = build_vocab_bundle(corpus, 100, 1);
  CHECK(vocabs.query.contains("alpha"));
  CHECK(vocabs.query.contains("gamma"));
  CHECK(!vocabs.query.contains("impl"));
  REQUIRE(vocabs.docs.size() == 2);
  CHECK(vocabs.doc_vocab("go").contains("one"));
  CHECK(!vocabs.doc_vocab("go").contains("two"));
  CHECK(vocabs.doc_vocab("rust").contains("two"));
  CHECK_THROWS_AS(vocabs.doc_vocab("python"), DataError);
}

TEST_CASE("vocabulary_from_tokens rebuilds and validates the id order") {
  const std::vector<std::string> tokens{"<pad>", "<unk>", "b", "a"};
  const auto vocab = vocabulary_from_tokens(tokens);
  CHECK(vocab.size() == 4);
  CHECK(vocab.token_to_id.at("b") == 2);
  CHECK(vocab.id_of("zzz") == Vocabulary::kUnkId);

  CHECK_THROWS_AS(vocabulary_from_tokens({"<unk>", "<pad>"}), DataError);
  CHECK_THROWS_AS(vocabulary_from_tokens({"<pad>", "<unk>", "a", "a"}),
                  DataError);
}

TEST_CASE("encode_examples maps both sides through their vocabularies") {
  std::vector<PairedExample> corpus{
      testutil::make_pair("e0", {"alpha", "mystery"}, {"impl", "one"}, "go")};
  const auto vocabs = build_vocab_bundle(corpus, 100, 1);
  const auto encoded = encode_examples(corpus, vocabs, 10);
  REQUIRE(encoded.size() == 1);
  CHECK(encoded[0].example_id == "e0");
  CHECK(encoded[0].doc_domain == "go");
  CHECK(encoded[0].query_ids.ids[0] == vocabs.query.token_to_id.at("alpha"));
  CHECK(encoded[0].doc_ids.length() == 2);

  // max_len truncates.
  const auto clipped = encode_examples(corpus, vocabs, 1);
  CHECK(clipped[0].query_ids.length() == 1);
  CHECK(clipped[0].doc_ids.length() == 1);
}

TEST_CASE("one adam step matches the hand formula at t=1") {
  EncoderParams p;
  p.vocab_size = 3;
  p.dim = 2;
  p.embedding = {0, 0, 0, 0, 0.5, -0.5};
  p.attn_vector = {0.1, 0.2};
  p.mix_logits = {0, 0, 0};
  auto state = OptimizerState::zeros_like(p);

  EncoderGradients g;
  g.embedding_rows[2] = {0.3, -0.04};
  g.attn_vector = {0.0, 1.7};
  g.mix_logits = {0.9, 0.0, -0.9};
  const double lr = 0.01;
  const auto before = p;
  adam_step(p, g, state, lr);
  CHECK(state.step == 1);

  // At t=1 the bias-corrected update is -lr * g / (|g| + eps).
  const auto expected = [&](double grad) {
    return grad == 0.0 ? 0.0 : -lr * grad / (std::abs(grad) + 1e-8);
  };
  CHECK(p.embedding[4] - before.embedding[4] ==
        doctest::Approx(expected(0.3)).epsilon(1e-9));
  CHECK(p.embedding[5] - before.embedding[5] ==
        doctest::Approx(expected(-0.04)).epsilon(1e-9));
  CHECK(p.attn_vector[0] == before.attn_vector[0]);
  CHECK(p.attn_vector[1] - before.attn_vector[1] ==
        doctest::Approx(expected(1.7)).epsilon(1e-9));
  CHECK(p.mix_logits[0] - before.mix_logits[0] ==
        doctest::Approx(expected(0.9)).epsilon(1e-9));
  CHECK(p.mix_logits[1] == before.mix_logits[1]);
  CHECK(p.mix_logits[2] - before.mix_logits[2] ==
        doctest::Approx(expected(-0.9)).epsilon(1e-9));
  // Untouched embedding rows and their moments stay zero.
  CHECK(p.embedding[0] == 0.0);
  CHECK(p.embedding[2] == 0.0);
  CHECK(state.m_embedding[0] == 0.0);
  CHECK(state.v_embedding[2] == 0.0);
  CHECK(state.m_embedding[4] != 0.0);
}

TEST_CASE("adam with zero gradients leaves parameters in place") {
  auto p = init_params(5, 3, 11);
  const auto before = p;
  auto state = OptimizerState::zeros_like(p);
  EncoderGradients empty;
  adam_step(p, empty, state, 0.5);
  adam_step(p, empty, state, 0.5);
  CHECK(state.step == 2);
  CHECK(params_equal(p, before));
}

TEST_CASE("a constant gradient drives the adam step size toward lr") {
  EncoderParams p;
  p.vocab_size = 2;
  p.dim = 1;
  p.embedding = {0.0, 0.0};
  p.attn_vector = {0.0};
  auto state = OptimizerState::zeros_like(p);
  EncoderGradients g;
  g.embedding_rows[1] = {0.5};
  const double lr = 0.01;
  double prev = p.embedding[1];
  double last_step = 0.0;
  for (int t = 0; t < 500; ++t) {
    adam_step(p, g, state, lr);
    last_step = prev - p.embedding[1];  // positive: moving downhill
    prev = p.embedding[1];
  }
  CHECK(last_step == doctest::Approx(lr).epsilon(0.05));
}

TEST_CASE("batch gradients match finite differences end to end") {
  for (const bool symmetric : {false, true}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto inst = testutil::random_batch_instance(
          20, 5, 3, 900 + trial, /*num_domains=*/2);
      const auto res =
          testutil::check_batch_gradients(inst, 0.8, symmetric, 1);
      INFO("worst coordinate: ", res.worst);
      CHECK(res.max_rel_err < 1e-5);
      CHECK(res.coordinates > 20);
    }
  }
}

TEST_CASE("batch gradients are independent of the thread count") {
  const auto inst = testutil::random_batch_instance(30, 6, 8, 321, 2);
  BatchGradients g1, g4;
  const double l1 =
      batch_forward_backward(inst.bundle, inst.examples, inst.batch, 0.5,
                             false, &g1, 1);
  const double l4 =
      batch_forward_backward(inst.bundle, inst.examples, inst.batch, 0.5,
                             false, &g4, 4);
  CHECK(l1 == l4);  // bitwise: the reduction order must not depend on threads
  CHECK(g1.query.embedding_rows == g4.query.embedding_rows);
  CHECK(g1.query.attn_vector == g4.query.attn_vector);
  CHECK(g1.query.mix_logits == g4.query.mix_logits);
  REQUIRE(g1.docs.size() == g4.docs.size());
  for (const auto& [domain, grads] : g1.docs) {
    CHECK(grads.embedding_rows == g4.docs.at(domain).embedding_rows);
    CHECK(grads.attn_vector == g4.docs.at(domain).attn_vector);
  }
}

TEST_CASE("a single-pair batch has zero loss and moves nothing") {
  std::vector<PairedExample> corpus{
      testutil::make_pair("only", {"alpha", "beta"}, {"impl", "detail"})};
  auto config = small_config();
  config.batch_size = 1;
  config.epochs = 3;
  config.patience = 10;
  const auto r1 = train(corpus, corpus, config);
  for (const auto& stats : r1.history) {
    CHECK(stats.train_loss == doctest::Approx(0.0).epsilon(1e-15));
  }
  // Zero gradients throughout: more epochs change nothing.
  auto longer = config;
  longer.epochs = 1;
  const auto r2 = train(corpus, corpus, longer);
  CHECK(params_equal(r1.checkpoint.encoders.query_encoder,
                     r2.checkpoint.encoders.query_encoder));
  CHECK(params_equal(r1.checkpoint.encoders.doc_encoders.at("code"),
                     r2.checkpoint.encoders.doc_encoders.at("code")));
}

TEST_CASE("training separates two disjoint pairs") {
  std::vector<PairedExample> corpus{
      testutil::make_pair("p0", {"red", "apple"}, {"fruit", "sweet"}),
      testutil::make_pair("p1", {"fast", "car"}, {"engine", "loud"})};
  TrainConfig config;
  config.batch_size = 2;
  config.epochs = 200;
  config.patience = 200;
  config.dim = 8;
  config.learning_rate = 0.01;
  config.temperature = 0.2;
  config.valid_pool_size = 2;
  config.vocab_max_size = 50;
  config.seed = 3;
  const auto result = train(corpus, corpus, config);
  REQUIRE(!result.history.empty());
  const double first = result.history.front().train_loss;
  const double last = result.history.back().train_loss;
  CHECK(last < 0.01);
  CHECK(last < first / 10.0);
  CHECK(result.checkpoint.best_valid_nll < 0.05);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto corpus = testutil::random_corpus(24, 5);
  const auto valid = testutil::random_corpus(8, 6);
  const auto config = small_config();
  const auto a = train(corpus, valid, config);
  const auto b = train(corpus, valid, config);
  CHECK(checkpoint_bytes(a.checkpoint) == checkpoint_bytes(b.checkpoint));
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].valid_nll == b.history[i].valid_nll);
  }
}

TEST_CASE("input order does not affect the trained model") {
  const auto corpus = testutil::random_corpus(24, 15);
  const auto valid = testutil::random_corpus(8, 16);
  auto shuffled = corpus;
  SplitMix64 rng(99);
  deterministic_shuffle(shuffled, rng);
  const auto config = small_config();
  const auto a = train(corpus, valid, config);
  const auto b = train(shuffled, valid, config);
  CHECK(checkpoint_bytes(a.checkpoint) == checkpoint_bytes(b.checkpoint));
}

TEST_CASE("the thread count does not affect the trained model") {
  const auto corpus = testutil::random_corpus(30, 25);
  const auto valid = testutil::random_corpus(10, 26);
  auto config = small_config();
  config.threads = 1;
  const auto a = train(corpus, valid, config);
  config.threads = 4;
  const auto b = train(corpus, valid, config);
  auto a_ckpt = a.checkpoint;
  a_ckpt.config.threads = 4;  // the only field allowed to differ
  CHECK(checkpoint_bytes(a_ckpt) == checkpoint_bytes(b.checkpoint));
}

TEST_CASE("m=0 augmentation trains bitwise identically to the raw corpus") {
  const auto corpus = testutil::random_corpus(20, 35);
  const auto valid = testutil::random_corpus(8, 36);
  const auto teacher = make_random_channel(5, 2, 1, "query", "code");
  const auto augmented = augment_dataset(corpus, teacher, 0, 77, false);
  // The augmented pool is a shuffled copy of the originals.
  REQUIRE(augmented.examples.size() == corpus.size());
  const auto config = small_config();
  const auto raw = train(corpus, valid, config);
  const auto aug = train(augmented, valid, config);
  CHECK(checkpoint_bytes(raw.checkpoint) == checkpoint_bytes(aug.checkpoint));
  REQUIRE(raw.history.size() == aug.history.size());
  for (std::size_t i = 0; i < raw.history.size(); ++i) {
    CHECK(raw.history[i].train_loss == aug.history[i].train_loss);
  }
}

TEST_CASE("early stopping halts after patience stale epochs") {
  const auto corpus = testutil::random_corpus(16, 45);
  // Validation pairs made entirely of out-of-vocabulary tokens embed
  // identically, so the validation NLL is a constant: no epoch after the
  // first can strictly improve it.
  std::vector<PairedExample> valid;
  for (int i = 0; i < 6; ++i) {
    valid.push_back(testutil::make_pair("v" + std::to_string(i),
                                        {"zzz" + std::to_string(i)},
                                        {"www" + std::to_string(i)}));
  }
  auto config = small_config();
  config.epochs = 50;
  config.patience = 3;
  const auto result = train(corpus, valid, config);
  CHECK(result.history.size() == 4);  // epoch 1 improves; 3 stale epochs
  CHECK(result.checkpoint.epoch == 1);
  CHECK(result.checkpoint.best_valid_nll ==
        doctest::Approx(result.history.front().valid_nll));
  // Every stale epoch repeats the same constant NLL.
  for (const auto& stats : result.history) {
    CHECK(stats.valid_nll == doctest::Approx(result.history[0].valid_nll));
  }
}

TEST_CASE("the checkpoint keeps the best validation epoch") {
  const auto corpus = testutil::random_corpus(30, 55);
  auto config = small_config();
  config.epochs = 6;
  config.patience = 6;
  const auto result = train(corpus, corpus, config);
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  for (const auto& stats : result.history) {
    if (stats.valid_nll < best) {
      best = stats.valid_nll;
      best_epoch = stats.epoch;
    }
  }
  CHECK(result.checkpoint.best_valid_nll == best);
  CHECK(result.checkpoint.epoch == best_epoch);
}

TEST_CASE("exploding training fails with a located diagnostic") {
  std::vector<PairedExample> corpus{
      testutil::make_pair("p0", {"red", "apple"}, {"fruit", "sweet"}),
      testutil::make_pair("p1", {"fast", "car"}, {"engine", "loud"})};
  TrainConfig config;
  config.batch_size = 2;
  config.epochs = 5;
  config.dim = 4;
  config.learning_rate = 1e307;  // one step throws every parameter to ~1e307
  config.valid_pool_size = 2;
  config.vocab_max_size = 50;
  CHECK_THROWS_WITH_AS(train(corpus, corpus, config),
                       doctest::Contains("training aborted"), DataError);
}

TEST_CASE("train validates its inputs") {
  const auto corpus = testutil::random_corpus(4, 1);
  CHECK_THROWS_AS(train(std::vector<PairedExample>{}, corpus, small_config()),
                  std::invalid_argument);
  CHECK_THROWS_AS(train(corpus, {}, small_config()), std::invalid_argument);
  auto config = small_config();
  config.dim = 0;
  CHECK_THROWS_AS(train(corpus, corpus, config), std::invalid_argument);
}

TEST_CASE("evaluate_nll degenerate and reference behavior") {
  const auto corpus = testutil::random_corpus(100, 65);
  const auto ckpt = untrained_checkpoint(corpus, small_config());

  SUBCASE("a pool of one is always perfectly resolved") {
    CHECK(evaluate_nll(ckpt, corpus, 1, 5) == 0.0);
  }
  SUBCASE("an untrained model scores close to the uniform pool") {
    const double nll = evaluate_nll(ckpt, corpus, 100, 5);
    const double uniform = std::log(100.0);
    CHECK(std::abs(nll - uniform) / uniform < 0.20);
  }
  SUBCASE("deterministic in the seed") {
    CHECK(evaluate_nll(ckpt, corpus, 10, 5) == evaluate_nll(ckpt, corpus, 10, 5));
  }
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const auto corpus = testutil::random_corpus(18, 75, "go");
  auto config = small_config();
  config.epochs = 2;
  const auto result = train(corpus, corpus, config);

  TempDir dir;
  const auto p1 = dir.file("a.ckpt");
  save_checkpoint(p1, result.checkpoint);
  const auto loaded = load_checkpoint(p1);

  CHECK(loaded.epoch == result.checkpoint.epoch);
  CHECK(loaded.best_valid_nll == result.checkpoint.best_valid_nll);
  CHECK(loaded.config.to_json() == result.checkpoint.config.to_json());
  CHECK(params_equal(loaded.encoders.query_encoder,
                     result.checkpoint.encoders.query_encoder));
  REQUIRE(loaded.encoders.doc_encoders.count("go") == 1);
  CHECK(params_equal(loaded.encoders.doc_encoders.at("go"),
                     result.checkpoint.encoders.doc_encoders.at("go")));
  CHECK(loaded.vocabs.query.id_to_token ==
        result.checkpoint.vocabs.query.id_to_token);
  CHECK(loaded.vocabs.doc_vocab("go").id_to_token ==
        result.checkpoint.vocabs.doc_vocab("go").id_to_token);
  CHECK(loaded.optimizer.query.step == result.checkpoint.optimizer.query.step);
  CHECK(loaded.optimizer.query.m_embedding ==
        result.checkpoint.optimizer.query.m_embedding);
  CHECK(loaded.optimizer.docs.at("go").v_embedding ==
        result.checkpoint.optimizer.docs.at("go").v_embedding);

  // save -> load -> save is byte-identical.
  const auto p2 = dir.file("b.ckpt");
  save_checkpoint(p2, loaded);
  CHECK(testutil::read_file_bytes(p1) == testutil::read_file_bytes(p2));
}

TEST_CASE("checkpoint loading rejects foreign and corrupt files") {
  TempDir dir;
  SUBCASE("wrong magic") {
    const auto path = dir.file("other.bin");
    write_envelope(path, "OTHER", 1, nlohmann::json::object(), {});
    CHECK_THROWS_WITH_AS(load_checkpoint(path),
                         doctest::Contains("not a checkpoint"), DataError);
  }
  SUBCASE("newer version") {
    const auto path = dir.file("future.bin");
    write_envelope(path, "NBOW1", 2, nlohmann::json::object(), {});
    CHECK_THROWS_WITH_AS(load_checkpoint(path),
                         doctest::Contains("version mismatch"), DataError);
  }
  SUBCASE("missing array") {
    const auto corpus = testutil::random_corpus(6, 85);
    const auto result = train(corpus, corpus, small_config());
    const auto good = dir.file("good.ckpt");
    save_checkpoint(good, result.checkpoint);
    auto env = read_envelope(good, "NBOW1", 1, "checkpoint");
    std::vector<std::pair<std::string, std::span<const double>>> arrays;
    for (std::size_t i = 0; i + 1 < env.arrays.size(); ++i) {
      arrays.emplace_back(env.arrays[i].first, env.arrays[i].second);
    }
    const auto bad = dir.file("bad.ckpt");
    write_envelope(bad, "NBOW1", 1, env.header, arrays);
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);
  }
}

TEST_CASE("parameter fingerprints separate different models") {
  const auto corpus = testutil::random_corpus(10, 95);
  auto c1 = small_config();
  const auto a = train(corpus, corpus, c1);
  auto c2 = small_config();
  c2.seed = 8;
  const auto b = train(corpus, corpus, c2);
  CHECK(params_fingerprint(a.checkpoint.encoders) ==
        params_fingerprint(a.checkpoint.encoders));
  CHECK(params_fingerprint(a.checkpoint.encoders) !=
        params_fingerprint(b.checkpoint.encoders));
}
