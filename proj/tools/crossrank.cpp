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
//
// crossrank: train, index, search, and evaluate a hybrid bag-of-words
// bi-encoder with teacher-sampled data augmentation. One binary,
// subcommand per pipeline stage; a single --seed drives every random
// choice so repeated runs produce byte-identical artifacts.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crossrank/common.hpp"
#include "crossrank/corpus.hpp"
#include "crossrank/distill.hpp"
#include "crossrank/evalmetrics.hpp"
#include "crossrank/objective.hpp"
#include "crossrank/retrieval.hpp"
#include "crossrank/rng.hpp"
#include "crossrank/trainer.hpp"
#include "json.hpp"

namespace {

using crossrank::Checkpoint;
using crossrank::DataError;
using crossrank::Document;
using crossrank::EvalReport;
using crossrank::fail_data;
using crossrank::LoadReport;
using crossrank::PairedExample;
using crossrank::TrainConfig;
using nlohmann::json;

// Reads a config file as a flat key -> value object. JSON files are
// detected by a leading '{'; anything else goes through the stock TOML
// reader. Keys are normalized to the snake_case names used in checkpoints,
// with "symmetric" accepted as shorthand for "symmetric_loss".
json load_config_file_values(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open config file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  json values = json::object();
  const std::size_t first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '{') {
    const json parsed = json::parse(content);
    if (!parsed.is_object()) {
      fail_data("config file must hold a JSON object: " + path);
    }
    values = parsed;
  } else {
    std::istringstream stream(content);
    CLI::ConfigTOML toml;
    for (const auto& item : toml.from_config(stream)) {
      std::string key;
      for (const auto& parent : item.parents) key += parent + ".";
      key += item.name;
      json value;
      if (item.inputs.empty()) {
        value = true;  // bare key counts as an enabled flag
      } else if (item.inputs.size() == 1) {
        // Numbers and booleans parse; everything else stays a string.
        try {
          value = json::parse(item.inputs.front());
        } catch (const json::exception&) {
          value = item.inputs.front();
        }
      } else {
        value = item.inputs;
      }
      values[key] = std::move(value);
    }
  }
  json normalized = json::object();
  for (const auto& [key, value] : values.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '-', '_');
    if (name == "symmetric") name = "symmetric_loss";
    normalized[name] = value;
  }
  return normalized;
}

// The flag spelling for a config key ("learning_rate" -> "--learning-rate").
std::string flag_for_config_key(const std::string& key) {
  if (key == "symmetric_loss") return "--symmetric";
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

void print_load_report(const char* label, const LoadReport& report) {
  std::cout << label << ": loaded " << report.loaded << " records";
  if (report.skipped > 0) std::cout << ", skipped " << report.skipped;
  std::cout << "\n";
  for (const auto& issue : report.issues) {
    std::cerr << "note: " << issue << "\n";
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("cannot write file: " + path);
  out << content;
  if (!out) fail_data("write failed: " + path);
}

std::unique_ptr<crossrank::TeacherSampler> open_teacher(
    const std::string& spec) {
  const std::size_t colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (colon == std::string::npos || colon + 1 == spec.size() ||
      (kind != "file" && kind != "channel")) {
    throw CLI::ValidationError(
        "--teacher", "expected file:<path> or channel:<path>, got '" + spec +
                         "'");
  }
  const std::string path = spec.substr(colon + 1);
  if (kind == "file") {
    return std::make_unique<crossrank::FileTeacher>(path);
  }
  return std::make_unique<crossrank::SyntheticChannelTeacher>(
      crossrank::load_channel(path));
}

// ---------------------------------------------------------------------------
// Subcommands

void add_build_vocab(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "build-vocab", "Build query/document vocabularies from a pairs corpus");
  auto input = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto max_size = std::make_shared<int>(50000);
  auto min_count = std::make_shared<int>(1);
  auto permissive = std::make_shared<bool>(false);
  cmd->add_option("--input", *input, "Pairs corpus (JSON Lines)")->required();
  cmd->add_option("--output", *output, "Vocabulary JSON output path")
      ->required();
  cmd->add_option("--max-size", *max_size, "Maximum vocabulary size")
      ->capture_default_str();
  cmd->add_option("--min-count", *min_count, "Minimum token frequency")
      ->capture_default_str();
  cmd->add_flag("--permissive", *permissive,
                "Skip malformed corpus lines instead of aborting");

  cmd->callback([=]() {
    LoadReport report;
    const auto data = crossrank::load_jsonl(*input, *permissive, &report);
    print_load_report("corpus", report);
    const auto bundle =
        crossrank::build_vocab_bundle(data, *max_size, *min_count);

    json out;
    out["query"] = bundle.query.id_to_token;
    json docs = json::object();
    for (const auto& [domain, vocab] : bundle.docs) {
      docs[domain] = vocab.id_to_token;
    }
    out["docs"] = std::move(docs);
    write_text_file(*output, out.dump(2) + "\n");

    std::cout << "query vocabulary: " << bundle.query.size() << " tokens\n";
    for (const auto& [domain, vocab] : bundle.docs) {
      std::cout << "doc vocabulary [" << domain << "]: " << vocab.size()
                << " tokens\n";
    }
    std::cout << "vocabulary written to " << *output << "\n";
  });
}

void add_augment(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "augment",
      "Expand a pairs corpus with teacher-sampled documents and queries");
  auto input = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto teacher_spec = std::make_shared<std::string>();
  auto m = std::make_shared<int>(1);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto dedup = std::make_shared<bool>(false);
  auto strict = std::make_shared<bool>(false);
  auto permissive = std::make_shared<bool>(false);
  cmd->add_option("--input", *input, "Pairs corpus (JSON Lines)")->required();
  cmd->add_option("--output", *output, "Augmented corpus output path")
      ->required();
  cmd->add_option("--teacher", *teacher_spec,
                  "Teacher source: file:<samples.jsonl> or "
                  "channel:<channel.json>")
      ->required();
  cmd->add_option("--m", *m, "Samples per direction per original pair")
      ->capture_default_str();
  cmd->add_option("--seed", *seed, "Random seed")->capture_default_str();
  cmd->add_flag("--dedup", *dedup,
                "Drop samples identical to their original");
  cmd->add_flag("--strict", *strict,
                "Abort on teacher failures instead of skipping");
  cmd->add_flag("--permissive", *permissive,
                "Skip malformed corpus lines instead of aborting");

  cmd->callback([=]() {
    LoadReport report;
    const auto data = crossrank::load_jsonl(*input, *permissive, &report);
    print_load_report("corpus", report);
    const auto teacher = open_teacher(*teacher_spec);
    if (auto* file_teacher =
            dynamic_cast<crossrank::FileTeacher*>(teacher.get())) {
      file_teacher->validate_against(data);
    }

    std::vector<std::string> notes;
    const auto augmented = crossrank::augment_dataset(
        data, *teacher, *m, *seed, *dedup, *strict, &notes);
    crossrank::write_jsonl(*output, augmented.examples);

    for (const auto& note : notes) std::cerr << "note: " << note << "\n";
    std::cout << "originals: " << augmented.count_original
              << ", sampled documents: " << augmented.count_sampled_document
              << ", sampled queries: " << augmented.count_sampled_query
              << ", duplicates dropped: " << augmented.dropped_duplicates
              << "\n";
    std::cout << "total: " << augmented.examples.size()
              << " pairs written to " << *output << "\n";
  });
}

void add_train(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "train", "Train the bi-encoder on an (augmented) pairs corpus");
  auto input = std::make_shared<std::string>();
  auto valid = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto permissive = std::make_shared<bool>(false);
  auto config = std::make_shared<TrainConfig>();
  cmd->add_option("--input", *input, "Training pairs corpus (JSON Lines)")
      ->required();
  cmd->add_option("--valid", *valid, "Validation pairs corpus (JSON Lines)")
      ->required();
  cmd->add_option("--output", *output, "Checkpoint output path")->required();
  cmd->add_flag("--permissive", *permissive,
                "Skip malformed corpus lines instead of aborting");

  cmd->add_option("--batch-size", config->batch_size, "Mini-batch size")
      ->capture_default_str();
  cmd->add_option("--epochs", config->epochs, "Maximum training epochs")
      ->capture_default_str();
  cmd->add_option("--learning-rate", config->learning_rate,
                  "Adam learning rate")
      ->capture_default_str();
  cmd->add_option("--dim", config->dim, "Embedding dimension")
      ->capture_default_str();
  cmd->add_option("--temperature", config->temperature,
                  "Softmax temperature for cosine scores")
      ->capture_default_str();
  cmd->add_option("--seed", config->seed, "Random seed")
      ->capture_default_str();
  cmd->add_option("--max-len", config->max_len,
                  "Maximum tokens per sequence")
      ->capture_default_str();
  cmd->add_option("--vocab-max-size", config->vocab_max_size,
                  "Maximum vocabulary size")
      ->capture_default_str();
  cmd->add_option("--vocab-min-count", config->vocab_min_count,
                  "Minimum token frequency")
      ->capture_default_str();
  cmd->add_option("--m", config->m,
                  "Augmentation count recorded in the checkpoint")
      ->capture_default_str();
  cmd->add_option("--patience", config->patience,
                  "Early-stop patience (non-improving epochs)")
      ->capture_default_str();
  cmd->add_option("--valid-pool-size", config->valid_pool_size,
                  "Validation NLL pool size")
      ->capture_default_str();
  cmd->add_flag("--symmetric", config->symmetric_loss,
                "Average the document-direction softmax into the loss");
  cmd->add_option("--threads", config->threads, "Worker threads")
      ->envname("CROSSRANK_THREADS")
      ->capture_default_str();

  auto config_file = std::make_shared<std::string>();
  cmd->add_option("--config", *config_file,
                  "Config file (TOML or JSON); flags override file values")
      ->check(CLI::ExistingFile);

  cmd->callback([=]() {
    // CLI11 applies config files on the top-level command only, so this
    // subcommand folds its own in: a file value fills any field whose flag
    // was not given explicitly (flags and environment variables win).
    if (!config_file->empty()) {
      const json file_values = load_config_file_values(*config_file);
      json merged = config->to_json();
      for (const auto& [key, value] : file_values.items()) {
        const auto* opt = cmd->get_option_no_throw(flag_for_config_key(key));
        if (opt != nullptr && opt->count() > 0) continue;
        merged[key] = value;  // unknown keys are rejected downstream
      }
      *config = TrainConfig::from_json(merged);
    }
    config->validate();
    std::cout << "config: " << config->to_json().dump() << "\n";
    LoadReport train_report, valid_report;
    const auto train_data =
        crossrank::load_jsonl(*input, *permissive, &train_report);
    print_load_report("train corpus", train_report);
    const auto valid_data =
        crossrank::load_jsonl(*valid, *permissive, &valid_report);
    print_load_report("valid corpus", valid_report);

    const auto result = crossrank::train(train_data, valid_data, *config);
    crossrank::save_checkpoint(*output, result.checkpoint);

    std::cout << std::fixed << std::setprecision(6);
    for (const auto& stats : result.history) {
      std::cout << "epoch " << stats.epoch << ": train_loss="
                << stats.train_loss << " valid_nll=" << stats.valid_nll
                << "\n";
    }
    std::cout << "best epoch " << result.checkpoint.epoch
              << " (valid_nll=" << result.checkpoint.best_valid_nll << ")\n";
    std::cout.unsetf(std::ios::fixed);
    std::cout << "checkpoint written to " << *output << "\n";
  });
}

void add_index(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "index", "Embed and index the document side of a pairs corpus");
  auto input = std::make_shared<std::string>();
  auto checkpoint_path = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto threads = std::make_shared<int>(1);
  auto permissive = std::make_shared<bool>(false);
  cmd->add_option("--input", *input, "Pairs corpus (JSON Lines)")->required();
  cmd->add_option("--checkpoint", *checkpoint_path, "Trained checkpoint")
      ->required();
  cmd->add_option("--output", *output, "Index output path")->required();
  cmd->add_option("--threads", *threads, "Worker threads")
      ->envname("CROSSRANK_THREADS")
      ->capture_default_str();
  cmd->add_flag("--permissive", *permissive,
                "Skip malformed corpus lines instead of aborting");

  cmd->callback([=]() {
    const Checkpoint checkpoint = crossrank::load_checkpoint(*checkpoint_path);
    LoadReport report;
    const auto data = crossrank::load_jsonl(*input, *permissive, &report);
    print_load_report("corpus", report);
    std::vector<Document> docs;
    docs.reserve(data.size());
    for (const auto& ex : data) docs.push_back(ex.document);
    const auto index = crossrank::build_index(checkpoint, docs, *threads);
    crossrank::save_index(*output, index);
    std::cout << "indexed " << index.size() << " documents (dim=" << index.dim
              << ")\n";
    std::cout << "index written to " << *output << "\n";
  });
}

void add_search(CLI::App& app) {
  auto* cmd =
      app.add_subcommand("search", "One-shot query against a built index");
  auto index_path = std::make_shared<std::string>();
  auto checkpoint_path = std::make_shared<std::string>();
  auto query_text = std::make_shared<std::string>();
  auto k = std::make_shared<std::size_t>(10);
  cmd->add_option("--index", *index_path, "Index file")->required();
  cmd->add_option("--checkpoint", *checkpoint_path,
                  "Checkpoint that built the index")
      ->required();
  cmd->add_option("--query", *query_text, "Query text")->required();
  cmd->add_option("--k", *k, "Results to return")->capture_default_str();

  cmd->callback([=]() {
    const Checkpoint checkpoint = crossrank::load_checkpoint(*checkpoint_path);
    const auto index = crossrank::load_index(*index_path);
    Document query;
    query.id = "query";
    query.domain = checkpoint.encoders.query_domain;
    query.tokens = crossrank::tokenize(*query_text);
    if (query.tokens.empty()) fail_data("query tokenizes to nothing");
    const auto result =
        crossrank::search_topk(index, query, checkpoint, *k);
    std::cout << std::left << std::setw(6) << "rank" << std::setw(12)
              << "score"
              << "doc_id\n";
    std::cout << std::fixed << std::setprecision(6);
    for (std::size_t r = 0; r < result.hits.size(); ++r) {
      std::cout << std::left << std::setw(6) << (r + 1) << std::setw(12)
                << result.hits[r].score << result.hits[r].doc_id << "\n";
    }
    std::cout.unsetf(std::ios::fixed);
  });
}

// Shared plumbing for eval-mrr and eval-nll.
void add_pool_eval(CLI::App& app, const char* name, const char* description,
                   bool emphasize_mrr) {
  auto* cmd = app.add_subcommand(name, description);
  auto checkpoint_path = std::make_shared<std::string>();
  auto test_path = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto pool_size = std::make_shared<int>(1000);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto mixed = std::make_shared<bool>(false);
  auto threads = std::make_shared<int>(1);
  auto permissive = std::make_shared<bool>(false);
  cmd->add_option("--checkpoint", *checkpoint_path, "Trained checkpoint")
      ->required();
  cmd->add_option("--test", *test_path, "Test pairs corpus (JSON Lines)")
      ->required();
  cmd->add_option("--output", *output, "Report JSON output path (optional)");
  cmd->add_option("--pool-size", *pool_size, "Candidate pool size")
      ->capture_default_str();
  cmd->add_option("--seed", *seed, "Random seed for pool assignment")
      ->capture_default_str();
  cmd->add_flag("--mixed", *mixed,
                "Mix document domains within pools (default: per-domain)");
  cmd->add_option("--threads", *threads, "Worker threads")
      ->envname("CROSSRANK_THREADS")
      ->capture_default_str();
  cmd->add_flag("--permissive", *permissive,
                "Skip malformed corpus lines instead of aborting");

  cmd->callback([=]() {
    const Checkpoint checkpoint = crossrank::load_checkpoint(*checkpoint_path);
    LoadReport report;
    const auto test = crossrank::load_jsonl(*test_path, *permissive, &report);
    print_load_report("test corpus", report);
    const crossrank::StudentPoolScorer scorer(checkpoint, *threads);
    const EvalReport eval =
        crossrank::evaluate_pools(scorer, test, *pool_size, *seed, *mixed);
    std::cout << eval.to_table();
    std::cout << std::fixed << std::setprecision(4);
    if (emphasize_mrr) {
      std::cout << "MRR " << eval.overall.mrr << "\n";
    } else {
      std::cout << "NLL " << eval.overall.nll << "\n";
    }
    std::cout.unsetf(std::ios::fixed);
    if (!output->empty()) {
      write_text_file(*output, eval.to_json().dump(2) + "\n");
      std::cout << "report written to " << *output << "\n";
    }
  });
}

void add_eval_ndcg(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "eval-ndcg",
      "Rank each query's labeled candidates and report mean NDCG@k");
  auto checkpoint_path = std::make_shared<std::string>();
  auto input = std::make_shared<std::string>();
  auto labels_path = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto k = std::make_shared<int>(10);
  auto threads = std::make_shared<int>(1);
  auto permissive = std::make_shared<bool>(false);
  cmd->add_option("--checkpoint", *checkpoint_path, "Trained checkpoint")
      ->required();
  cmd->add_option("--input", *input,
                  "Pairs corpus providing query and document texts")
      ->required();
  cmd->add_option("--labels", *labels_path,
                  "Relevance labels (JSON Lines: query_id, doc_id, relevance)")
      ->required();
  cmd->add_option("--output", *output, "Report JSON output path (optional)");
  cmd->add_option("--k", *k, "NDCG cutoff")->capture_default_str();
  cmd->add_option("--threads", *threads, "Worker threads")
      ->envname("CROSSRANK_THREADS")
      ->capture_default_str();
  cmd->add_flag("--permissive", *permissive,
                "Skip malformed corpus lines instead of aborting");

  cmd->callback([=]() {
    const Checkpoint checkpoint = crossrank::load_checkpoint(*checkpoint_path);
    LoadReport report;
    const auto data = crossrank::load_jsonl(*input, *permissive, &report);
    print_load_report("corpus", report);
    const auto labels = crossrank::load_relevance_labels(*labels_path);

    // Unique query and document sides by id (first occurrence wins).
    std::map<std::string, Document> queries_by_id, docs_by_id;
    for (const auto& ex : data) {
      queries_by_id.emplace(ex.query.id, ex.query);
      docs_by_id.emplace(ex.document.id, ex.document);
    }
    std::vector<Document> queries, docs;
    for (const auto& [id, doc] : queries_by_id) queries.push_back(doc);
    for (const auto& [id, doc] : docs_by_id) docs.push_back(doc);

    const EvalReport eval = crossrank::evaluate_ndcg(checkpoint, queries, docs,
                                                     labels, *k, *threads);
    std::cout << eval.to_table();
    std::cout << std::fixed << std::setprecision(4) << "NDCG@" << *k << " "
              << *eval.overall.ndcg << "\n";
    std::cout.unsetf(std::ios::fixed);
    if (!output->empty()) {
      write_text_file(*output, eval.to_json().dump(2) + "\n");
      std::cout << "report written to " << *output << "\n";
    }
  });
}

void add_distill_verify(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "distill-verify",
      "Check the synthetic teacher: Monte Carlo cross-entropy against exact "
      "enumeration, and KL(p||p) = 0");
  auto channel_path = std::make_shared<std::string>();
  auto alphabet = std::make_shared<int>(5);
  auto fanout = std::make_shared<int>(2);
  auto samples = std::make_shared<int>(10000);
  auto max_len = std::make_shared<int>(3);
  auto num_queries = std::make_shared<int>(5);
  auto seed = std::make_shared<std::uint64_t>(0);
  cmd->add_option("--channel", *channel_path,
                  "Channel JSON (default: a random channel from --alphabet/"
                  "--fanout)");
  cmd->add_option("--alphabet", *alphabet, "Generated channel alphabet size")
      ->capture_default_str();
  cmd->add_option("--fanout", *fanout,
                  "Document tokens reachable per query token")
      ->capture_default_str();
  cmd->add_option("--samples", *samples, "Monte Carlo samples per query")
      ->capture_default_str();
  cmd->add_option("--max-len", *max_len, "Maximum query length")
      ->capture_default_str();
  cmd->add_option("--queries", *num_queries, "Number of random test queries")
      ->capture_default_str();
  cmd->add_option("--seed", *seed, "Random seed")->capture_default_str();

  cmd->callback([=]() {
    crossrank::require(*samples >= 2, "--samples must be >= 2");
    crossrank::require(*max_len >= 1, "--max-len must be >= 1");
    crossrank::require(*num_queries >= 1, "--queries must be >= 1");
    const crossrank::SyntheticChannelTeacher teacher =
        channel_path->empty()
            ? crossrank::make_random_channel(
                  *alphabet, *fanout,
                  crossrank::mix_seed(*seed, crossrank::fnv1a64("channel")),
                  "query", "doc")
            : crossrank::load_channel(*channel_path);

    const auto query_alphabet = teacher.query_alphabet();
    crossrank::SplitMix64 rng(
        crossrank::mix_seed(*seed, crossrank::fnv1a64("verify-queries")));
    const auto teacher_score = [&teacher](const Document& doc,
                                          const Document& query) {
      return teacher.log_prob(doc, query);
    };

    bool all_ok = true;
    std::cout << std::scientific << std::setprecision(6);
    for (int qi = 0; qi < *num_queries; ++qi) {
      Document query;
      query.id = "verify-" + std::to_string(qi);
      query.domain = teacher.query_domain();
      const int len = 1 + static_cast<int>(rng.below(*max_len));
      for (int t = 0; t < len; ++t) {
        query.tokens.push_back(
            query_alphabet[rng.below(query_alphabet.size())]);
      }

      const auto dist = crossrank::exact_conditional(teacher, query);
      const double entropy = dist.entropy();
      const auto estimate = crossrank::mc_cross_entropy_stats(
          teacher, teacher_score, {query}, *samples,
          crossrank::mix_seed(*seed, static_cast<std::uint64_t>(qi) + 1));
      const double sigma = std::max(estimate.std_error, 1e-300);
      const double z = std::abs(estimate.value - entropy) / sigma;
      const double kl_self =
          crossrank::kl_divergence(dist.probs, dist.probs);
      const bool ok = z <= 3.0 && kl_self < 1e-12;
      all_ok = all_ok && ok;
      std::cout << "query " << qi << " (len " << len
                << "): exact=" << entropy << " mc=" << estimate.value
                << " +/- " << estimate.std_error << " z=" << std::fixed
                << std::setprecision(2) << z << std::scientific
                << std::setprecision(6) << " KL(p||p)=" << kl_self << " "
                << (ok ? "PASS" : "FAIL") << "\n";
    }
    std::cout.unsetf(std::ios::scientific);
    if (!all_ok) fail_data("distill-verify: consistency checks failed");
    std::cout << "all checks passed\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "crossrank: bag-of-words bi-encoder retrieval with teacher-sampled "
      "data augmentation"};
  app.require_subcommand(1);

  add_build_vocab(app);
  add_augment(app);
  add_train(app);
  add_index(app);
  add_search(app);
  add_pool_eval(app, "eval-mrr",
                "Pooled retrieval evaluation reporting mean reciprocal rank",
                true);
  add_eval_ndcg(app);
  add_pool_eval(app, "eval-nll",
                "Pooled retrieval evaluation reporting negative "
                "log-likelihood",
                false);
  add_distill_verify(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
