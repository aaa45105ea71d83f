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

#include "crossrank/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "crossrank/common.hpp"
#include "crossrank/objective.hpp"
#include "crossrank/parallel.hpp"
#include "crossrank/rng.hpp"

namespace crossrank {

namespace {

using nlohmann::json;

// -log softmax(row)[i] with the same all--inf fallback as
// pool_nll_from_scores: a row with no finite score scores the pool
// uniformly.
double row_nll(const double* row, std::size_t p, std::size_t i) {
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < p; ++j) max_score = std::max(max_score, row[j]);
  if (!std::isfinite(max_score)) return std::log(static_cast<double>(p));
  double sum = 0.0;
  for (std::size_t j = 0; j < p; ++j) sum += std::exp(row[j] - max_score);
  return -(row[i] - max_score) + std::log(sum);
}

// Aggregates reciprocal ranks and NLL contributions for one domain.
struct Accumulator {
  std::size_t count = 0;
  double reciprocal_sum = 0.0;
  double nll_sum = 0.0;

  DomainMetrics metrics() const {
    DomainMetrics m;
    m.count = count;
    if (count > 0) {
      m.mrr = reciprocal_sum / static_cast<double>(count);
      m.nll = nll_sum / static_cast<double>(count);
    }
    return m;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Labels

double RelevanceLabels::grade(const std::string& query_id,
                              const std::string& doc_id) const {
  auto it = grades.find({query_id, doc_id});
  return it == grades.end() ? 0.0 : it->second;
}

std::vector<std::pair<std::string, double>> RelevanceLabels::labeled_docs(
    const std::string& query_id) const {
  std::vector<std::pair<std::string, double>> out;
  for (auto it = grades.lower_bound({query_id, std::string()});
       it != grades.end() && it->first.first == query_id; ++it) {
    out.emplace_back(it->first.second, it->second);
  }
  return out;
}

RelevanceLabels load_relevance_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open labels file: " + path);
  RelevanceLabels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::ostringstream where;
    where << path << ":" << line_no << ": ";
    try {
      const json rec = json::parse(line);
      const std::string qid = rec.at("query_id").get<std::string>();
      const std::string did = rec.at("doc_id").get<std::string>();
      const double rel = rec.at("relevance").get<double>();
      if (!std::isfinite(rel) || rel < 0.0) {
        fail_data(where.str() + "relevance must be finite and non-negative");
      }
      if (!labels.grades.emplace(std::make_pair(qid, did), rel).second) {
        fail_data(where.str() + "duplicate label for (" + qid + ", " + did +
                  ")");
      }
    } catch (const json::exception& e) {
      fail_data(where.str() + e.what());
    }
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Metrics

double mrr(const std::vector<RankedList>& ranked) {
  require(!ranked.empty(), "mrr: empty input");
  double sum = 0.0;
  for (const auto& list : ranked) {
    require(list.rank_of_true.has_value() && *list.rank_of_true >= 1,
            "mrr: list for query " + list.query_id + " has no true-doc rank");
    sum += 1.0 / static_cast<double>(*list.rank_of_true);
  }
  return sum / static_cast<double>(ranked.size());
}

double ndcg(const RankedList& ranked, const RelevanceLabels& labels, int k) {
  require(k >= 1, "ndcg: k must be >= 1");
  double dcg = 0.0;
  const std::size_t depth =
      std::min<std::size_t>(ranked.doc_ids.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < depth; ++i) {
    const double rel = labels.grade(ranked.query_id, ranked.doc_ids[i]);
    dcg += rel / std::log2(static_cast<double>(i) + 2.0);
  }

  std::vector<double> ideal;
  for (const auto& [doc_id, rel] : labels.labeled_docs(ranked.query_id)) {
    ideal.push_back(rel);
  }
  std::sort(ideal.begin(), ideal.end(), std::greater<double>());
  double idcg = 0.0;
  const std::size_t ideal_depth =
      std::min<std::size_t>(ideal.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ideal_depth; ++i) {
    idcg += ideal[i] / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::vector<RankedList> rank_pool(std::span<const double> scores,
                                  const std::vector<std::string>& query_ids,
                                  const std::vector<std::string>& doc_ids) {
  const std::size_t p = query_ids.size();
  require(doc_ids.size() == p && scores.size() == p * p,
          "rank_pool: shape mismatch");
  std::vector<RankedList> lists(p);
  for (std::size_t qi = 0; qi < p; ++qi) {
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    const double* row = scores.data() + qi * p;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (row[a] != row[b]) return row[a] > row[b];
      if (doc_ids[a] != doc_ids[b]) return doc_ids[a] < doc_ids[b];
      return a < b;
    });
    RankedList& list = lists[qi];
    list.query_id = query_ids[qi];
    list.doc_ids.reserve(p);
    for (std::size_t r = 0; r < p; ++r) {
      list.doc_ids.push_back(doc_ids[order[r]]);
      if (order[r] == qi) list.rank_of_true = static_cast<int>(r) + 1;
    }
  }
  return lists;
}

// ---------------------------------------------------------------------------
// Pool scorers

std::vector<double> StudentPoolScorer::score_pool(
    const std::vector<const PairedExample*>& pool) const {
  const std::size_t p = pool.size();
  std::vector<PooledEmbedding> query_embs(p), doc_embs(p);
  const std::size_t max_len =
      static_cast<std::size_t>(checkpoint_.config.max_len);
  parallel_for(p, threads_, [&](std::size_t i) {
    const PairedExample& ex = *pool[i];
    const IdSequence query_ids =
        encode_ids(ex.query, checkpoint_.vocabs.query, max_len);
    query_embs[i] =
        embed_sequence(checkpoint_.encoders.query_encoder, query_ids);
    const Vocabulary& vocab =
        checkpoint_.vocabs.doc_vocab(ex.document.domain);
    auto enc = checkpoint_.encoders.doc_encoders.find(ex.document.domain);
    if (enc == checkpoint_.encoders.doc_encoders.end()) {
      fail_data("no document encoder for domain '" + ex.document.domain + "'");
    }
    const IdSequence doc_ids = encode_ids(ex.document, vocab, max_len);
    doc_embs[i] = embed_sequence(enc->second, doc_ids);
  });
  return similarity_batch(query_embs, doc_embs,
                          checkpoint_.config.temperature)
      .sims;
}

TeacherPoolScorer::TeacherPoolScorer(const TeacherSampler& teacher,
                                     int threads)
    : teacher_(teacher), threads_(threads) {
  require(teacher.can_score(), "TeacherPoolScorer: teacher cannot score pairs");
}

std::vector<double> TeacherPoolScorer::score_pool(
    const std::vector<const PairedExample*>& pool) const {
  const std::size_t p = pool.size();
  std::vector<double> scores(p * p);
  parallel_for(p, threads_, [&](std::size_t i) {
    for (std::size_t j = 0; j < p; ++j) {
      scores[i * p + j] = teacher_.log_prob(pool[j]->document, pool[i]->query);
    }
  });
  return scores;
}

// ---------------------------------------------------------------------------
// Report

json EvalReport::to_json() const {
  auto metrics_json = [](const DomainMetrics& m) {
    json j{{"count", m.count}, {"mrr", m.mrr}, {"nll", m.nll}};
    if (m.ndcg.has_value()) j["ndcg"] = *m.ndcg;
    return j;
  };
  json j;
  j["pool_size"] = pool_size;
  j["mixed_pools"] = mixed_pools;
  j["overall"] = metrics_json(overall);
  json domains = json::object();
  for (const auto& [domain, metrics] : per_domain) {
    domains[domain] = metrics_json(metrics);
  }
  j["per_domain"] = std::move(domains);
  j["warnings"] = warnings;
  // The gain convention is fixed and recorded so reported numbers are
  // unambiguous.
  j["ndcg_gain"] = "raw relevance grade";
  return j;
}

std::string EvalReport::to_table() const {
  const bool has_ndcg = overall.ndcg.has_value();
  std::ostringstream out;
  out << std::left << std::setw(16) << "domain" << std::right << std::setw(8)
      << "count" << std::setw(10) << "mrr" << std::setw(10) << "nll";
  if (has_ndcg) out << std::setw(10) << "ndcg";
  out << "\n";
  auto row = [&](const std::string& name, const DomainMetrics& m) {
    out << std::left << std::setw(16) << name << std::right << std::setw(8)
        << m.count << std::fixed << std::setprecision(4) << std::setw(10)
        << m.mrr << std::setw(10) << m.nll;
    if (has_ndcg) {
      if (m.ndcg.has_value()) {
        out << std::setw(10) << *m.ndcg;
      } else {
        out << std::setw(10) << "-";
      }
    }
    out << "\n";
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
  };
  for (const auto& [domain, metrics] : per_domain) row(domain, metrics);
  row("overall", overall);
  out << "(pool_size=" << pool_size
      << (mixed_pools ? ", mixed pools" : ", per-domain pools")
      << "; ndcg gain = raw relevance grade)\n";
  for (const auto& warning : warnings) out << "warning: " << warning << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Pooled evaluation

EvalReport evaluate_pools(const PoolScorer& scorer,
                          const std::vector<PairedExample>& test,
                          int pool_size, std::uint64_t seed,
                          bool mixed_pools) {
  require(pool_size >= 2, "evaluate_pools: pool_size must be >= 2");
  if (test.empty()) fail_data("evaluate_pools: empty test set");

  EvalReport report;
  report.pool_size = pool_size;
  report.mixed_pools = mixed_pools;

  // Group either everything together or by document domain.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < test.size(); ++i) {
    groups[mixed_pools ? std::string("all") : test[i].document.domain]
        .push_back(i);
  }

  std::map<std::string, Accumulator> domain_acc;
  Accumulator overall;

  for (auto& [group_name, indices] : groups) {
    SplitMix64 rng(mix_seed(seed, fnv1a64(group_name)));
    deterministic_shuffle(indices, rng);
    if (indices.size() < static_cast<std::size_t>(pool_size)) {
      std::ostringstream msg;
      msg << "group '" << group_name << "' has " << indices.size()
          << " pairs, fewer than one pool of " << pool_size
          << "; evaluating a single smaller pool";
      report.warnings.push_back(msg.str());
    }

    for (std::size_t start = 0; start < indices.size();
         start += static_cast<std::size_t>(pool_size)) {
      const std::size_t end = std::min(
          indices.size(), start + static_cast<std::size_t>(pool_size));
      std::vector<const PairedExample*> pool;
      std::vector<std::string> query_ids, doc_ids;
      pool.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        pool.push_back(&test[indices[i]]);
        query_ids.push_back(test[indices[i]].query.id);
        doc_ids.push_back(test[indices[i]].document.id);
      }
      const std::vector<double> scores = scorer.score_pool(pool);
      require(scores.size() == pool.size() * pool.size(),
              "evaluate_pools: scorer returned a wrong-shaped matrix");
      const std::vector<RankedList> lists =
          rank_pool(scores, query_ids, doc_ids);

      for (std::size_t i = 0; i < pool.size(); ++i) {
        const double reciprocal =
            1.0 / static_cast<double>(*lists[i].rank_of_true);
        const double nll = row_nll(scores.data() + i * pool.size(),
                                   pool.size(), i);
        Accumulator& acc = domain_acc[pool[i]->document.domain];
        ++acc.count;
        acc.reciprocal_sum += reciprocal;
        acc.nll_sum += nll;
        ++overall.count;
        overall.reciprocal_sum += reciprocal;
        overall.nll_sum += nll;
      }
    }
  }

  for (const auto& [domain, acc] : domain_acc) {
    report.per_domain[domain] = acc.metrics();
  }
  report.overall = overall.metrics();
  return report;
}

EvalReport evaluate_pools(const Checkpoint& checkpoint,
                          const std::vector<PairedExample>& test,
                          int pool_size, std::uint64_t seed,
                          bool mixed_pools) {
  StudentPoolScorer scorer(checkpoint, checkpoint.config.threads);
  return evaluate_pools(scorer, test, pool_size, seed, mixed_pools);
}

// ---------------------------------------------------------------------------
// NDCG evaluation

EvalReport evaluate_ndcg(const Checkpoint& checkpoint,
                         const std::vector<Document>& queries,
                         const std::vector<Document>& docs,
                         const RelevanceLabels& labels, int k, int threads) {
  require(k >= 1, "evaluate_ndcg: k must be >= 1");
  if (queries.empty()) fail_data("evaluate_ndcg: no queries");

  std::map<std::string, const Document*> docs_by_id;
  for (const auto& doc : docs) docs_by_id[doc.id] = &doc;

  const std::size_t max_len =
      static_cast<std::size_t>(checkpoint.config.max_len);

  EvalReport report;
  report.pool_size = k;
  std::map<std::string, std::pair<std::size_t, double>> by_domain;
  std::size_t evaluated = 0, skipped = 0;
  double total = 0.0;

  for (const auto& query : queries) {
    const auto candidates = labels.labeled_docs(query.id);
    if (candidates.empty()) {
      ++skipped;
      continue;
    }
    const IdSequence query_ids =
        encode_ids(query, checkpoint.vocabs.query, max_len);
    const PooledEmbedding query_emb =
        embed_sequence(checkpoint.encoders.query_encoder, query_ids);

    std::vector<std::string> cand_ids(candidates.size());
    std::vector<double> scores(candidates.size());
    std::vector<std::string> cand_domains(candidates.size());
    parallel_for(candidates.size(), threads, [&](std::size_t j) {
      auto it = docs_by_id.find(candidates[j].first);
      if (it == docs_by_id.end()) {
        fail_data("label references unknown doc id: " + candidates[j].first);
      }
      const Document& doc = *it->second;
      auto enc = checkpoint.encoders.doc_encoders.find(doc.domain);
      if (enc == checkpoint.encoders.doc_encoders.end()) {
        fail_data("no document encoder for domain '" + doc.domain + "'");
      }
      const IdSequence ids = encode_ids(
          doc, checkpoint.vocabs.doc_vocab(doc.domain), max_len);
      const PooledEmbedding emb = embed_sequence(enc->second, ids);
      cand_ids[j] = doc.id;
      cand_domains[j] = doc.domain;
      scores[j] = cosine_similarity(query_emb.vector, emb.vector);
    });

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return cand_ids[a] < cand_ids[b];
    });
    RankedList list;
    list.query_id = query.id;
    for (std::size_t idx : order) list.doc_ids.push_back(cand_ids[idx]);
    const double value = ndcg(list, labels, k);

    total += value;
    ++evaluated;
    const std::string domain =
        std::all_of(cand_domains.begin(), cand_domains.end(),
                    [&](const std::string& d) { return d == cand_domains[0]; })
            ? cand_domains[0]
            : std::string("mixed");
    auto& [count, sum] = by_domain[domain];
    ++count;
    sum += value;
  }

  if (evaluated == 0) fail_data("evaluate_ndcg: no query has labeled docs");
  if (skipped > 0) {
    report.warnings.push_back(std::to_string(skipped) +
                              " queries without labels were skipped");
  }
  report.overall.count = evaluated;
  report.overall.ndcg = total / static_cast<double>(evaluated);
  for (const auto& [domain, acc] : by_domain) {
    DomainMetrics m;
    m.count = acc.first;
    m.ndcg = acc.second / static_cast<double>(acc.first);
    report.per_domain[domain] = m;
  }
  return report;
}

}  // namespace crossrank
