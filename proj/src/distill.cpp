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

#include "crossrank/distill.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "crossrank/common.hpp"
#include "crossrank/rng.hpp"
#include "json.hpp"

namespace crossrank {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDocDirectionSalt = 0x71a9d2f3c4b5e607ull;
constexpr std::uint64_t kQueryDirectionSalt = 0x3c8e1b6a9f0d4e25ull;
constexpr std::uint64_t kShuffleSalt = 0xa5b35719ce02d84bull;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Inverse-CDF draw over a sorted token->probability map.
const std::string& draw_token(const SyntheticChannelTeacher::Row& row,
                              SplitMix64& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  const std::string* last = nullptr;
  for (const auto& [token, p] : row) {
    if (p <= 0.0) continue;
    cum += p;
    last = &token;
    if (u < cum) return token;
  }
  if (last == nullptr) fail_data("channel row has no positive mass");
  return *last;  // rounding pushed the total below u
}

void validate_row(const std::string& token,
                  const SyntheticChannelTeacher::Row& row) {
  double sum = 0.0;
  for (const auto& [target, p] : row) {
    if (p < 0.0) fail_data("channel row for '" + token + "' has negative mass");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail_data("channel row for '" + token + "' does not sum to 1");
  }
}

}  // namespace

double TeacherSampler::log_prob(const Document&, const Document&) const {
  throw std::invalid_argument("this teacher cannot score pairs");
}

// ---------------------------------------------------------------------------
// FileTeacher

FileTeacher::FileTeacher(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open teacher file: " + path);
  std::map<std::string, std::map<int, std::vector<std::string>>> q2d, d2q;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": " << e.what();
      fail_data(msg.str());
    }
    const std::string id = rec.at("example_id").get<std::string>();
    const std::string direction = rec.at("direction").get<std::string>();
    const int index = rec.at("sample_index").get<int>();
    std::vector<std::string> tokens =
        rec.at("tokens").get<std::vector<std::string>>();
    if (tokens.empty()) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": empty sample tokens";
      fail_data(msg.str());
    }
    if (direction != "q2d" && direction != "d2q") {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": bad direction '" << direction << "'";
      fail_data(msg.str());
    }
    auto& target = direction == "q2d" ? q2d[id] : d2q[id];
    if (!target.emplace(index, std::move(tokens)).second) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": duplicate sample_index " << index
          << " for example " << id;
      fail_data(msg.str());
    }
  }

  auto flatten = [&](const std::map<int, std::vector<std::string>>& by_index,
                     const std::string& id, const char* direction)
      -> std::vector<std::vector<std::string>> {
    std::vector<std::vector<std::string>> out;
    out.reserve(by_index.size());
    int expected = 0;
    for (const auto& [index, tokens] : by_index) {
      if (index != expected) {
        std::ostringstream msg;
        msg << path << ": example " << id << " direction " << direction
            << " is missing sample_index " << expected;
        fail_data(msg.str());
      }
      ++expected;
      out.push_back(tokens);
    }
    return out;
  };

  for (auto& [id, by_index] : q2d) {
    samples_[id].q2d = flatten(by_index, id, "q2d");
  }
  for (auto& [id, by_index] : d2q) {
    samples_[id].d2q = flatten(by_index, id, "d2q");
  }
}

std::vector<Document> FileTeacher::take(const std::string& example_id,
                                        bool q2d, int m,
                                        const char* direction_name) const {
  auto it = samples_.find(example_id);
  if (it == samples_.end()) {
    fail_data("teacher file has no samples for example " + example_id);
  }
  const auto& pool = q2d ? it->second.q2d : it->second.d2q;
  if (static_cast<int>(pool.size()) < m) {
    std::ostringstream msg;
    msg << "teacher file has " << pool.size() << " " << direction_name
        << " samples for example " << example_id << ", need " << m;
    fail_data(msg.str());
  }
  std::vector<Document> out;
  out.reserve(m);
  for (int k = 0; k < m; ++k) {
    Document doc;
    doc.id = example_id + "#" + direction_name + std::to_string(k);
    doc.tokens = pool[k];
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<Document> FileTeacher::sample_docs(const Document& query, int m,
                                               std::uint64_t) const {
  return take(query.id, true, m, "q2d");
}

std::vector<Document> FileTeacher::sample_queries(const Document& doc, int m,
                                                  std::uint64_t) const {
  return take(doc.id, false, m, "d2q");
}

void FileTeacher::validate_against(
    const std::vector<PairedExample>& corpus) const {
  std::map<std::string, bool> corpus_ids;
  for (const auto& ex : corpus) corpus_ids[ex.query.id] = true;
  for (const auto& [id, samples] : samples_) {
    (void)samples;
    if (!corpus_ids.count(id)) {
      fail_data("teacher file references unknown example id: " + id);
    }
  }
}

// ---------------------------------------------------------------------------
// SyntheticChannelTeacher

SyntheticChannelTeacher::SyntheticChannelTeacher(
    std::string query_domain, std::string doc_domain,
    std::map<std::string, Row> forward)
    : query_domain_(std::move(query_domain)),
      doc_domain_(std::move(doc_domain)),
      forward_(std::move(forward)) {
  for (const auto& [token, row] : forward_) validate_row(token, row);
  // Bayes under the flat prior: p(q|d) = p(d|q) / sum_q' p(d|q').
  std::map<std::string, double> totals;
  for (const auto& [qtok, row] : forward_) {
    for (const auto& [dtok, p] : row) {
      if (p > 0.0) totals[dtok] += p;
    }
  }
  for (const auto& [qtok, row] : forward_) {
    for (const auto& [dtok, p] : row) {
      if (p > 0.0) inverse_[dtok][qtok] = p / totals[dtok];
    }
  }
}

SyntheticChannelTeacher::SyntheticChannelTeacher(
    std::string query_domain, std::string doc_domain,
    std::map<std::string, Row> forward, std::map<std::string, Row> inverse)
    : query_domain_(std::move(query_domain)),
      doc_domain_(std::move(doc_domain)),
      forward_(std::move(forward)),
      inverse_(std::move(inverse)) {
  for (const auto& [token, row] : forward_) validate_row(token, row);
  for (const auto& [token, row] : inverse_) validate_row(token, row);
}

const SyntheticChannelTeacher::Row& SyntheticChannelTeacher::forward_row(
    const std::string& token) const {
  auto it = forward_.find(token);
  if (it == forward_.end()) {
    fail_data("channel has no row for query token '" + token + "'");
  }
  return it->second;
}

const SyntheticChannelTeacher::Row& SyntheticChannelTeacher::inverse_row(
    const std::string& token) const {
  auto it = inverse_.find(token);
  if (it == inverse_.end()) {
    fail_data("channel has no inverse row for document token '" + token + "'");
  }
  return it->second;
}

std::vector<Document> SyntheticChannelTeacher::sample_docs(
    const Document& query, int m, std::uint64_t seed) const {
  SplitMix64 rng(seed);
  std::vector<Document> out;
  out.reserve(m);
  for (int k = 0; k < m; ++k) {
    Document doc;
    doc.id = query.id + "#q2d" + std::to_string(k);
    doc.domain = doc_domain_;
    doc.tokens.reserve(query.tokens.size());
    for (const auto& t : query.tokens) {
      doc.tokens.push_back(draw_token(forward_row(t), rng));
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<Document> SyntheticChannelTeacher::sample_queries(
    const Document& doc, int m, std::uint64_t seed) const {
  SplitMix64 rng(seed);
  std::vector<Document> out;
  out.reserve(m);
  for (int k = 0; k < m; ++k) {
    Document q;
    q.id = doc.id + "#d2q" + std::to_string(k);
    q.domain = query_domain_;
    q.tokens.reserve(doc.tokens.size());
    for (const auto& t : doc.tokens) {
      q.tokens.push_back(draw_token(inverse_row(t), rng));
    }
    out.push_back(std::move(q));
  }
  return out;
}

double SyntheticChannelTeacher::log_prob(const Document& doc,
                                         const Document& query) const {
  if (doc.tokens.size() != query.tokens.size()) return kNegInf;
  double lp = 0.0;
  for (std::size_t t = 0; t < query.tokens.size(); ++t) {
    const Row& row = forward_row(query.tokens[t]);
    auto it = row.find(doc.tokens[t]);
    if (it == row.end() || it->second <= 0.0) return kNegInf;
    lp += std::log(it->second);
  }
  return lp;
}

std::vector<std::string> SyntheticChannelTeacher::query_alphabet() const {
  std::vector<std::string> tokens;
  tokens.reserve(forward_.size());
  for (const auto& [token, row] : forward_) tokens.push_back(token);
  return tokens;
}

std::vector<std::string> SyntheticChannelTeacher::doc_alphabet() const {
  std::map<std::string, bool> seen;
  for (const auto& [qtok, row] : forward_) {
    for (const auto& [dtok, p] : row) {
      if (p > 0.0) seen[dtok] = true;
    }
  }
  std::vector<std::string> tokens;
  tokens.reserve(seen.size());
  for (const auto& [token, flag] : seen) tokens.push_back(token);
  return tokens;
}

SyntheticChannelTeacher load_channel(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot open channel file: " + path);
  json spec;
  try {
    in >> spec;
  } catch (const std::exception& e) {
    fail_data("corrupt channel file " + path + ": " + e.what());
  }
  auto read_rows = [](const json& obj) {
    std::map<std::string, SyntheticChannelTeacher::Row> rows;
    for (const auto& [token, row] : obj.items()) {
      for (const auto& [target, p] : row.items()) {
        rows[token][target] = p.get<double>();
      }
    }
    return rows;
  };
  const std::string qd = spec.at("query_domain").get<std::string>();
  const std::string dd = spec.at("doc_domain").get<std::string>();
  auto forward = read_rows(spec.at("forward"));
  if (spec.contains("inverse")) {
    return SyntheticChannelTeacher(qd, dd, std::move(forward),
                                   read_rows(spec.at("inverse")));
  }
  return SyntheticChannelTeacher(qd, dd, std::move(forward));
}

void save_channel(const std::string& path,
                  const SyntheticChannelTeacher& teacher) {
  json spec;
  spec["query_domain"] = teacher.query_domain();
  spec["doc_domain"] = teacher.doc_domain();
  json forward = json::object();
  for (const auto& [token, row] : teacher.forward()) {
    json jrow = json::object();
    for (const auto& [target, p] : row) jrow[target] = p;
    forward[token] = std::move(jrow);
  }
  spec["forward"] = std::move(forward);
  json inverse = json::object();
  for (const auto& [token, row] : teacher.inverse()) {
    json jrow = json::object();
    for (const auto& [target, p] : row) jrow[target] = p;
    inverse[token] = std::move(jrow);
  }
  spec["inverse"] = std::move(inverse);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("cannot write channel file: " + path);
  out << spec.dump(2) << "\n";
}

SyntheticChannelTeacher make_random_channel(int alphabet, int fanout,
                                            std::uint64_t seed,
                                            const std::string& query_domain,
                                            const std::string& doc_domain) {
  require(alphabet >= 1, "make_random_channel: alphabet must be >= 1");
  require(fanout >= 1 && fanout <= alphabet,
          "make_random_channel: fanout must be in [1, alphabet]");
  // Zero-padded names keep lexicographic order equal to numeric order.
  std::size_t width = 1;
  for (int v = alphabet - 1; v >= 10; v /= 10) ++width;
  auto name = [&](char prefix, int k) {
    std::string num = std::to_string(k);
    return prefix + std::string(width - num.size(), '0') + num;
  };

  SplitMix64 rng(seed);
  // Striped target assignment through a random permutation keeps every
  // document token reachable.
  std::vector<int> perm(alphabet);
  for (int i = 0; i < alphabet; ++i) perm[i] = i;
  deterministic_shuffle(perm, rng);

  std::map<std::string, SyntheticChannelTeacher::Row> forward;
  for (int k = 0; k < alphabet; ++k) {
    SyntheticChannelTeacher::Row row;
    std::vector<double> weights(fanout);
    double total = 0.0;
    for (int j = 0; j < fanout; ++j) {
      weights[j] = rng.uniform(0.2, 1.0);
      total += weights[j];
    }
    for (int j = 0; j < fanout; ++j) {
      const int target = perm[(k * fanout + j) % alphabet];
      row[name('d', target)] += weights[j] / total;
    }
    forward[name('q', k)] = std::move(row);
  }
  return SyntheticChannelTeacher(query_domain, doc_domain, std::move(forward));
}

std::vector<PairedExample> sample_channel_corpus(
    const SyntheticChannelTeacher& teacher, std::size_t n, int min_len,
    int max_len, std::uint64_t seed, const std::string& id_prefix) {
  require(min_len >= 1 && max_len >= min_len,
          "sample_channel_corpus: bad length range");
  const auto alphabet = teacher.query_alphabet();
  SplitMix64 rng(seed);
  std::vector<PairedExample> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PairedExample ex;
    ex.query.id = id_prefix + std::to_string(i);
    ex.query.domain = teacher.query_domain();
    const int len =
        min_len + static_cast<int>(rng.below(max_len - min_len + 1));
    ex.query.tokens.reserve(len);
    for (int t = 0; t < len; ++t) {
      ex.query.tokens.push_back(alphabet[rng.below(alphabet.size())]);
    }
    Document doc = teacher.sample_docs(ex.query, 1, rng.next())[0];
    doc.id = ex.query.id;
    ex.document = std::move(doc);
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Exact enumeration

double EnumeratedDistribution::entropy() const {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<std::string> EnumeratedDistribution::sequence_at(
    std::size_t index) const {
  std::vector<std::string> tokens(length);
  const std::size_t v = alphabet.size();
  for (std::size_t t = length; t-- > 0;) {
    tokens[t] = alphabet[index % v];
    index /= v;
  }
  return tokens;
}

std::size_t EnumeratedDistribution::index_of(
    const std::vector<std::string>& tokens) const {
  require(tokens.size() == length, "index_of: sequence length mismatch");
  std::size_t index = 0;
  for (const auto& token : tokens) {
    auto it = std::lower_bound(alphabet.begin(), alphabet.end(), token);
    require(it != alphabet.end() && *it == token,
            "index_of: token outside alphabet: " + token);
    index = index * alphabet.size() +
            static_cast<std::size_t>(it - alphabet.begin());
  }
  return index;
}

EnumeratedDistribution exact_conditional(
    const SyntheticChannelTeacher& teacher, const Document& query,
    std::size_t max_outcomes) {
  require(!query.tokens.empty(), "exact_conditional: empty query");
  EnumeratedDistribution dist;
  dist.alphabet = teacher.doc_alphabet();
  dist.length = query.tokens.size();

  const std::size_t v = dist.alphabet.size();
  std::size_t outcomes = 1;
  for (std::size_t t = 0; t < dist.length; ++t) {
    if (outcomes > max_outcomes / v) {
      std::ostringstream msg;
      msg << "enumeration too large: " << v << "^" << dist.length
          << " outcomes exceed the limit of " << max_outcomes;
      fail_data(msg.str());
    }
    outcomes *= v;
  }

  // Per-position probability over the full alphabet (zeros off-support).
  std::vector<std::vector<double>> pos_probs(dist.length,
                                             std::vector<double>(v, 0.0));
  for (std::size_t t = 0; t < dist.length; ++t) {
    const auto& row = teacher.forward();
    auto it = row.find(query.tokens[t]);
    if (it == row.end()) {
      fail_data("channel has no row for query token '" + query.tokens[t] +
                "'");
    }
    for (std::size_t a = 0; a < v; ++a) {
      auto p = it->second.find(dist.alphabet[a]);
      if (p != it->second.end()) pos_probs[t][a] = p->second;
    }
  }

  // Prefix expansion keeps position 0 the most significant digit.
  dist.probs = {1.0};
  for (std::size_t t = 0; t < dist.length; ++t) {
    std::vector<double> next(dist.probs.size() * v);
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
      for (std::size_t a = 0; a < v; ++a) {
        next[i * v + a] = dist.probs[i] * pos_probs[t][a];
      }
    }
    dist.probs = std::move(next);
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Augmentation

AugmentedDataset augment_dataset(const std::vector<PairedExample>& data,
                                 const TeacherSampler& teacher, int m,
                                 std::uint64_t seed, bool dedup, bool strict,
                                 std::vector<std::string>* reports) {
  require(m >= 0, "augment_dataset: m must be >= 0");
  for (const auto& ex : data) {
    require(ex.provenance == Provenance::kOriginal,
            "augment_dataset: inputs must have provenance=original");
  }

  auto report = [&](const std::string& msg) {
    if (reports) reports->push_back(msg);
  };

  AugmentedDataset out;
  out.m = m;
  out.examples.reserve(data.size() * (2 * static_cast<std::size_t>(m) + 1));

  for (const auto& ex : data) {
    out.examples.push_back(ex);
    ++out.count_original;
    if (m == 0) continue;

    const std::uint64_t ex_seed = seed_for_id(seed, ex.query.id);
    try {
      std::vector<Document> docs =
          teacher.sample_docs(ex.query, m, mix_seed(ex_seed, kDocDirectionSalt));
      std::vector<Document> queries = teacher.sample_queries(
          ex.document, m, mix_seed(ex_seed, kQueryDirectionSalt));
      if (static_cast<int>(docs.size()) != m ||
          static_cast<int>(queries.size()) != m) {
        fail_data("teacher returned the wrong number of samples");
      }

      for (int k = 0; k < m; ++k) {
        if (docs[k].tokens.empty()) fail_data("teacher returned empty sample");
        if (dedup && docs[k].tokens == ex.document.tokens) {
          ++out.dropped_duplicates;
          report("example " + ex.query.id + ": dropped duplicate q2d sample " +
                 std::to_string(k));
          continue;
        }
        PairedExample sampled;
        sampled.query = ex.query;
        sampled.document = std::move(docs[k]);
        sampled.document.id = ex.query.id + "#q2d" + std::to_string(k);
        sampled.document.domain = ex.document.domain;
        sampled.provenance = Provenance::kSampledDocument;
        out.examples.push_back(std::move(sampled));
        ++out.count_sampled_document;
      }
      for (int k = 0; k < m; ++k) {
        if (queries[k].tokens.empty()) {
          fail_data("teacher returned empty sample");
        }
        if (dedup && queries[k].tokens == ex.query.tokens) {
          ++out.dropped_duplicates;
          report("example " + ex.query.id + ": dropped duplicate d2q sample " +
                 std::to_string(k));
          continue;
        }
        PairedExample sampled;
        sampled.document = ex.document;
        sampled.query = std::move(queries[k]);
        sampled.query.id = ex.query.id + "#d2q" + std::to_string(k);
        sampled.query.domain = ex.query.domain;
        sampled.provenance = Provenance::kSampledQuery;
        out.examples.push_back(std::move(sampled));
        ++out.count_sampled_query;
      }
    } catch (const DataError& e) {
      if (strict) throw;
      report("example " + ex.query.id + ": teacher failed: " + e.what());
    }
  }

  SplitMix64 shuffle_rng(mix_seed(seed, kShuffleSalt));
  deterministic_shuffle(out.examples, shuffle_rng);
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo cross-entropy

McEstimate mc_cross_entropy_stats(const TeacherSampler& teacher,
                                  const StudentLogProb& student_log_prob,
                                  const std::vector<Document>& queries, int m,
                                  std::uint64_t seed) {
  require(m >= 1, "mc_cross_entropy: m must be >= 1");
  require(!queries.empty(), "mc_cross_entropy: no queries");
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& query : queries) {
    const std::uint64_t qseed = seed_for_id(seed, query.id);
    const auto docs = teacher.sample_docs(query, m, qseed);
    for (const auto& doc : docs) {
      const double x = -student_log_prob(doc, query);
      sum += x;
      sum_sq += x * x;
      ++n;
    }
  }
  McEstimate est;
  est.samples = n;
  est.value = sum / double(n);
  if (n >= 2) {
    const double var =
        std::max(0.0, (sum_sq - double(n) * est.value * est.value) /
                          double(n - 1));
    est.std_error = std::sqrt(var / double(n));
  }
  return est;
}

double mc_cross_entropy(const TeacherSampler& teacher,
                        const StudentLogProb& student_log_prob,
                        const std::vector<Document>& queries, int m,
                        std::uint64_t seed) {
  return mc_cross_entropy_stats(teacher, student_log_prob, queries, m, seed)
      .value;
}

}  // namespace crossrank
