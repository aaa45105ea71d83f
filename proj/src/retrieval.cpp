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

#include "crossrank/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crossrank/common.hpp"
#include "crossrank/objective.hpp"
#include "crossrank/parallel.hpp"
#include "crossrank/serialize.hpp"

namespace crossrank {

namespace {

using nlohmann::json;

constexpr const char* kIndexMagic = "NBIX1";
constexpr std::uint32_t kIndexVersion = 1;

// Sort order shared by search and rerank: best score first, doc id breaks
// ties, input position breaks duplicate ids.
std::vector<std::size_t> ranked_order(const std::vector<double>& scores,
                                      const std::vector<std::string>& ids) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (ids[a] != ids[b]) return ids[a] < ids[b];
    return a < b;
  });
  return order;
}

}  // namespace

EmbeddingIndex build_index(const Checkpoint& checkpoint,
                           const std::vector<Document>& docs, int threads) {
  EmbeddingIndex index;
  index.dim = checkpoint.config.dim;
  index.fingerprint = params_fingerprint(checkpoint.encoders);
  index.doc_ids.resize(docs.size());
  index.domains.resize(docs.size());
  index.matrix.assign(docs.size() * static_cast<std::size_t>(index.dim), 0.0);

  const std::size_t dim = static_cast<std::size_t>(index.dim);
  const std::size_t max_len =
      static_cast<std::size_t>(checkpoint.config.max_len);
  parallel_for(docs.size(), threads, [&](std::size_t i) {
    const Document& doc = docs[i];
    const Vocabulary& vocab = checkpoint.vocabs.doc_vocab(doc.domain);
    auto enc_it = checkpoint.encoders.doc_encoders.find(doc.domain);
    if (enc_it == checkpoint.encoders.doc_encoders.end()) {
      fail_data("no document encoder for domain '" + doc.domain + "'");
    }
    const IdSequence ids = encode_ids(doc, vocab, max_len);
    const PooledEmbedding emb = embed_sequence(enc_it->second, ids);
    double norm_sq = 0.0;
    for (double x : emb.vector) norm_sq += x * x;
    const double norm = std::sqrt(norm_sq);
    if (!(norm > kIndexNormEpsilon)) {
      fail_data("document " + doc.id + " embeds to a zero vector");
    }
    index.doc_ids[i] = doc.id;
    index.domains[i] = doc.domain;
    double* out = index.matrix.data() + i * dim;
    for (std::size_t d = 0; d < dim; ++d) out[d] = emb.vector[d] / norm;
  });
  return index;
}

std::vector<double> brute_force_scores(
    const EmbeddingIndex& index, std::span<const double> query_embedding) {
  require(query_embedding.size() == static_cast<std::size_t>(index.dim),
          "brute_force_scores: dimension mismatch");
  std::vector<double> scores(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    scores[i] = cosine_similarity(query_embedding, index.row(i));
  }
  return scores;
}

SearchResult search_topk(const EmbeddingIndex& index, const Document& query,
                         const Checkpoint& checkpoint, std::size_t k) {
  require(k >= 1, "search_topk: k must be >= 1");
  if (params_fingerprint(checkpoint.encoders) != index.fingerprint) {
    fail_data("index was built by a different checkpoint (fingerprint mismatch)");
  }
  const IdSequence ids =
      encode_ids(query, checkpoint.vocabs.query,
                 static_cast<std::size_t>(checkpoint.config.max_len));
  const PooledEmbedding emb =
      embed_sequence(checkpoint.encoders.query_encoder, ids);
  const std::vector<double> scores = brute_force_scores(index, emb.vector);
  const std::vector<std::size_t> order = ranked_order(scores, index.doc_ids);

  SearchResult result;
  const std::size_t take = std::min(k, order.size());
  result.hits.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    result.hits.push_back({index.doc_ids[order[r]], scores[order[r]]});
  }
  return result;
}

std::vector<SearchResult> teacher_rerank(const TeacherSampler& teacher,
                                         const std::vector<Document>& queries,
                                         const std::vector<Document>& docs,
                                         std::size_t limit, int threads) {
  require(teacher.can_score(), "teacher_rerank: teacher cannot score pairs");
  require(queries.size() * docs.size() <= limit,
          "teacher_rerank: |queries| x |docs| exceeds the pair limit");
  std::vector<std::string> doc_ids;
  doc_ids.reserve(docs.size());
  for (const auto& doc : docs) doc_ids.push_back(doc.id);

  std::vector<SearchResult> results(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t qi) {
    std::vector<double> scores(docs.size());
    for (std::size_t j = 0; j < docs.size(); ++j) {
      scores[j] = teacher.log_prob(docs[j], queries[qi]);
    }
    const std::vector<std::size_t> order = ranked_order(scores, doc_ids);
    results[qi].hits.reserve(order.size());
    for (std::size_t idx : order) {
      results[qi].hits.push_back({doc_ids[idx], scores[idx]});
    }
  });
  return results;
}

void save_index(const std::string& path, const EmbeddingIndex& index) {
  json header;
  header["dim"] = index.dim;
  header["doc_ids"] = index.doc_ids;
  header["domains"] = index.domains;
  header["fingerprint"] = index.fingerprint;
  write_envelope(path, kIndexMagic, kIndexVersion, std::move(header),
                 {{"matrix", std::span<const double>(index.matrix)}});
}

EmbeddingIndex load_index(const std::string& path) {
  const LoadedEnvelope env =
      read_envelope(path, kIndexMagic, kIndexVersion, "index");
  EmbeddingIndex index;
  try {
    index.dim = env.header.at("dim").get<std::int32_t>();
    index.doc_ids = env.header.at("doc_ids").get<std::vector<std::string>>();
    index.domains = env.header.at("domains").get<std::vector<std::string>>();
    index.fingerprint = env.header.at("fingerprint").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail_data("corrupt index header: " + std::string(e.what()));
  }
  index.matrix = env.array("matrix");
  if (index.dim <= 0 || index.domains.size() != index.doc_ids.size() ||
      index.matrix.size() !=
          index.doc_ids.size() * static_cast<std::size_t>(index.dim)) {
    fail_data("corrupt index: shape mismatch");
  }
  return index;
}

}  // namespace crossrank
