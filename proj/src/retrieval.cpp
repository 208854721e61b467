// Copyright 2026 The SUIN Authors
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

#include "suin/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "suin/errors.hpp"

namespace suin {

std::string to_string(SimilarityMeasure m) {
  switch (m) {
    case SimilarityMeasure::kCosine: return "cosine";
    case SimilarityMeasure::kInnerProduct: return "inner_product";
    case SimilarityMeasure::kEuclidean: return "euclidean";
    case SimilarityMeasure::kJaccard: return "jaccard";
  }
  return "?";
}

SimilarityMeasure parse_similarity(const std::string& text) {
  if (text == "cosine") return SimilarityMeasure::kCosine;
  if (text == "inner_product") return SimilarityMeasure::kInnerProduct;
  if (text == "euclidean") return SimilarityMeasure::kEuclidean;
  if (text == "jaccard") return SimilarityMeasure::kJaccard;
  throw ConfigError("unknown similarity measure '" + text + "'");
}

namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("similarity: vectors of length " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
}

}  // namespace

double inner_product(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double ab = inner_product(a, b);
  const double na = std::sqrt(inner_product(a, a));
  const double nb = std::sqrt(inner_product(b, b));
  if (na == 0.0 || nb == 0.0) {
    throw UndefinedSimilarityError("cosine similarity with a zero vector");
  }
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

double euclidean_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return -std::sqrt(s);
}

double jaccard_similarity(std::span<const ItemId> a, std::span<const ItemId> b) {
  std::size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter, ++i, ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<ItemId> item_set(std::span<const ItemId> items) {
  std::vector<ItemId> out(items.begin(), items.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------

std::span<const double> RetrievalPool::embedding(std::size_t row) const {
  return std::span<const double>(embeddings_).subspan(row * dim_, dim_);
}

std::optional<std::size_t> RetrievalPool::row_of(UserId user) const {
  auto it = std::lower_bound(user_ids_.begin(), user_ids_.end(), user);
  if (it == user_ids_.end() || *it != user) return std::nullopt;
  return static_cast<std::size_t>(it - user_ids_.begin());
}

RetrievalPool RetrievalPool::from_rows(std::vector<UserId> users,
                                       std::vector<std::vector<double>> embeddings,
                                       std::vector<std::vector<ItemId>> item_sets,
                                       const SplitAssignment& splits) {
  if (users.size() != embeddings.size() || users.size() != item_sets.size()) {
    throw DimensionError("retrieval pool: row counts differ");
  }
  std::vector<std::size_t> order(users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return users[a] < users[b]; });
  RetrievalPool pool;
  pool.dim_ = embeddings.empty() ? 0 : embeddings[0].size();
  for (std::size_t idx : order) {
    const UserId u = users[idx];
    if (!splits.is_train(u)) {
      throw LeakageError("user " + std::to_string(u) + " is not a training user (" +
                         (splits.contains(u) ? to_string(splits.of(u)) : "unassigned") +
                         ") and cannot enter the retrieval pool");
    }
    if (!pool.user_ids_.empty() && pool.user_ids_.back() == u) {
      throw ConfigError("retrieval pool: duplicate user " + std::to_string(u));
    }
    if (embeddings[idx].size() != pool.dim_) throw DimensionError("retrieval pool: ragged embeddings");
    for (double v : embeddings[idx]) {
      if (!std::isfinite(v)) throw DivergenceError("retrieval pool: non-finite embedding for user " + std::to_string(u));
    }
    pool.user_ids_.push_back(u);
    pool.embeddings_.insert(pool.embeddings_.end(), embeddings[idx].begin(), embeddings[idx].end());
    pool.item_sets_.push_back(std::move(item_sets[idx]));
  }
  return pool;
}

void RetrievalPool::save(TensorArchive& ar) const {
  ar.put_ints("pool.user_ids", {user_ids_.size()}, user_ids_);
  ar.put("pool.embeddings", Tensor::from_data({user_ids_.size(), dim_}, embeddings_));
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int64_t> flat;
  for (const auto& s : item_sets_) {
    flat.insert(flat.end(), s.begin(), s.end());
    offsets.push_back(static_cast<std::int64_t>(flat.size()));
  }
  ar.put_ints("pool.item_offsets", {offsets.size()}, offsets);
  ar.put_ints("pool.items", {flat.size()}, flat);
}

RetrievalPool RetrievalPool::load(const TensorArchive& ar) {
  RetrievalPool pool;
  pool.user_ids_ = ar.ints("pool.user_ids");
  const Tensor emb = ar.tensor("pool.embeddings");
  pool.dim_ = emb.size(1);
  pool.embeddings_.assign(emb.data().begin(), emb.data().end());
  const auto& offsets = ar.ints("pool.item_offsets");
  const auto& flat = ar.ints("pool.items");
  if (offsets.size() != pool.user_ids_.size() + 1) throw IoError("pool archive: bad item offsets");
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    pool.item_sets_.emplace_back(flat.begin() + offsets[i], flat.begin() + offsets[i + 1]);
  }
  return pool;
}

RetrievalPool build_pool(const SequenceTable& sequences, const SplitAssignment& splits,
                         std::span<const UserId> users, const EncoderParams& encoder) {
  if (!encoder.frozen) throw ConfigError("build_pool requires a frozen encoder");
  std::vector<UserId> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<ItemId>> sets;
  for (UserId u : users) {
    if (!splits.is_train(u)) {
      throw LeakageError("user " + std::to_string(u) + " is not a training user (" +
                         (splits.contains(u) ? to_string(splits.of(u)) : "unassigned") +
                         ") and cannot enter the retrieval pool");
    }
    auto it = sequences.find(u);
    if (it == sequences.end()) continue;
    const auto history = history_prefix(it->second);
    if (history.empty()) continue;
    ids.push_back(u);
    rows.push_back(encode(u, history, encoder).values);
    sets.push_back(item_set(history));
  }
  return RetrievalPool::from_rows(std::move(ids), std::move(rows), std::move(sets), splits);
}

RetrievalPool build_pool(const EmbeddingTable& embeddings, const SequenceTable& sequences,
                         const SplitAssignment& splits, std::span<const UserId> users) {
  std::vector<UserId> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<ItemId>> sets;
  for (UserId u : users) {
    if (!splits.is_train(u)) {
      throw LeakageError("user " + std::to_string(u) + " is not a training user (" +
                         (splits.contains(u) ? to_string(splits.of(u)) : "unassigned") +
                         ") and cannot enter the retrieval pool");
    }
    auto it = embeddings.rows.find(u);
    if (it == embeddings.rows.end() || it->second.empty_history) continue;
    ids.push_back(u);
    rows.push_back(it->second.values);
    auto sit = sequences.find(u);
    sets.push_back(sit == sequences.end() ? std::vector<ItemId>{}
                                          : item_set(history_prefix(sit->second)));
  }
  return RetrievalPool::from_rows(std::move(ids), std::move(rows), std::move(sets), splits);
}

// ---------------------------------------------------------------------------

namespace {

bool better(const Neighbor& a, const Neighbor& b) {
  return a.score > b.score || (a.score == b.score && a.user < b.user);
}

}  // namespace

SimilarUserResult retrieve_topk(const RetrievalPool& pool, const UserQuery& query,
                                std::int64_t k, SimilarityMeasure measure,
                                std::optional<double> threshold) {
  if (k < 0) throw ConfigError("top-k must be non-negative");
  SimilarUserResult out;
  const bool dense = measure != SimilarityMeasure::kJaccard;
  if (dense && !query.embedding) {
    out.missing_query = true;
    return out;
  }
  if (k == 0) return out;
  std::vector<Neighbor> scored;
  scored.reserve(pool.size());
  for (std::size_t r = 0; r < pool.size(); ++r) {
    const UserId u = pool.user_ids()[r];
    if (u == query.user) continue;
    double s = 0.0;
    switch (measure) {
      case SimilarityMeasure::kCosine:
        s = cosine_similarity(*query.embedding, pool.embedding(r));
        break;
      case SimilarityMeasure::kInnerProduct:
        s = inner_product(*query.embedding, pool.embedding(r));
        break;
      case SimilarityMeasure::kEuclidean:
        s = euclidean_similarity(*query.embedding, pool.embedding(r));
        break;
      case SimilarityMeasure::kJaccard:
        s = jaccard_similarity(query.items, pool.items(r));
        break;
    }
    if (threshold && s < *threshold) continue;
    scored.push_back({u, s});
  }
  const auto take = std::min(scored.size(), static_cast<std::size_t>(k));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), better);
  out.neighbors.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

std::vector<SimilarUserResult> retrieve_all(const RetrievalPool& pool,
                                            std::span<const UserQuery> queries,
                                            std::int64_t k, SimilarityMeasure measure,
                                            std::optional<double> threshold, int threads) {
  std::vector<SimilarUserResult> out(queries.size());
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || queries.size() < 2) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      out[i] = retrieve_topk(pool, queries[i], k, measure, threshold);
    }
    return out;
  }
  std::vector<std::thread> pool_threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (queries.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool_threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w * chunk; i < std::min(queries.size(), (w + 1) * chunk); ++i) {
          out[i] = retrieve_topk(pool, queries[i], k, measure, threshold);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool_threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

SimilarUserResult apply_threshold(const SimilarUserResult& result, double threshold) {
  SimilarUserResult out;
  out.missing_query = result.missing_query;
  for (const auto& n : result.neighbors) {
    if (n.score >= threshold) out.neighbors.push_back(n);
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_neighbor_file(const std::filesystem::path& path, const NeighborTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  char buf[64];
  for (const auto& [user, result] : table) {
    os << user << '\t';
    for (std::size_t i = 0; i < result.neighbors.size(); ++i) {
      if (i) os << ',';
      std::snprintf(buf, sizeof(buf), "%.6f", result.neighbors[i].score);
      os << result.neighbors[i].user << ':' << buf;
    }
    os << '\n';
  }
}

NeighborTable read_neighbor_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  NeighborTable out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (tab == std::string::npos) throw IoError(where + ": missing tab separator");
    SimilarUserResult r;
    UserId user = 0;
    try {
      user = std::stoll(line.substr(0, tab));
      std::stringstream ss(line.substr(tab + 1));
      std::string entry;
      while (std::getline(ss, entry, ',')) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos) throw IoError(where + ": bad neighbor entry '" + entry + "'");
        r.neighbors.push_back({std::stoll(entry.substr(0, colon)), std::stod(entry.substr(colon + 1))});
      }
    } catch (const IoError&) {
      throw;
    } catch (const std::exception&) {
      throw IoError(where + ": malformed neighbor line");
    }
    if (!out.emplace(user, std::move(r)).second) {
      throw IoError(where + ": duplicate user " + std::to_string(user));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void EmbeddingTable::save(TensorArchive& ar) const {
  std::vector<std::int64_t> ids, flags;
  std::vector<double> flat;
  for (const auto& [u, e] : rows) {
    ids.push_back(u);
    flags.push_back(e.empty_history ? 1 : 0);
    flat.insert(flat.end(), e.values.begin(), e.values.end());
  }
  ar.put_ints("embeddings.user_ids", {ids.size()}, ids);
  ar.put_ints("embeddings.empty_history", {flags.size()}, flags);
  ar.put("embeddings.values",
         Tensor::from_data({ids.size(), static_cast<std::size_t>(dim)}, std::move(flat)));
}

EmbeddingTable EmbeddingTable::load(const TensorArchive& ar) {
  EmbeddingTable t;
  const auto& ids = ar.ints("embeddings.user_ids");
  const auto& flags = ar.ints("embeddings.empty_history");
  const Tensor values = ar.tensor("embeddings.values");
  t.dim = static_cast<std::int64_t>(values.size(1));
  const auto d = values.size(1);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    BehaviorEmbedding e;
    e.user = ids[i];
    e.empty_history = flags.at(i) != 0;
    e.values.assign(values.data().begin() + static_cast<std::ptrdiff_t>(i * d),
                    values.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    t.rows.emplace(ids[i], std::move(e));
  }
  return t;
}

EmbeddingTable embed_users(const SequenceTable& sequences, const EncoderParams& encoder) {
  EmbeddingTable t;
  t.dim = encoder.dim;
  for (const auto& [u, seq] : sequences) {
    t.rows.emplace(u, encode_or_empty(u, history_prefix(seq), encoder));
  }
  return t;
}

UserQuery make_query(UserId user, const EmbeddingTable& embeddings,
                     const SequenceTable& sequences) {
  UserQuery q;
  q.user = user;
  auto it = embeddings.rows.find(user);
  if (it != embeddings.rows.end() && !it->second.empty_history) q.embedding = it->second.values;
  auto sit = sequences.find(user);
  if (sit != sequences.end()) q.items = item_set(history_prefix(sit->second));
  return q;
}

// ---------------------------------------------------------------------------

PrefixTable retrieve_prefixes(const SequenceTable& sequences, std::span<const UserId> users,
                              const RetrievalPool& pool, const EncoderParams& encoder,
                              std::int64_t k, SimilarityMeasure measure,
                              std::optional<double> threshold, int threads) {
  std::vector<std::pair<UserId, std::size_t>> keys;
  for (UserId u : users) {
    const auto& seq = sequences.at(u);
    for (std::size_t len = 1; len + 2 <= seq.size(); ++len) keys.emplace_back(u, len);
  }
  std::vector<UserQuery> queries(keys.size());
  std::vector<PrefixEntry> entries(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& seq = sequences.at(keys[i].first);
    const std::span<const ItemId> history(seq.data(), keys[i].second);
    entries[i].embedding = encode(keys[i].first, history, encoder).values;
    queries[i].user = keys[i].first;
    queries[i].embedding = entries[i].embedding;
    queries[i].items = item_set(history);
  }
  auto results = retrieve_all(pool, queries, k, measure, threshold, threads);
  PrefixTable out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    entries[i].neighbors = std::move(results[i]);
    out.emplace(keys[i], std::move(entries[i]));
  }
  return out;
}

void save_prefix_table(TensorArchive& ar, const PrefixTable& table, std::int64_t dim) {
  std::vector<std::int64_t> users, lengths, offsets{0}, neighbor_ids;
  std::vector<double> embeddings, scores;
  for (const auto& [key, entry] : table) {
    if (static_cast<std::int64_t>(entry.embedding.size()) != dim) {
      throw DimensionError("prefix embedding width does not match " + std::to_string(dim));
    }
    users.push_back(key.first);
    lengths.push_back(static_cast<std::int64_t>(key.second));
    embeddings.insert(embeddings.end(), entry.embedding.begin(), entry.embedding.end());
    for (const auto& n : entry.neighbors.neighbors) {
      neighbor_ids.push_back(n.user);
      scores.push_back(n.score);
    }
    offsets.push_back(static_cast<std::int64_t>(neighbor_ids.size()));
  }
  ar.put_ints("prefix.user_ids", {users.size()}, users);
  ar.put_ints("prefix.history_lengths", {lengths.size()}, lengths);
  ar.put_ints("prefix.neighbor_offsets", {offsets.size()}, offsets);
  ar.put_ints("prefix.neighbor_ids", {neighbor_ids.size()}, neighbor_ids);
  ar.put("prefix.neighbor_scores", Tensor::vector(std::move(scores)));
  ar.put("prefix.embeddings",
         Tensor::from_data({users.size(), static_cast<std::size_t>(dim)}, std::move(embeddings)));
}

PrefixTable load_prefix_table(const TensorArchive& ar) {
  const auto& users = ar.ints("prefix.user_ids");
  const auto& lengths = ar.ints("prefix.history_lengths");
  const auto& offsets = ar.ints("prefix.neighbor_offsets");
  const auto& ids = ar.ints("prefix.neighbor_ids");
  const Tensor scores = ar.tensor("prefix.neighbor_scores");
  const Tensor embeddings = ar.tensor("prefix.embeddings");
  if (lengths.size() != users.size() || offsets.size() != users.size() + 1 ||
      scores.numel() != ids.size() || embeddings.size(0) != users.size()) {
    throw IoError("prefix table archive is inconsistent");
  }
  const std::size_t d = embeddings.size(1);
  PrefixTable out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    PrefixEntry e;
    e.embedding.assign(embeddings.data().begin() + static_cast<std::ptrdiff_t>(i * d),
                       embeddings.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    for (auto j = offsets[i]; j < offsets[i + 1]; ++j) {
      const auto idx = static_cast<std::size_t>(j);
      e.neighbors.neighbors.push_back({ids[idx], scores.data()[idx]});
    }
    out.emplace(std::make_pair(users[i], static_cast<std::size_t>(lengths[i])), std::move(e));
  }
  return out;
}

}  // namespace suin
