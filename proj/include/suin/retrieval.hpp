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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suin/data.hpp"
#include "suin/encoder.hpp"
#include "suin/tensor_io.hpp"

namespace suin {

enum class SimilarityMeasure { kCosine, kInnerProduct, kEuclidean, kJaccard };

std::string to_string(SimilarityMeasure m);
SimilarityMeasure parse_similarity(const std::string& text);

double cosine_similarity(std::span<const double> a, std::span<const double> b);
double inner_product(std::span<const double> a, std::span<const double> b);
// Negated distance, so larger still means more similar.
double euclidean_similarity(std::span<const double> a, std::span<const double> b);
// Both inputs are sorted, duplicate-free item sets.
double jaccard_similarity(std::span<const ItemId> a, std::span<const ItemId> b);

// Sorted, duplicate-free copy of a sequence's items.
std::vector<ItemId> item_set(std::span<const ItemId> items);

// Frozen retrieval pool over training-split users, ordered by user ID.
class RetrievalPool {
 public:
  RetrievalPool() = default;

  std::size_t size() const { return user_ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<UserId>& user_ids() const { return user_ids_; }
  std::span<const double> embedding(std::size_t row) const;
  std::span<const ItemId> items(std::size_t row) const { return item_sets_[row]; }
  const std::string& split_tag() const { return split_tag_; }
  std::optional<std::size_t> row_of(UserId user) const;

  // Rows must be finite; users must all be training users.
  static RetrievalPool from_rows(std::vector<UserId> users,
                                 std::vector<std::vector<double>> embeddings,
                                 std::vector<std::vector<ItemId>> item_sets,
                                 const SplitAssignment& splits);

  void save(TensorArchive& ar) const;
  static RetrievalPool load(const TensorArchive& ar);

 private:
  std::vector<UserId> user_ids_;
  std::size_t dim_ = 0;
  std::vector<double> embeddings_;  // row-major [size x dim]
  std::vector<std::vector<ItemId>> item_sets_;
  std::string split_tag_ = "train";
};

// Encodes each user's history prefix with the frozen encoder. Throws
// LeakageError if any listed user is not in the training split; users with
// an empty history are skipped.
RetrievalPool build_pool(const SequenceTable& sequences, const SplitAssignment& splits,
                         std::span<const UserId> users, const EncoderParams& encoder);

struct EmbeddingTable;

// Same as build_pool, reusing embeddings already computed by embed_users.
RetrievalPool build_pool(const EmbeddingTable& embeddings, const SequenceTable& sequences,
                         const SplitAssignment& splits, std::span<const UserId> users);

struct Neighbor {
  UserId user = 0;
  double score = 0.0;
  bool operator==(const Neighbor&) const = default;
};

struct SimilarUserResult {
  std::vector<Neighbor> neighbors;  // descending score, ties by ascending ID
  bool missing_query = false;       // query had no behavior embedding
};

// What a query needs: the embedding for dense measures, the item set for
// Jaccard. An absent embedding yields an empty, flagged result.
struct UserQuery {
  UserId user = 0;
  std::optional<std::vector<double>> embedding;
  std::vector<ItemId> items;
};

SimilarUserResult retrieve_topk(const RetrievalPool& pool, const UserQuery& query,
                                std::int64_t k, SimilarityMeasure measure,
                                std::optional<double> threshold = std::nullopt);

// Batch form; with threads > 1 queries are split across workers and merged
// back in input order, so the output does not depend on the thread count.
std::vector<SimilarUserResult> retrieve_all(const RetrievalPool& pool,
                                            std::span<const UserQuery> queries,
                                            std::int64_t k, SimilarityMeasure measure,
                                            std::optional<double> threshold, int threads = 1);

// Drops neighbors scoring below the threshold.
SimilarUserResult apply_threshold(const SimilarUserResult& result, double threshold);

using NeighborTable = std::map<UserId, SimilarUserResult>;

// One line per target user: "user_id<TAB>id:score,id:score,..." with scores
// printed to 6 decimal places.
void write_neighbor_file(const std::filesystem::path& path, const NeighborTable& table);
NeighborTable read_neighbor_file(const std::filesystem::path& path);

// Behavior embeddings for every user (pool members and queries alike).
struct EmbeddingTable {
  std::int64_t dim = 0;
  std::map<UserId, BehaviorEmbedding> rows;

  void save(TensorArchive& ar) const;
  static EmbeddingTable load(const TensorArchive& ar);
};

EmbeddingTable embed_users(const SequenceTable& sequences, const EncoderParams& encoder);

UserQuery make_query(UserId user, const EmbeddingTable& embeddings,
                     const SequenceTable& sequences);

// Embedding and neighbors for a history shorter than the user's full
// history prefix, keyed by (user, history length). Training samples taken
// at earlier positions of a sequence use these so they never see later items.
struct PrefixEntry {
  std::vector<double> embedding;
  SimilarUserResult neighbors;
};

using PrefixTable = std::map<std::pair<UserId, std::size_t>, PrefixEntry>;

// Covers history lengths 1 .. len - 2 for each listed user.
PrefixTable retrieve_prefixes(const SequenceTable& sequences, std::span<const UserId> users,
                              const RetrievalPool& pool, const EncoderParams& encoder,
                              std::int64_t k, SimilarityMeasure measure,
                              std::optional<double> threshold, int threads = 1);

void save_prefix_table(TensorArchive& ar, const PrefixTable& table, std::int64_t dim);
PrefixTable load_prefix_table(const TensorArchive& ar);

}  // namespace suin
