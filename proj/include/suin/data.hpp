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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace suin {

using UserId = std::int64_t;
using ItemId = std::int64_t;

// Item 0 is reserved for padding; real items are numbered from 1.
inline constexpr ItemId kPadItem = 0;

struct InteractionRecord {
  UserId user = 0;
  ItemId item = 0;
  std::int64_t timestamp = 0;

  bool operator==(const InteractionRecord&) const = default;
};

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

std::string to_string(Split split);
Split parse_split(const std::string& text);

// Ordered per-user item histories, oldest first.
using SequenceTable = std::map<UserId, std::vector<ItemId>>;

// Groups records by user, checking timestamps are strictly increasing.
SequenceTable group_sequences(std::span<const InteractionRecord> records);

// Everything except the final interaction, which is held out as the
// last-item target. Behavior embeddings and augmentation read this prefix.
std::vector<ItemId> history_prefix(const std::vector<ItemId>& sequence);

// ---------------------------------------------------------------------------
// Synthetic corpus with planted cluster structure

struct SyntheticConfig {
  std::int64_t users = 2000;
  std::int64_t items = 500;
  std::int64_t clusters = 4;
  std::int64_t latent_dim = 8;
  std::int64_t min_length = 2;
  std::int64_t max_length = 50;
  double length_exponent = 1.5;  // P(n) proportional to n^-exponent
  double temperature = 1.0;      // softmax temperature for item choice
  double cluster_separation = 2.0;
  double user_noise = 0.6;
  double item_noise = 0.6;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<InteractionRecord> records;  // sorted by (user, timestamp)
  std::vector<int> user_cluster;           // indexed by user ID
  std::vector<int> item_cluster;           // indexed by item ID; entry 0 is -1
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;  // real items, IDs 1..num_items
};

// Users and items get latent vectors around orthogonal cluster centers; each
// user's sequence is a draw without replacement from the softmax of latent
// dot products, with a power-law length. Each user is generated from its own
// derived seed, so shards are independent.
SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

// ---------------------------------------------------------------------------
// Splitting

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

class SplitAssignment {
 public:
  void assign(UserId user, Split split);
  Split of(UserId user) const;
  bool contains(UserId user) const { return tags_.count(user) != 0; }
  bool is_train(UserId user) const;
  // Sorted ascending.
  const std::vector<UserId>& users(Split split) const;
  std::size_t size() const { return tags_.size(); }
  const std::map<UserId, Split>& tags() const { return tags_; }

 private:
  std::map<UserId, Split> tags_;
  std::array<std::vector<UserId>, 3> lists_;
};

// Partitions users (not interactions). Validation and test sizes are the
// rounded shares; training takes the remainder.
SplitAssignment split_by_user(std::span<const UserId> users, SplitRatios ratios,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Samples

enum class SampleMode { kLastItem, kAllPositions };

std::string to_string(SampleMode mode);
SampleMode parse_sample_mode(const std::string& text);

// History is the first `history_len` items of the user's sequence.
struct TrainingSample {
  UserId user = 0;
  ItemId target = 0;
  double label = 0.0;
  std::size_t history_len = 0;
};

struct SampleSet {
  std::vector<TrainingSample> samples;
  std::size_t skipped_users = 0;  // fewer than two interactions
};

// One positive per held-out position plus `negatives_per_positive` negatives
// drawn uniformly from items that are neither the positive nor in the
// sample's history.
SampleSet make_samples(const SequenceTable& sequences, std::span<const UserId> users,
                       SampleMode mode, std::int64_t num_items,
                       int negatives_per_positive, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Persistence

void write_interactions_csv(const std::filesystem::path& path,
                            std::span<const InteractionRecord> records);
// Strict reader for the interchange format: header, dense IDs, rows sorted
// by (user, timestamp).
std::vector<InteractionRecord> read_interactions_csv(const std::filesystem::path& path);

struct IngestResult {
  std::vector<InteractionRecord> records;
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;
  std::size_t dropped_repeats = 0;
};

// Lenient adapter for external logs in the same three-column layout: arbitrary
// integer IDs are remapped to dense ones, rows are sorted, repeated items per
// user keep their first occurrence and tied timestamps are nudged apart.
IngestResult ingest_interactions_csv(const std::filesystem::path& path);

void write_clusters_csv(const std::filesystem::path& path,
                        const std::vector<int>& user_cluster);
std::vector<int> read_clusters_csv(const std::filesystem::path& path);

void write_splits_csv(const std::filesystem::path& path, const SplitAssignment& splits);
SplitAssignment read_splits_csv(const std::filesystem::path& path);

// Plain-text key=value file, keys sorted on write.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace suin
