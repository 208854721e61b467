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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suin/attention.hpp"
#include "suin/augmentation.hpp"
#include "suin/data.hpp"
#include "suin/encoder.hpp"
#include "suin/metrics.hpp"
#include "suin/retrieval.hpp"

namespace suin {

enum class PoolingMode { kSuin, kAvg, kTargetAttention };

enum class Variant {
  kFull,
  kNoUta,         // item-only target attention over the augmented sequence
  kNoUtaKeepBe,   // kNoUta plus adapted behavior embeddings as MLP features
  kRandomUsers,   // neighbors replaced by random training users
  kNoSuNoUta,     // K = 0 with item-only target attention
  kNoPos,         // position tables zero and frozen
};

std::string to_string(PoolingMode m);
PoolingMode parse_pooling(const std::string& text);
std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

struct ModelConfig {
  std::int64_t embedding_dim = 16;  // d, also used for d_item
  std::int64_t behavior_dim = 16;   // d', must match the encoder
  std::int64_t seq_len = 10;        // L
  std::int64_t top_k = 2;           // K
  std::vector<std::int64_t> mlp_hidden{200, 80};
  std::vector<std::int64_t> adapter_hidden{32};
  double adapter_dropout = 0.0;
  PoolingMode pooling = PoolingMode::kSuin;
  Variant variant = Variant::kFull;
  PositionScheme scheme = PositionScheme::kUtpe;
  bool literal_pairing = false;

  void validate() const;
  // Pooling and K after the variant's overrides.
  PoolingMode effective_pooling() const;
  std::int64_t effective_top_k() const;
  bool uses_behavior_embeddings() const;
};

// Everything the forward pass needs for one labeled sample.
struct SampleInput {
  UserId user = 0;
  ItemId target = 0;
  double label = 0.0;
  std::size_t history_len = 0;
  AugmentedSequence aug;            // position IDs per the configured scheme
  std::vector<double> behaviors;    // [(K + 1) x d'] frozen, row k = slot k
};

// Read-only lookups used to assemble inputs; retrieval has already run.
// Samples whose history is the user's full history prefix take their
// embedding and neighbors from `embeddings` / `neighbors`; shorter histories
// (earlier positions of a training sequence) come from `prefixes`, so no
// sample sees items past its own target.
struct InputSources {
  const SequenceTable* sequences = nullptr;
  const EmbeddingTable* embeddings = nullptr;  // history-prefix embeddings, every user
  const NeighborTable* neighbors = nullptr;
  const PrefixTable* prefixes = nullptr;       // optional
  std::int64_t retrieved_top_k = 0;            // neighbors per list
  std::vector<UserId> random_candidates;       // training users, for random_users
};

std::vector<SampleInput> build_inputs(std::span<const TrainingSample> samples,
                                      const InputSources& sources, const ModelConfig& config,
                                      std::uint64_t seed, int threads = 1);

struct ModelParams {
  ModelConfig config;
  std::int64_t num_items = 0;
  Tensor item_table;  // [(num_items + 1) x d]
  AdapterParams adapter;
  UserAwareAttentionParams attention;
  std::vector<Linear> mlp;  // hidden layers then the [h x 1] output

  static ModelParams init(std::int64_t num_items, const ModelConfig& config,
                          std::uint64_t seed);
  std::size_t mlp_input_width() const;
  ParamList parameters() const;
  ModelParams clone() const;
  void save(TensorArchive& ar) const;
  static ModelParams load(const TensorArchive& ar);
};

struct ForwardDetail {
  Tensor probability;          // scalar
  Tensor logit;                // scalar
  AttentionOutput attention;   // undefined tensors for avg pooling
};

// Probabilities [B] for a batch. Dropout is active iff dropout_rng is set.
Tensor forward_batch(const ModelParams& params, std::span<const SampleInput* const> batch,
                     Rng* dropout_rng = nullptr);
Tensor forward_batch(const ModelParams& params, std::span<const SampleInput> batch,
                     Rng* dropout_rng = nullptr);
ForwardDetail forward_detail(const ModelParams& params, const SampleInput& sample);

// Evaluation-mode predictions, computed in chunks across threads and merged
// in input order.
std::vector<double> predict(const ModelParams& params, std::span<const SampleInput> inputs,
                            int threads = 1, std::size_t batch_size = 256);

struct TrainConfig {
  double lr = 0.001;
  std::int64_t batch_size = 128;
  std::int64_t max_epochs = 5;
  std::int64_t patience = 1;
  std::uint64_t seed = 1;
  int threads = 1;  // evaluation only; training is single-threaded
};

// Stops after `patience` consecutive epochs without a strictly better score.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::int64_t patience) : patience_(patience) {}
  // Returns true when training should stop after this epoch.
  bool update(double score);
  bool improved() const { return improved_; }
  std::int64_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any update
  double best_score() const { return best_; }

 private:
  std::int64_t patience_;
  std::int64_t epoch_ = 0;
  std::int64_t best_epoch_ = 0;
  std::int64_t bad_epochs_ = 0;
  double best_ = 0.0;
  bool improved_ = false;
};

struct TrainLogRow {
  std::int64_t epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
  double val_logloss = 0.0;
  double wall_time_s = 0.0;
};

struct TrainResult {
  ModelParams params;  // best validation AUC
  std::vector<TrainLogRow> log;
  std::int64_t best_epoch = 0;
};

TrainResult train_model(const ModelParams& init, std::span<const SampleInput> train,
                        std::span<const SampleInput> val, const TrainConfig& config);

// "epoch,train_loss,val_auc,val_logloss,wall_time_s"
std::string train_log_csv(std::span<const TrainLogRow> log, bool include_wall_time = true);

EvalReport evaluate(const ModelParams& params, std::span<const SampleInput> inputs,
                    Grouping grouping, int threads = 1);

// Group key of a sample under the given grouping.
std::string group_key(const SampleInput& input, Grouping grouping);

}  // namespace suin
