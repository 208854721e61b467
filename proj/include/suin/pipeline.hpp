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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "suin/config.hpp"
#include "suin/data.hpp"
#include "suin/encoder.hpp"
#include "suin/metrics.hpp"
#include "suin/model.hpp"
#include "suin/retrieval.hpp"

namespace suin {

// Seed streams derived from the run seed.
namespace streams {
inline constexpr std::uint64_t kData = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kEncoder = 3;
inline constexpr std::uint64_t kTrainSamples = 4;
inline constexpr std::uint64_t kValSamples = 5;
inline constexpr std::uint64_t kTestSamples = 6;
inline constexpr std::uint64_t kModelInit = 7;
inline constexpr std::uint64_t kTraining = 8;
inline constexpr std::uint64_t kRandomUsers = 9;
}  // namespace streams

struct Corpus {
  std::vector<InteractionRecord> records;
  SequenceTable sequences;
  std::int64_t num_items = 0;
  std::vector<int> user_cluster;  // synthetic only, indexed by user ID
  std::vector<int> item_cluster;  // synthetic only, indexed by item ID
};

Corpus make_corpus(const RunConfig& config);

// Everything upstream of retrieval, held in memory.
struct PreparedData {
  Corpus corpus;
  SplitAssignment splits;
  EncoderParams encoder;
  PretrainLog pretrain_log;
  EmbeddingTable embeddings;
  RetrievalPool pool;
  SampleSet train, val, test;
};

PreparedData prepare_data(const RunConfig& config, int threads = 1);
PreparedData prepare_data(const RunConfig& config, Corpus corpus, int threads = 1);

SampleSet make_split_samples(const RunConfig& config, const SequenceTable& sequences,
                             const SplitAssignment& splits, Split split,
                             std::int64_t num_items);

struct RetrievalArtifacts {
  RetrievalConfig settings;
  NeighborTable neighbors;  // every user with a non-empty history prefix
  PrefixTable prefixes;     // shorter prefixes of users sampled in all_positions mode
};

// Users whose samples include shorter history prefixes, sorted.
std::vector<UserId> prefix_users(const RunConfig& config, const SplitAssignment& splits);

RetrievalArtifacts run_retrieval(const SequenceTable& sequences,
                                 const RetrievalPool& pool, const EmbeddingTable& embeddings,
                                 const EncoderParams& encoder, const RetrievalConfig& settings,
                                 std::span<const UserId> prefix_users, int threads = 1);
RetrievalArtifacts run_retrieval(const PreparedData& data, const RunConfig& config,
                                 int threads = 1);

// Random-user candidates are the pool members.
InputSources make_input_sources(const SequenceTable& sequences, const RetrievalPool& pool,
                                const EmbeddingTable& embeddings,
                                const RetrievalArtifacts& retrieval);

struct SettingResult {
  TrainResult train;
  EvalReport test;
};

// Builds inputs for config.model, trains on the train split with validation
// early stopping and evaluates the test split.
SettingResult run_setting(const PreparedData& data, const RetrievalArtifacts& retrieval,
                          const RunConfig& config, int threads = 1);

// ---------------------------------------------------------------------------
// File-based stages. Each reads its upstream artifacts from config.out_dir,
// checks their manifests, writes its outputs plus "<stage>.manifest", and
// leaves a resolved copy of the config next to them.

struct StageOptions {
  int threads = 1;
  Grouping grouping = Grouping::kNone;      // evaluate
  Split eval_split = Split::kTest;          // evaluate
  std::optional<UserId> inspect_user;       // inspect
  std::string sweep = "variants";           // ablate
  std::function<void(const std::string&)> log;  // progress lines, may be empty
};

namespace artifacts {
inline constexpr const char* kInteractions = "interactions.csv";
inline constexpr const char* kClusters = "clusters.csv";
inline constexpr const char* kSplits = "splits.csv";
inline constexpr const char* kEncoder = "encoder.bin";
inline constexpr const char* kPretrainLog = "pretrain_log.csv";
inline constexpr const char* kPool = "pool.bin";
inline constexpr const char* kEmbeddings = "embeddings.bin";
inline constexpr const char* kNeighbors = "neighbors.tsv";
inline constexpr const char* kPrefixes = "prefixes.bin";
inline constexpr const char* kModel = "model.bin";
inline constexpr const char* kTrainLog = "train_log.csv";
inline constexpr const char* kResolvedConfig = "config.resolved.json";
}  // namespace artifacts

void stage_generate(const RunConfig& config, const StageOptions& options);
void stage_split(const RunConfig& config, const StageOptions& options);
void stage_pretrain(const RunConfig& config, const StageOptions& options);
void stage_build_pool(const RunConfig& config, const StageOptions& options);
void stage_retrieve(const RunConfig& config, const StageOptions& options);
void stage_train(const RunConfig& config, const StageOptions& options);
// Writes eval_<split>_<grouping>.csv.
void stage_evaluate(const RunConfig& config, const StageOptions& options);
// Writes inspect_<user>.txt and attention_<user>.csv.
void stage_inspect(const RunConfig& config, const StageOptions& options);
// Writes ablation_<sweep>.csv and ablation_<sweep>_runs.csv.
void stage_ablate(const RunConfig& config, const StageOptions& options);
// generate through evaluate.
void stage_run(const RunConfig& config, const StageOptions& options);

// ---------------------------------------------------------------------------
// Ablation tables

struct SweepSetting {
  std::string name;
  RunConfig config;  // seed is replaced per run
};

std::vector<std::string> sweep_names();
// Settings of a sweep; the first one is the baseline for deltas.
std::vector<SweepSetting> sweep_settings(const RunConfig& base, const std::string& sweep);

struct SweepRun {
  std::string setting;
  std::uint64_t seed = 0;
  bool ok = false;
  double auc = 0.0;
  double logloss = 0.0;
  std::string error;
};

struct SweepRow {
  std::string setting;
  std::size_t runs_ok = 0;
  double auc_mean = 0.0, auc_std = 0.0;
  double logloss_mean = 0.0, logloss_std = 0.0;
  double delta_auc = 0.0;  // mean AUC minus the baseline's mean AUC
  bool failed = false;
};

std::vector<SweepRun> run_sweep(const RunConfig& base, const std::string& sweep, int threads,
                                const std::function<void(const std::string&)>& log = {});
std::vector<SweepRow> summarize_sweep(const std::vector<SweepRun>& runs,
                                      const std::vector<std::string>& order);
std::string sweep_table_csv(const std::vector<SweepRow>& rows);
std::string sweep_runs_csv(const std::vector<SweepRun>& runs);

}  // namespace suin
