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
#include <string>
#include <vector>

#include "suin/data.hpp"
#include "suin/encoder.hpp"
#include "suin/model.hpp"
#include "suin/retrieval.hpp"

namespace suin {

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "csv"
  std::string interactions;          // CSV path when source == "csv"
  SyntheticConfig synthetic;
};

struct SampleConfig {
  SampleMode train_mode = SampleMode::kLastItem;
  SampleMode eval_mode = SampleMode::kLastItem;
  int negatives_per_positive = 1;
};

struct RetrievalConfig {
  std::int64_t top_k = 6;
  SimilarityMeasure measure = SimilarityMeasure::kCosine;
  std::optional<double> threshold;
};

struct AblationConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::int64_t> topk{0, 1, 2, 3, 4, 5, 6};
  std::vector<double> thresholds{0.0, 0.5, 0.8, 0.9};
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "suin_out";
  DataConfig data;
  SplitRatios split;
  SampleConfig samples;
  EncoderConfig encoder;
  RetrievalConfig retrieval;
  ModelConfig model;  // behavior_dim always follows encoder.dim
  TrainConfig train;
  AblationConfig ablate;

  void validate() const;
  // Seed for one pipeline stream, derived from the run seed.
  std::uint64_t stream_seed(std::uint64_t stream) const;
};

// Throws ConfigError on malformed JSON, wrong types and unknown keys at any
// level. Absent keys keep their defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Every key with its effective value, pretty-printed in a fixed key order.
std::string dump_run_config(const RunConfig& config);

}  // namespace suin
