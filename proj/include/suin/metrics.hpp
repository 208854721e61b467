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
#include <span>
#include <string>
#include <vector>

namespace suin {

// Rank-statistic AUC; tied scores share their average rank, so a tied
// positive/negative pair counts 0.5. Throws UndefinedMetricError when the
// labels are all one class.
double auc(std::span<const double> scores, std::span<const double> labels);

// Mean binary cross-entropy with predictions clamped to [1e-12, 1 - 1e-12].
double logloss(std::span<const double> predictions, std::span<const double> labels);

enum class Grouping { kNone, kSeqLength, kAugRatio };

std::string to_string(Grouping g);
Grouping parse_grouping(const std::string& text);

// "1", "2-3", "4-7", ... "32+" by history length.
std::string seq_length_bucket(std::size_t history_len);
// [1,2) [2,3) [3,5) [5,9) [9,inf) by augmented / original non-pad length.
std::string aug_ratio_bucket(double ratio);

struct GroupMetrics {
  std::string group;
  std::size_t count = 0;
  double auc = 0.0;  // NaN when the group holds a single class
  double logloss = 0.0;
};

struct EvalReport {
  Grouping grouping = Grouping::kNone;
  std::size_t count = 0;
  double auc = 0.0;
  double logloss = 0.0;
  std::vector<GroupMetrics> groups;  // in bucket order

  // "group,count,auc,logloss" with an "all" row first; values at 6 decimals.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

// keys[i] is the group of sample i; ignored for Grouping::kNone.
EvalReport make_report(std::span<const double> predictions, std::span<const double> labels,
                       Grouping grouping, std::span<const std::string> keys);

}  // namespace suin
