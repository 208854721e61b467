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

#include "suin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "suin/errors.hpp"
#include "suin/tensor.hpp"

namespace suin {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DimensionError("got " + std::to_string(a) + " predictions for " + std::to_string(b) +
                         " labels");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const double> labels) {
  check_lengths(scores.size(), labels.size());
  const std::size_t n = scores.size();
  double positives = 0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw NumericDomainError("labels must be 0 or 1");
    positives += y;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetricError("AUC is undefined when every label is " +
                               std::string(positives == 0 ? "0" : "1"));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1.0) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  return (positive_rank_sum - positives * (positives + 1) / 2) / (positives * negatives);
}

double logloss(std::span<const double> predictions, std::span<const double> labels) {
  check_lengths(predictions.size(), labels.size());
  if (predictions.empty()) throw UndefinedMetricError("logloss of an empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p = std::clamp(predictions[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    sum -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(predictions.size());
}

std::string to_string(Grouping g) {
  switch (g) {
    case Grouping::kNone: return "none";
    case Grouping::kSeqLength: return "seq_length";
    case Grouping::kAugRatio: return "aug_ratio";
  }
  return "?";
}

Grouping parse_grouping(const std::string& text) {
  if (text == "none") return Grouping::kNone;
  if (text == "seq_length") return Grouping::kSeqLength;
  if (text == "aug_ratio") return Grouping::kAugRatio;
  throw ConfigError("unknown grouping '" + text + "'");
}

std::string seq_length_bucket(std::size_t history_len) {
  if (history_len >= 32) return "32+";
  if (history_len <= 1) return "1";
  std::size_t lo = 1;
  while (lo * 2 <= history_len) lo *= 2;
  return std::to_string(lo) + "-" + std::to_string(2 * lo - 1);
}

std::string aug_ratio_bucket(double ratio) {
  if (ratio < 2) return "[1,2)";
  if (ratio < 3) return "[2,3)";
  if (ratio < 5) return "[3,5)";
  if (ratio < 9) return "[5,9)";
  return "[9,inf)";
}

namespace {

// Sort key that keeps buckets in their natural numeric order.
double bucket_order(const std::string& key) {
  std::size_t start = key.find_first_of("0123456789");
  if (start == std::string::npos) return std::numeric_limits<double>::infinity();
  return std::stod(key.substr(start));
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

EvalReport make_report(std::span<const double> predictions, std::span<const double> labels,
                       Grouping grouping, std::span<const std::string> keys) {
  check_lengths(predictions.size(), labels.size());
  EvalReport r;
  r.grouping = grouping;
  r.count = predictions.size();
  r.auc = auc(predictions, labels);
  r.logloss = logloss(predictions, labels);
  if (grouping == Grouping::kNone) return r;
  check_lengths(keys.size(), labels.size());

  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < keys.size(); ++i) members[keys[i]].push_back(i);
  for (const auto& [key, idx] : members) {
    std::vector<double> p, y;
    for (std::size_t i : idx) {
      p.push_back(predictions[i]);
      y.push_back(labels[i]);
    }
    GroupMetrics g;
    g.group = key;
    g.count = idx.size();
    try {
      g.auc = auc(p, y);
    } catch (const UndefinedMetricError&) {
      g.auc = std::numeric_limits<double>::quiet_NaN();
    }
    g.logloss = logloss(p, y);
    r.groups.push_back(std::move(g));
  }
  std::stable_sort(r.groups.begin(), r.groups.end(), [](const auto& a, const auto& b) {
    return bucket_order(a.group) < bucket_order(b.group);
  });
  return r;
}

std::string EvalReport::to_csv() const {
  std::string out = "group,count,auc,logloss\n";
  out += "all," + std::to_string(count) + "," + fmt(auc) + "," + fmt(logloss) + "\n";
  for (const auto& g : groups) {
    out += "\"" + g.group + "\"," + std::to_string(g.count) + "," + fmt(g.auc) + "," +
           fmt(g.logloss) + "\n";
  }
  return out;
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << to_csv();
}

}  // namespace suin
