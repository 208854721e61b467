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

#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "suin/data.hpp"
#include "suin/errors.hpp"
#include "temp_dir.hpp"

using namespace suin;
using suin::testing::TempDir;

namespace {

SyntheticConfig small_config() {
  SyntheticConfig c;
  c.users = 200;
  c.items = 100;
  c.max_length = 20;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("seeded generator is reproducible") {
  const auto a = generate_synthetic(small_config());
  const auto b = generate_synthetic(small_config());
  CHECK(a.records == b.records);
  CHECK(a.user_cluster == b.user_cluster);
  auto other = small_config();
  other.seed = 4;
  CHECK(generate_synthetic(other).records != a.records);
}

TEST_CASE("generated sequences respect the configured shape") {
  const auto c = small_config();
  const auto corpus = generate_synthetic(c);
  const auto seqs = group_sequences(corpus.records);
  CHECK(static_cast<std::int64_t>(seqs.size()) == c.users);
  for (const auto& [u, items] : seqs) {
    CHECK(static_cast<std::int64_t>(items.size()) >= c.min_length);
    CHECK(static_cast<std::int64_t>(items.size()) <= c.max_length);
    CHECK(std::set<ItemId>(items.begin(), items.end()).size() == items.size());
    for (ItemId i : items) CHECK((i >= 1 && i <= c.items));
  }
}

TEST_CASE("very hot temperature makes item choice uniform") {
  SyntheticConfig c;
  c.users = 2000;
  c.items = 100;
  c.min_length = 5;
  c.max_length = 5;
  c.temperature = 1e9;
  c.seed = 8;
  const auto corpus = generate_synthetic(c);
  std::vector<double> counts(101, 0.0);
  for (const auto& r : corpus.records) counts[static_cast<std::size_t>(r.item)] += 1.0;
  const double expected = static_cast<double>(corpus.records.size()) / 100.0;
  double chi2 = 0.0;
  for (std::size_t i = 1; i <= 100; ++i) {
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  // Upper 1% point of chi-square with 99 degrees of freedom.
  CHECK(chi2 < 134.64);
}

TEST_CASE("cold temperature separates two clusters") {
  SyntheticConfig c;
  c.users = 400;
  c.items = 200;
  c.clusters = 2;
  c.min_length = 10;
  c.max_length = 10;
  c.temperature = 0.01;
  c.seed = 9;
  const auto corpus = generate_synthetic(c);
  std::array<std::map<ItemId, int>, 2> freq;
  for (const auto& r : corpus.records) {
    ++freq[static_cast<std::size_t>(corpus.user_cluster[static_cast<std::size_t>(r.user)])][r.item];
  }
  // Top decile of each cluster's item popularity.
  std::array<std::set<ItemId>, 2> top;
  for (int k = 0; k < 2; ++k) {
    std::vector<std::pair<int, ItemId>> ranked;
    for (auto [item, n] : freq[k]) ranked.push_back({-n, item});
    std::sort(ranked.begin(), ranked.end());
    for (std::size_t i = 0; i < 20 && i < ranked.size(); ++i) top[k].insert(ranked[i].second);
  }
  for (ItemId i : top[0]) CHECK(top[1].count(i) == 0);
}

TEST_CASE("group_sequences orders by time and rejects ties") {
  const std::vector<InteractionRecord> recs{{1, 5, 10}, {1, 6, 20}, {2, 7, 5}};
  const auto seqs = group_sequences(recs);
  CHECK(seqs.at(1) == std::vector<ItemId>{5, 6});
  CHECK(history_prefix(seqs.at(1)) == std::vector<ItemId>{5});
  const std::vector<InteractionRecord> tied{{1, 5, 10}, {1, 6, 10}};
  CHECK_THROWS_AS(group_sequences(tied), ConfigError);
}

TEST_CASE("user split sizes and determinism") {
  std::vector<UserId> users(10);
  for (int i = 0; i < 10; ++i) users[i] = i;
  const auto s = split_by_user(users, {0.8, 0.1, 0.1}, 1);
  CHECK(s.users(Split::kTrain).size() == 8);
  CHECK(s.users(Split::kVal).size() == 1);
  CHECK(s.users(Split::kTest).size() == 1);
  CHECK(split_by_user(users, {0.8, 0.1, 0.1}, 1).tags() == s.tags());
  CHECK_THROWS_AS(split_by_user(users, {0.8, 0.3, 0.1}, 1), ConfigError);
  const std::vector<UserId> dup{1, 1, 2};
  CHECK_THROWS_AS(split_by_user(dup, {0.8, 0.1, 0.1}, 1), ConfigError);
}

TEST_CASE("last_item samples hold out the final interaction") {
  const SequenceTable seqs{{1, {10, 11, 12}}, {2, {13}}};
  const std::vector<UserId> users{1, 2};
  const auto set = make_samples(seqs, users, SampleMode::kLastItem, 50, 1, 7);
  CHECK(set.skipped_users == 1);
  REQUIRE(set.samples.size() == 2);
  CHECK(set.samples[0].target == 12);
  CHECK(set.samples[0].label == 1.0);
  CHECK(set.samples[0].history_len == 2);
  CHECK(set.samples[1].label == 0.0);
  CHECK(set.samples[1].target != 12);
}

TEST_CASE("negatives avoid the positive and the history") {
  SyntheticConfig c = small_config();
  const auto corpus = generate_synthetic(c);
  const auto seqs = group_sequences(corpus.records);
  std::vector<UserId> users;
  for (const auto& [u, _] : seqs) users.push_back(u);
  for (auto mode : {SampleMode::kLastItem, SampleMode::kAllPositions}) {
    const auto set = make_samples(seqs, users, mode, c.items, 1, 11);
    std::size_t pos = 0, neg = 0;
    for (const auto& s : set.samples) {
      const auto& seq = seqs.at(s.user);
      const std::vector<ItemId> history(seq.begin(), seq.begin() + s.history_len);
      // The held-out event is never inside its own history.
      CHECK(std::find(history.begin(), history.end(), seq[s.history_len]) == history.end());
      if (s.label == 1.0) {
        ++pos;
        CHECK(s.target == seq[s.history_len]);
      } else {
        ++neg;
        CHECK(s.target != seq[s.history_len]);
        CHECK(std::find(history.begin(), history.end(), s.target) == history.end());
      }
    }
    CHECK(pos == neg);
  }
}

TEST_CASE("interaction CSV round trip and strict reading") {
  TempDir dir("data_csv");
  const std::vector<InteractionRecord> recs{{0, 3, 100}, {0, 1, 200}, {1, 2, 50}};
  write_interactions_csv(dir / "i.csv", recs);
  CHECK(read_interactions_csv(dir / "i.csv") == recs);

  suin::testing::spit(dir / "bad.csv", "user_id,item_id,timestamp\n1,2,30\n0,1,10\n");
  CHECK_THROWS_AS(read_interactions_csv(dir / "bad.csv"), IoError);
  suin::testing::spit(dir / "nohead.csv", "1,2,30\n");
  CHECK_THROWS_AS(read_interactions_csv(dir / "nohead.csv"), IoError);
  CHECK_THROWS_AS(read_interactions_csv(dir / "missing.csv"), IoError);
}

TEST_CASE("ingest remaps IDs and drops repeats") {
  TempDir dir("data_ingest");
  suin::testing::spit(dir / "raw.csv",
                      "user_id,item_id,timestamp\n900,77,5\n900,78,5\n12,77,1\n900,77,9\n");
  const auto r = ingest_interactions_csv(dir / "raw.csv");
  CHECK(r.num_users == 2);
  CHECK(r.num_items == 2);
  CHECK(r.dropped_repeats == 1);
  const auto seqs = group_sequences(r.records);
  CHECK(seqs.size() == 2);
}

TEST_CASE("splits, clusters and manifest files round trip") {
  TempDir dir("data_files");
  std::vector<UserId> users{0, 1, 2, 3, 4};
  const auto s = split_by_user(users, {0.6, 0.2, 0.2}, 2);
  write_splits_csv(dir / "s.csv", s);
  CHECK(read_splits_csv(dir / "s.csv").tags() == s.tags());
  const std::vector<int> clusters{0, 1, 1, 0};
  write_clusters_csv(dir / "c.csv", clusters);
  CHECK(read_clusters_csv(dir / "c.csv") == clusters);
  Manifest m;
  m.set("seed", 7);
  m.set("stage", "train");
  m.write(dir / "m.manifest");
  const auto back = Manifest::read(dir / "m.manifest");
  CHECK(back.get_int("seed") == 7);
  CHECK(back.get("stage") == "train");
  CHECK_THROWS_AS(back.get("nope"), IoError);
}
