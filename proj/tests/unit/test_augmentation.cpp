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

#include "doctest.h"
#include "oracles.hpp"
#include "suin/augmentation.hpp"
#include "suin/errors.hpp"
#include "suin/random.hpp"

using namespace suin;

namespace {

using Ids = std::vector<std::int64_t>;

Ids slot_ids(const AugmentedSequence& aug, std::size_t k) {
  const auto off = aug.slot_offset(k);
  return Ids(aug.position_ids.begin() + off, aug.position_ids.begin() + off + aug.seq_len);
}

std::vector<ItemId> slot_items(const AugmentedSequence& aug, std::size_t k) {
  const auto off = aug.slot_offset(k);
  return {aug.items.begin() + off, aug.items.begin() + off + aug.seq_len};
}

// Target with four items, neighbors with three and two, L = 5.
struct Scenario {
  BehaviorSequence target{1, {11, 12, 13, 14}};
  SimilarUserResult neighbors{{{2, 0.9}, {3, 0.7}}, false};
  SequenceTable histories{{2, {21, 22, 23}}, {3, {31, 32}}};
};

}  // namespace

TEST_CASE("padded window keeps the most recent items") {
  const std::vector<ItemId> seq{1, 2, 3, 4, 5};
  CHECK(padded_window(seq, 3) == std::vector<ItemId>{3, 4, 5});
  CHECK(padded_window(std::span(seq).first(2), 4) == std::vector<ItemId>{0, 0, 1, 2});
}

TEST_CASE("slot layout puts the target last and pads slot heads") {
  Scenario s;
  const auto aug = build_augmented(s.target, s.neighbors, s.histories, 5, 2);
  REQUIRE(aug.size() == 15);
  CHECK(slot_items(aug, 2) == std::vector<ItemId>{0, 0, 0, 31, 32});
  CHECK(slot_items(aug, 1) == std::vector<ItemId>{0, 0, 21, 22, 23});
  CHECK(slot_items(aug, 0) == std::vector<ItemId>{0, 11, 12, 13, 14});
  CHECK(aug.slot_offset(2) == 0);
  CHECK(aug.slot_offset(0) == 10);
  for (std::size_t j = 0; j < aug.size(); ++j) CHECK(aug.mask[j] == (aug.items[j] != kPadItem));
  CHECK(aug.slot_users == std::vector<UserId>{1, 2, 3});
  CHECK(aug.nonpad_count() == 9);
}

TEST_CASE("UTPE examples") {
  Scenario s;
  const auto aug = build_augmented(s.target, s.neighbors, s.histories, 5, 2);
  // Latest target behavior gets 0; slot k counts kL + L - 1 down to kL.
  CHECK(aug.position_ids.back() == 0);
  CHECK(slot_ids(aug, 1) == Ids{9, 8, 7, 6, 5});
  CHECK(slot_ids(aug, 2).back() == 10);
  CHECK(aug.position_ids == testing::utpe_oracle(5, 2));
  CHECK(position_table_rows(5, 2) == 15);
}

TEST_CASE("other position schemes") {
  Scenario s;
  const auto aug = build_augmented(s.target, s.neighbors, s.histories, 5, 2);
  const auto stpe = assign_position_ids(aug, PositionScheme::kStpe);
  for (std::size_t k = 0; k <= 2; ++k) CHECK(slot_ids(stpe, k) == Ids{4, 3, 2, 1, 0});
  const auto none = assign_position_ids(aug, PositionScheme::kNone);
  for (auto id : none.position_ids) CHECK(id == 0);
  // TPE counts back over non-pad items only: target 0..3, then 4..6, then 7..8.
  const auto tpe = assign_position_ids(aug, PositionScheme::kTpe);
  CHECK(slot_ids(tpe, 0) == Ids{0, 3, 2, 1, 0});
  CHECK(slot_ids(tpe, 1) == Ids{0, 0, 6, 5, 4});
  CHECK(slot_ids(tpe, 2) == Ids{0, 0, 0, 8, 7});
  CHECK(parse_position_scheme(to_string(PositionScheme::kTpe)) == PositionScheme::kTpe);
  CHECK_THROWS_AS(parse_position_scheme("rope"), ConfigError);
}

TEST_CASE("K = 0 is the classic padded sequence") {
  Scenario s;
  const auto aug = build_augmented(s.target, s.neighbors, s.histories, 5, 0);
  CHECK(aug.items == padded_window(s.target.items, 5));
  CHECK(aug.position_ids == Ids{4, 3, 2, 1, 0});
}

TEST_CASE("missing neighbors leave fully padded slots") {
  Scenario s;
  s.neighbors.neighbors.resize(1);
  const auto aug = build_augmented(s.target, s.neighbors, s.histories, 5, 2);
  CHECK(slot_items(aug, 2) == std::vector<ItemId>(5, kPadItem));
  CHECK_FALSE(aug.slot_present[2]);
  CHECK(aug.slot_users[2] == -1);
  for (std::size_t j = 0; j < 5; ++j) CHECK_FALSE(aug.mask[j]);
}

TEST_CASE("augmentation errors") {
  Scenario s;
  CHECK_THROWS_AS(build_augmented(s.target, s.neighbors, s.histories, 0, 2), ConfigError);
  CHECK_THROWS_AS(build_augmented(s.target, s.neighbors, s.histories, 5, -1), ConfigError);
  SimilarUserResult unsorted{{{3, 0.1}, {2, 0.9}}, false};
  CHECK_THROWS_AS(build_augmented(s.target, unsorted, s.histories, 5, 2), ConsistencyError);
  SimilarUserResult unknown{{{99, 0.9}}, false};
  CHECK_THROWS_AS(build_augmented(s.target, unknown, s.histories, 5, 2), ConsistencyError);
}

TEST_CASE("UTPE properties hold on random layouts") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t L = 1 + rng.below(8);
    const std::size_t K = rng.below(5);
    BehaviorSequence target{0, {}};
    for (std::size_t i = 0, n = 1 + rng.below(12); i < n; ++i) target.items.push_back(100 + i);
    SimilarUserResult nbs;
    SequenceTable hist;
    const std::size_t found = rng.below(K + 1);
    for (std::size_t k = 1; k <= found; ++k) {
      nbs.neighbors.push_back({static_cast<UserId>(k), 1.0 - 0.1 * k});
      std::vector<ItemId> items;
      for (std::size_t i = 0, n = 1 + rng.below(12); i < n; ++i) items.push_back(1 + i);
      hist[static_cast<UserId>(k)] = items;
    }
    const auto aug = build_augmented(target, nbs, hist, L, K);
    for (std::size_t j = 0; j < aug.size(); ++j) {
      // Slot of each ID is recoverable from the ID alone.
      CHECK(aug.position_ids[j] / static_cast<std::int64_t>(L) == aug.slot[j]);
    }
  }
}

TEST_CASE("TPE loses user identity when lengths differ") {
  const BehaviorSequence target{0, {5}};
  const SimilarUserResult nbs{{{1, 0.9}}, false};
  const SequenceTable hist{{1, {1, 2, 3}}};
  const auto tpe = assign_position_ids(build_augmented(target, nbs, hist, 3, 1),
                                       PositionScheme::kTpe);
  bool violated = false;
  for (std::size_t j = 0; j < tpe.size(); ++j) {
    if (tpe.mask[j] && tpe.position_ids[j] / 3 != tpe.slot[j]) violated = true;
  }
  CHECK(violated);
}

TEST_CASE("render shows every slot") {
  Scenario s;
  const auto text = render_augmented(build_augmented(s.target, s.neighbors, s.histories, 5, 2));
  CHECK(text.find("slot k=2 neighbor user 3 similarity 0.700000") != std::string::npos);
  CHECK(text.find("slot k=0 target user 1") != std::string::npos);
}
