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
#include <span>
#include <string>
#include <vector>

#include "suin/data.hpp"
#include "suin/retrieval.hpp"

namespace suin {

enum class PositionScheme {
  kUtpe,  // per-slot offsets: i-th latest item of slot k gets k*L + i - 1
  kTpe,   // one target-aware count over the concatenated non-pad items
  kStpe,  // every slot restarts at L - 1 .. 0
  kNone,  // all zero
};

std::string to_string(PositionScheme s);
PositionScheme parse_position_scheme(const std::string& text);

struct BehaviorSequence {
  UserId user = 0;
  std::vector<ItemId> items;  // oldest first, unpadded
};

// Most recent `length` items, left-padded with kPadItem.
std::vector<ItemId> padded_window(std::span<const ItemId> items, std::size_t length);

// (K + 1) slots of width L laid out slot-major as [k = K, ..., k = 1, k = 0]:
// the least similar neighbor first and the target user last, so the most
// similar neighbor sits next to the target.
struct AugmentedSequence {
  std::size_t seq_len = 0;  // L
  std::size_t top_k = 0;    // K
  std::vector<ItemId> items;
  std::vector<std::int64_t> position_ids;
  std::vector<int> slot;     // source slot k per position
  std::vector<bool> mask;    // true iff the item is not padding
  std::vector<UserId> slot_users;    // indexed by k; -1 for an empty slot
  std::vector<bool> slot_present;    // indexed by k
  std::vector<double> slot_scores;   // indexed by k; diagnostics only, 0 for k = 0
  std::vector<std::size_t> slot_lengths;  // non-pad count, indexed by k

  std::size_t size() const { return items.size(); }
  // First flat index of slot k.
  std::size_t slot_offset(std::size_t k) const { return (top_k - k) * seq_len; }
  std::size_t nonpad_count() const;
};

// Throws ConfigError for L <= 0 or K < 0 and ConsistencyError when the
// neighbor list is not sorted by descending score or a neighbor's sequence
// is missing from `histories`. Position IDs are assigned with UTPE.
AugmentedSequence build_augmented(const BehaviorSequence& target,
                                  const SimilarUserResult& neighbors,
                                  const SequenceTable& histories, std::int64_t seq_len,
                                  std::int64_t top_k);

AugmentedSequence assign_position_ids(const AugmentedSequence& aug, PositionScheme scheme);

// Position IDs any scheme can emit for the given L and K.
std::size_t position_table_rows(std::size_t seq_len, std::size_t top_k);

// Slot-by-slot text layout: items, position IDs and mask for each user.
std::string render_augmented(const AugmentedSequence& aug);

}  // namespace suin
