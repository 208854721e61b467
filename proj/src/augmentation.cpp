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

#include "suin/augmentation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "suin/errors.hpp"

namespace suin {

std::string to_string(PositionScheme s) {
  switch (s) {
    case PositionScheme::kUtpe: return "utpe";
    case PositionScheme::kTpe: return "tpe";
    case PositionScheme::kStpe: return "stpe";
    case PositionScheme::kNone: return "none";
  }
  return "?";
}

PositionScheme parse_position_scheme(const std::string& text) {
  if (text == "utpe") return PositionScheme::kUtpe;
  if (text == "tpe") return PositionScheme::kTpe;
  if (text == "stpe") return PositionScheme::kStpe;
  if (text == "none") return PositionScheme::kNone;
  throw ConfigError("unknown position scheme '" + text + "'");
}

std::vector<ItemId> padded_window(std::span<const ItemId> items, std::size_t length) {
  if (items.size() > length) items = items.subspan(items.size() - length);
  std::vector<ItemId> out(length - items.size(), kPadItem);
  out.insert(out.end(), items.begin(), items.end());
  return out;
}

std::size_t AugmentedSequence::nonpad_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

std::size_t position_table_rows(std::size_t seq_len, std::size_t top_k) {
  return (top_k + 1) * seq_len;
}

AugmentedSequence build_augmented(const BehaviorSequence& target,
                                  const SimilarUserResult& neighbors,
                                  const SequenceTable& histories, std::int64_t seq_len,
                                  std::int64_t top_k) {
  if (seq_len <= 0) throw ConfigError("sequence length L must be positive");
  if (top_k < 0) throw ConfigError("top-K must be non-negative");
  for (std::size_t i = 1; i < neighbors.neighbors.size(); ++i) {
    if (neighbors.neighbors[i].score > neighbors.neighbors[i - 1].score) {
      throw ConsistencyError("neighbor list is not sorted by descending similarity");
    }
  }
  const auto L = static_cast<std::size_t>(seq_len);
  const auto K = static_cast<std::size_t>(top_k);

  AugmentedSequence aug;
  aug.seq_len = L;
  aug.top_k = K;
  aug.slot_users.assign(K + 1, -1);
  aug.slot_present.assign(K + 1, false);
  aug.slot_scores.assign(K + 1, 0.0);
  aug.slot_lengths.assign(K + 1, 0);

  std::vector<std::vector<ItemId>> windows(K + 1, std::vector<ItemId>(L, kPadItem));
  windows[0] = padded_window(target.items, L);
  aug.slot_users[0] = target.user;
  aug.slot_present[0] = true;
  for (std::size_t k = 1; k <= K && k <= neighbors.neighbors.size(); ++k) {
    const auto& nb = neighbors.neighbors[k - 1];
    auto it = histories.find(nb.user);
    if (it == histories.end()) {
      throw ConsistencyError("no behavior sequence for neighbor user " + std::to_string(nb.user));
    }
    windows[k] = padded_window(it->second, L);
    aug.slot_users[k] = nb.user;
    aug.slot_present[k] = true;
    aug.slot_scores[k] = nb.score;
  }

  for (std::size_t k = K + 1; k-- > 0;) {
    for (std::size_t j = 0; j < L; ++j) {
      const ItemId item = windows[k][j];
      aug.items.push_back(item);
      aug.slot.push_back(static_cast<int>(k));
      aug.mask.push_back(item != kPadItem);
      if (item != kPadItem) ++aug.slot_lengths[k];
    }
  }
  aug.position_ids.assign(aug.items.size(), 0);
  return assign_position_ids(aug, PositionScheme::kUtpe);
}

AugmentedSequence assign_position_ids(const AugmentedSequence& aug, PositionScheme scheme) {
  AugmentedSequence out = aug;
  const std::size_t L = aug.seq_len;
  const std::size_t n = aug.items.size();
  auto& ids = out.position_ids;
  ids.assign(n, 0);
  switch (scheme) {
    case PositionScheme::kUtpe:
      for (std::size_t j = 0; j < n; ++j) {
        const auto k = static_cast<std::size_t>(aug.slot[j]);
        const std::size_t within = j - aug.slot_offset(k);  // 0 = oldest
        ids[j] = static_cast<std::int64_t>(k * L + (L - 1 - within));
      }
      break;
    case PositionScheme::kStpe:
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t within = j - aug.slot_offset(static_cast<std::size_t>(aug.slot[j]));
        ids[j] = static_cast<std::int64_t>(L - 1 - within);
      }
      break;
    case PositionScheme::kTpe: {
      // Count backwards over non-pad items only, starting at the target's latest.
      std::int64_t next = 0;
      for (std::size_t j = n; j-- > 0;) {
        if (aug.mask[j]) ids[j] = next++;
      }
      break;
    }
    case PositionScheme::kNone:
      break;
  }
  return out;
}

std::string render_augmented(const AugmentedSequence& aug) {
  std::ostringstream os;
  os << "L=" << aug.seq_len << " K=" << aug.top_k << " length=" << aug.size()
     << " non_pad=" << aug.nonpad_count() << '\n';
  auto row = [&](const char* label, std::size_t k, auto value) {
    os << "  " << label;
    const std::size_t off = aug.slot_offset(k);
    for (std::size_t j = 0; j < aug.seq_len; ++j) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), " %5lld", static_cast<long long>(value(off + j)));
      os << buf;
    }
    os << '\n';
  };
  for (std::size_t k = aug.top_k + 1; k-- > 0;) {
    os << "slot k=" << k;
    if (k == 0) {
      os << " target user " << aug.slot_users[0];
    } else if (aug.slot_present[k]) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", aug.slot_scores[k]);
      os << " neighbor user " << aug.slot_users[k] << " similarity " << buf;
    } else {
      os << " empty";
    }
    os << " (" << aug.slot_lengths[k] << " items)\n";
    row("item", k, [&](std::size_t j) { return aug.items[j]; });
    row("pos ", k, [&](std::size_t j) { return aug.position_ids[j]; });
    row("mask", k, [&](std::size_t j) { return aug.mask[j] ? 1 : 0; });
  }
  return os.str();
}

}  // namespace suin
