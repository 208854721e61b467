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

#include "suin/augmentation.hpp"
#include "suin/encoder.hpp"
#include "suin/nn.hpp"
#include "suin/random.hpp"
#include "suin/tensor.hpp"

namespace suin {

// Maps frozen behavior embeddings (width d') into the CTR embedding space
// (width d). ReLU follows every layer; dropout follows every activation and
// is only active when a generator is passed.
struct AdapterParams {
  std::vector<Linear> layers;
  double dropout = 0.0;

  static AdapterParams create(std::size_t in_dim, std::span<const std::size_t> hidden,
                              std::size_t out_dim, double dropout, Rng& rng);
  // Every weight and bias zero, so the output is zero for any input.
  static AdapterParams zeros(std::size_t in_dim, std::span<const std::size_t> hidden,
                             std::size_t out_dim);

  std::size_t in_dim() const { return layers.front().in_features(); }
  std::size_t out_dim() const { return layers.back().out_features(); }

  void collect(ParamList& out, const std::string& prefix) const;
  void save(TensorArchive& ar, const std::string& prefix) const;
  static AdapterParams load(const TensorArchive& ar, const std::string& prefix,
                            double dropout);
  AdapterParams clone() const;
};

// x is [d'] or [n x d']. Throws ConfigError when the width does not match.
Tensor adapt(const Tensor& x, const AdapterParams& params, Rng* dropout_rng = nullptr);
// Wraps the embedding as a constant leaf, so no gradient can reach it.
Tensor adapt(const BehaviorEmbedding& e_b, const AdapterParams& params,
             Rng* dropout_rng = nullptr);

struct UserAwareAttentionParams {
  Tensor item_positions;  // [rows x d_item]
  Tensor user_positions;  // [rows x d]
  Tensor item_query, item_key, item_value;  // [d_item x d_item]
  Tensor user_query, user_key, user_value;  // [d x d]
  // Pair W_user^Q with the target item and W_item^Q with the target user in
  // the pooled output, as the formula is printed. Needs d_item == d.
  bool literal_pairing = false;

  static UserAwareAttentionParams create(std::size_t d_item, std::size_t d,
                                         std::size_t position_rows, Rng& rng);
  std::size_t item_dim() const { return item_query.size(0); }
  std::size_t user_dim() const { return user_query.size(0); }
  std::size_t position_rows() const { return item_positions.size(0); }

  void collect(ParamList& out, const std::string& prefix) const;
  void save(TensorArchive& ar, const std::string& prefix) const;
  static UserAwareAttentionParams load(const TensorArchive& ar, const std::string& prefix);
  UserAwareAttentionParams clone() const;
};

// Projected queries, keys and values for one augmented sequence of n positions.
struct ItemProjection {
  Tensor target;  // e_t + P^0, [d_item]
  Tensor query;   // W^Q (e_t + P^0), [d_item]
  Tensor keys;    // W^K (e_i + P^{p_i}), [n x d_item]
  Tensor values;  // W^V (e_i + P^{p_i}), [n x d_item]
};

struct UserProjection {
  Tensor target;  // adapted target embedding + P_user^0, [d]
  Tensor query;   // [d]
  Tensor keys;    // [n x d]
  Tensor values;  // [n x d]
};

// behavior_items is [n x d_item] (the raw item embeddings of the augmented
// sequence), target_item is [d_item].
ItemProjection project_items(const Tensor& behavior_items, const Tensor& target_item,
                             std::span<const std::int64_t> position_ids,
                             const UserAwareAttentionParams& params);

// slot_embeddings is [(K + 1) x d] with row k the adapted embedding of the
// user in slot k (row 0 is the target user). Each position takes the row of
// its source slot.
UserProjection project_users(const Tensor& slot_embeddings, const AugmentedSequence& aug,
                             const UserAwareAttentionParams& params);

// Scaled dot products keys . query / sqrt(width), one logit per position.
Tensor item_logits(const ItemProjection& proj);
Tensor user_logits(const UserProjection& proj);

struct AttentionOutput {
  Tensor pooled;   // query (*) sum_i alpha_i v_i
  Tensor weights;  // alpha, exactly 0 at masked positions
};

// alpha = masked softmax of the summed logits; user_logits may be undefined
// for item-only attention. Throws EmptyAttentionError when every position is
// masked and DimensionError on length mismatches.
AttentionOutput attend(const Tensor& item_logits, const Tensor& user_logits,
                       const std::vector<bool>& mask, const Tensor& query,
                       const Tensor& values);

// Full user-aware attention over one augmented sequence.
AttentionOutput user_aware_attention(const ItemProjection& items, const UserProjection& users,
                                     const std::vector<bool>& mask,
                                     const UserAwareAttentionParams& params);

// Item-only target attention over the same sequence.
AttentionOutput target_attention(const ItemProjection& items, const std::vector<bool>& mask);

}  // namespace suin
