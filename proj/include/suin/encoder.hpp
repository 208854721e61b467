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
#include <vector>

#include "suin/data.hpp"
#include "suin/nn.hpp"
#include "suin/tensor.hpp"
#include "suin/tensor_io.hpp"

namespace suin {

// Self-attentive next-item encoder. A user's behavior embedding is the
// hidden state at the most recent position.
struct EncoderConfig {
  std::int64_t dim = 16;
  std::int64_t max_len = 50;
  std::int64_t blocks = 1;
  std::int64_t heads = 1;
  std::int64_t epochs = 3;
  double lr = 0.005;
  std::int64_t batch_users = 16;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EncoderBlock {
  Tensor query;  // [d x d]
  Tensor key;
  Tensor value;
  Linear ff1;  // d -> d
  Linear ff2;
};

struct EncoderParams {
  std::int64_t num_items = 0;  // real items; the item table has num_items + 1 rows
  std::int64_t dim = 0;
  std::int64_t max_len = 0;
  std::int64_t heads = 1;
  Tensor item_table;      // [(num_items + 1) x d]
  Tensor position_table;  // [max_len x d], the latest item sits at max_len - 1
  std::vector<EncoderBlock> blocks;
  bool frozen = false;

  static EncoderParams init(std::int64_t num_items, const EncoderConfig& config);
  // All-zero projections and feed-forward weights; embeddings random.
  static EncoderParams init_zero_blocks(std::int64_t num_items, const EncoderConfig& config);

  ParamList parameters() const;
  void freeze();

  void save(TensorArchive& ar) const;
  static EncoderParams load(const TensorArchive& ar);
};

struct BehaviorEmbedding {
  UserId user = 0;
  std::vector<double> values;
  bool frozen = true;
  bool empty_history = false;  // zero vector stand-in, never pooled
};

// Hidden states [n x d] for the last min(len, max_len) items, causal.
Tensor encode_hidden(std::span<const ItemId> items, const EncoderParams& params);

// Throws EmptyHistoryError for an empty sequence.
BehaviorEmbedding encode(UserId user, std::span<const ItemId> items,
                         const EncoderParams& params);

// Zero vector flagged as empty when the sequence is empty.
BehaviorEmbedding encode_or_empty(UserId user, std::span<const ItemId> items,
                                  const EncoderParams& params);

struct PretrainLog {
  std::vector<double> epoch_loss;  // mean BCE per epoch
};

// Next-item BCE with one uniformly sampled negative per positive, trained on
// the full sequences of training-split users only. Returns frozen params.
EncoderParams pretrain_encoder(const SequenceTable& sequences, const SplitAssignment& splits,
                               std::int64_t num_items, const EncoderConfig& config,
                               PretrainLog* log = nullptr);

}  // namespace suin
