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

#include "suin/encoder.hpp"

#include <cmath>
#include <numeric>

#include "suin/errors.hpp"
#include "suin/optim.hpp"
#include "suin/random.hpp"

namespace suin {

void EncoderConfig::validate() const {
  if (dim <= 0 || max_len <= 0 || blocks < 0 || heads <= 0) {
    throw ConfigError("encoder: dim, max_len and heads must be positive, blocks >= 0");
  }
  if (dim % heads != 0) {
    throw ConfigError("encoder: dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (epochs < 0 || batch_users <= 0 || lr < 0) {
    throw ConfigError("encoder: epochs >= 0, batch_users > 0 and lr >= 0 required");
  }
}

namespace {

EncoderParams init_impl(std::int64_t num_items, const EncoderConfig& config, bool zero_blocks) {
  config.validate();
  if (num_items <= 0) throw ConfigError("encoder: no items");
  Rng rng(derive_seed(config.seed, 31));
  const auto d = static_cast<std::size_t>(config.dim);
  EncoderParams p;
  p.num_items = num_items;
  p.dim = config.dim;
  p.max_len = config.max_len;
  p.heads = config.heads;
  p.item_table = normal_table(static_cast<std::size_t>(num_items + 1), d, 0.1, rng);
  p.position_table = normal_table(static_cast<std::size_t>(config.max_len), d, 0.1, rng);
  for (std::int64_t b = 0; b < config.blocks; ++b) {
    if (zero_blocks) {
      p.blocks.push_back({Tensor::zeros({d, d}, true), Tensor::zeros({d, d}, true),
                          Tensor::zeros({d, d}, true), Linear::zeros(d, d), Linear::zeros(d, d)});
    } else {
      p.blocks.push_back({xavier(d, d, rng), xavier(d, d, rng), xavier(d, d, rng),
                          Linear::create(d, d, rng), Linear::create(d, d, rng)});
    }
  }
  return p;
}

}  // namespace

EncoderParams EncoderParams::init(std::int64_t num_items, const EncoderConfig& config) {
  return init_impl(num_items, config, false);
}

EncoderParams EncoderParams::init_zero_blocks(std::int64_t num_items,
                                              const EncoderConfig& config) {
  return init_impl(num_items, config, true);
}

ParamList EncoderParams::parameters() const {
  ParamList out{{"encoder.items", item_table}, {"encoder.positions", position_table}};
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto pre = "encoder.block" + std::to_string(b);
    out.push_back({pre + ".query", blocks[b].query});
    out.push_back({pre + ".key", blocks[b].key});
    out.push_back({pre + ".value", blocks[b].value});
    blocks[b].ff1.collect(out, pre + ".ff1");
    blocks[b].ff2.collect(out, pre + ".ff2");
  }
  return out;
}

void EncoderParams::freeze() {
  for (auto& p : parameters()) p.tensor.set_requires_grad(false);
  frozen = true;
}

void EncoderParams::save(TensorArchive& ar) const {
  ar.put_ints("encoder.meta", {5},
              {num_items, dim, max_len, heads, static_cast<std::int64_t>(blocks.size())});
  for (const auto& p : parameters()) ar.put(p.name, p.tensor);
}

EncoderParams EncoderParams::load(const TensorArchive& ar) {
  const auto& meta = ar.ints("encoder.meta");
  EncoderParams p;
  p.num_items = meta.at(0);
  p.dim = meta.at(1);
  p.max_len = meta.at(2);
  p.heads = meta.at(3);
  p.item_table = ar.tensor("encoder.items");
  p.position_table = ar.tensor("encoder.positions");
  for (std::int64_t b = 0; b < meta.at(4); ++b) {
    const auto pre = "encoder.block" + std::to_string(b);
    EncoderBlock blk{ar.tensor(pre + ".query"), ar.tensor(pre + ".key"),
                     ar.tensor(pre + ".value"), Linear::load(ar, pre + ".ff1"),
                     Linear::load(ar, pre + ".ff2")};
    p.blocks.push_back(std::move(blk));
  }
  p.freeze();
  return p;
}

Tensor encode_hidden(std::span<const ItemId> items, const EncoderParams& params) {
  if (items.empty()) throw EmptyHistoryError("cannot encode an empty behavior sequence");
  const auto max_len = static_cast<std::size_t>(params.max_len);
  if (items.size() > max_len) items = items.subspan(items.size() - max_len);
  const std::size_t n = items.size();
  const auto d = static_cast<std::size_t>(params.dim);
  const auto heads = static_cast<std::size_t>(params.heads);
  const std::size_t dh = d / heads;

  std::vector<std::int64_t> positions(n);
  std::iota(positions.begin(), positions.end(), static_cast<std::int64_t>(max_len - n));
  Tensor x = add(gather_rows(params.item_table, items),
                 gather_rows(params.position_table, positions));

  std::vector<bool> causal(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) causal[i * n + j] = j <= i;
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const auto& blk : params.blocks) {
    const Tensor q = matmul(x, blk.query);
    const Tensor k = matmul(x, blk.key);
    const Tensor v = matmul(x, blk.value);
    Tensor attn;
    if (heads == 1) {
      const Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt);
      attn = matmul(softmax_rows_masked(scores, causal), v);
    } else {
      std::vector<Tensor> outs;
      for (std::size_t h = 0; h < heads; ++h) {
        const Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
        const Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        const Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
        const Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
        outs.push_back(matmul(softmax_rows_masked(scores, causal), vh));
      }
      attn = concat(outs, 1);
    }
    x = add(x, attn);
    x = add(x, blk.ff2.forward(relu(blk.ff1.forward(x))));
  }
  return x;
}

BehaviorEmbedding encode(UserId user, std::span<const ItemId> items,
                         const EncoderParams& params) {
  const Tensor h = encode_hidden(items, params);
  const std::size_t n = h.size(0), d = h.size(1);
  BehaviorEmbedding out;
  out.user = user;
  out.values.assign(h.data().begin() + static_cast<std::ptrdiff_t>((n - 1) * d), h.data().end());
  for (double v : out.values) {
    if (!std::isfinite(v)) throw DivergenceError("non-finite behavior embedding for user " + std::to_string(user));
  }
  return out;
}

BehaviorEmbedding encode_or_empty(UserId user, std::span<const ItemId> items,
                                  const EncoderParams& params) {
  if (items.empty()) {
    BehaviorEmbedding out;
    out.user = user;
    out.values.assign(static_cast<std::size_t>(params.dim), 0.0);
    out.empty_history = true;
    return out;
  }
  return encode(user, items, params);
}

EncoderParams pretrain_encoder(const SequenceTable& sequences, const SplitAssignment& splits,
                               std::int64_t num_items, const EncoderConfig& config,
                               PretrainLog* log) {
  std::vector<UserId> users;
  for (const auto& [user, seq] : sequences) {
    if (splits.is_train(user) && seq.size() >= 2) users.push_back(user);
  }
  if (users.empty()) throw ConfigError("encoder pretraining corpus is empty");
  if (num_items < 2) throw ConfigError("encoder pretraining needs at least 2 items");

  EncoderParams params = EncoderParams::init(num_items, config);
  Adam opt(params.parameters(), {.lr = config.lr});
  const auto max_len = static_cast<std::size_t>(config.max_len);

  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, 4000 + static_cast<std::uint64_t>(epoch)));
    std::vector<UserId> order = users;
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_users)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_users));
      std::vector<Tensor> logits;
      std::vector<double> labels;
      for (std::size_t u = start; u < end; ++u) {
        std::span<const ItemId> seq = sequences.at(order[u]);
        if (seq.size() > max_len + 1) seq = seq.subspan(seq.size() - max_len - 1);
        const auto inputs = seq.first(seq.size() - 1);
        const auto targets = seq.subspan(1);
        std::vector<ItemId> negatives(targets.size());
        for (std::size_t t = 0; t < targets.size(); ++t) {
          do {
            negatives[t] = 1 + static_cast<ItemId>(rng.below(static_cast<std::uint64_t>(num_items)));
          } while (negatives[t] == targets[t]);
        }
        const Tensor h = encode_hidden(inputs, params);
        logits.push_back(row_sums(mul(h, gather_rows(params.item_table, targets))));
        logits.push_back(row_sums(mul(h, gather_rows(params.item_table, negatives))));
        labels.insert(labels.end(), targets.size(), 1.0);
        labels.insert(labels.end(), targets.size(), 0.0);
      }
      const Tensor loss = bce_loss(sigmoid(concat(logits)), labels);
      if (!std::isfinite(loss.item())) {
        throw DivergenceError("encoder loss is not finite in epoch " + std::to_string(epoch));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
      loss_sum += loss.item() * static_cast<double>(labels.size());
      loss_count += labels.size();
    }
    if (log) log->epoch_loss.push_back(loss_sum / static_cast<double>(loss_count));
  }
  params.freeze();
  return params;
}

}  // namespace suin
