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

#include "suin/attention.hpp"

#include <cmath>

#include "suin/errors.hpp"

namespace suin {

AdapterParams AdapterParams::create(std::size_t in_dim, std::span<const std::size_t> hidden,
                                    std::size_t out_dim, double dropout, Rng& rng) {
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("adapter dropout must be in [0, 1)");
  AdapterParams p;
  p.dropout = dropout;
  std::size_t prev = in_dim;
  for (std::size_t h : hidden) {
    p.layers.push_back(Linear::create(prev, h, rng));
    prev = h;
  }
  p.layers.push_back(Linear::create(prev, out_dim, rng));
  return p;
}

AdapterParams AdapterParams::zeros(std::size_t in_dim, std::span<const std::size_t> hidden,
                                   std::size_t out_dim) {
  AdapterParams p;
  std::size_t prev = in_dim;
  for (std::size_t h : hidden) {
    p.layers.push_back(Linear::zeros(prev, h));
    prev = h;
  }
  p.layers.push_back(Linear::zeros(prev, out_dim));
  return p;
}

void AdapterParams::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(out, prefix + ".layer" + std::to_string(i));
  }
}

void AdapterParams::save(TensorArchive& ar, const std::string& prefix) const {
  ar.put_ints(prefix + ".depth", {1}, {static_cast<std::int64_t>(layers.size())});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].save(ar, prefix + ".layer" + std::to_string(i));
  }
}

AdapterParams AdapterParams::load(const TensorArchive& ar, const std::string& prefix,
                                  double dropout) {
  AdapterParams p;
  p.dropout = dropout;
  const std::int64_t depth = ar.ints(prefix + ".depth").at(0);
  for (std::int64_t i = 0; i < depth; ++i) {
    p.layers.push_back(Linear::load(ar, prefix + ".layer" + std::to_string(i)));
  }
  return p;
}

AdapterParams AdapterParams::clone() const {
  AdapterParams p;
  p.dropout = dropout;
  for (const auto& l : layers) p.layers.push_back(l.clone());
  return p;
}

Tensor adapt(const Tensor& x, const AdapterParams& params, Rng* dropout_rng) {
  const std::size_t width = x.shape().back();
  if (width != params.in_dim()) {
    throw ConfigError("behavior embedding width " + std::to_string(width) +
                      " does not match adapter input " + std::to_string(params.in_dim()));
  }
  Tensor h = x;
  for (const auto& layer : params.layers) {
    h = relu(layer.forward(h));
    if (dropout_rng && params.dropout > 0.0) {
      const double keep = 1.0 - params.dropout;
      std::vector<double> m(h.numel());
      for (double& v : m) v = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
      h = mul(h, Tensor::from_data(h.shape(), std::move(m)));
    }
  }
  return h;
}

Tensor adapt(const BehaviorEmbedding& e_b, const AdapterParams& params, Rng* dropout_rng) {
  return adapt(Tensor::vector(e_b.values), params, dropout_rng);
}

UserAwareAttentionParams UserAwareAttentionParams::create(std::size_t d_item, std::size_t d,
                                                          std::size_t position_rows, Rng& rng) {
  UserAwareAttentionParams p;
  p.item_positions = normal_table(position_rows, d_item, 0.05, rng);
  p.user_positions = normal_table(position_rows, d, 0.05, rng);
  p.item_query = xavier(d_item, d_item, rng);
  p.item_key = xavier(d_item, d_item, rng);
  p.item_value = xavier(d_item, d_item, rng);
  p.user_query = xavier(d, d, rng);
  p.user_key = xavier(d, d, rng);
  p.user_value = xavier(d, d, rng);
  return p;
}

void UserAwareAttentionParams::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".item_positions", item_positions});
  out.push_back({prefix + ".user_positions", user_positions});
  out.push_back({prefix + ".item_query", item_query});
  out.push_back({prefix + ".item_key", item_key});
  out.push_back({prefix + ".item_value", item_value});
  out.push_back({prefix + ".user_query", user_query});
  out.push_back({prefix + ".user_key", user_key});
  out.push_back({prefix + ".user_value", user_value});
}

void UserAwareAttentionParams::save(TensorArchive& ar, const std::string& prefix) const {
  ParamList list;
  collect(list, prefix);
  for (const auto& p : list) ar.put(p.name, p.tensor);
  ar.put_ints(prefix + ".literal_pairing", {1}, {literal_pairing ? 1 : 0});
}

UserAwareAttentionParams UserAwareAttentionParams::load(const TensorArchive& ar,
                                                        const std::string& prefix) {
  UserAwareAttentionParams p;
  p.item_positions = ar.tensor(prefix + ".item_positions", true);
  p.user_positions = ar.tensor(prefix + ".user_positions", true);
  p.item_query = ar.tensor(prefix + ".item_query", true);
  p.item_key = ar.tensor(prefix + ".item_key", true);
  p.item_value = ar.tensor(prefix + ".item_value", true);
  p.user_query = ar.tensor(prefix + ".user_query", true);
  p.user_key = ar.tensor(prefix + ".user_key", true);
  p.user_value = ar.tensor(prefix + ".user_value", true);
  p.literal_pairing = ar.ints(prefix + ".literal_pairing").at(0) != 0;
  return p;
}

UserAwareAttentionParams UserAwareAttentionParams::clone() const {
  UserAwareAttentionParams p;
  p.item_positions = clone_param(item_positions);
  p.user_positions = clone_param(user_positions);
  p.item_query = clone_param(item_query);
  p.item_key = clone_param(item_key);
  p.item_value = clone_param(item_value);
  p.user_query = clone_param(user_query);
  p.user_key = clone_param(user_key);
  p.user_value = clone_param(user_value);
  p.literal_pairing = literal_pairing;
  return p;
}

namespace {

void check_position_ids(std::span<const std::int64_t> ids, std::size_t rows) {
  for (std::int64_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw IndexError("position ID " + std::to_string(id) + " outside a table of " +
                       std::to_string(rows) + " rows");
    }
  }
}

const std::int64_t kTargetPosition[1] = {0};

}  // namespace

ItemProjection project_items(const Tensor& behavior_items, const Tensor& target_item,
                             std::span<const std::int64_t> position_ids,
                             const UserAwareAttentionParams& params) {
  if (behavior_items.dim() != 2 || behavior_items.size(0) != position_ids.size()) {
    throw DimensionError("behavior items " + shape_str(behavior_items.shape()) + " vs " +
                         std::to_string(position_ids.size()) + " position IDs");
  }
  check_position_ids(position_ids, params.position_rows());
  const Tensor target = add(target_item, reshape(gather_rows(params.item_positions, kTargetPosition),
                                                 {params.item_dim()}));
  const Tensor behaviors = add(behavior_items, gather_rows(params.item_positions, position_ids));
  return {target, matmul(target, params.item_query), matmul(behaviors, params.item_key),
          matmul(behaviors, params.item_value)};
}

UserProjection project_users(const Tensor& slot_embeddings, const AugmentedSequence& aug,
                             const UserAwareAttentionParams& params) {
  if (slot_embeddings.dim() != 2 || slot_embeddings.size(0) != aug.top_k + 1 ||
      slot_embeddings.size(1) != params.user_dim()) {
    throw DimensionError("slot embeddings " + shape_str(slot_embeddings.shape()) +
                         " do not match K=" + std::to_string(aug.top_k) +
                         ", d=" + std::to_string(params.user_dim()));
  }
  check_position_ids(aug.position_ids, params.position_rows());
  std::vector<std::int64_t> slots(aug.slot.begin(), aug.slot.end());
  const Tensor target =
      add(row(slot_embeddings, 0),
          reshape(gather_rows(params.user_positions, kTargetPosition), {params.user_dim()}));
  const Tensor behaviors = add(gather_rows(slot_embeddings, slots),
                               gather_rows(params.user_positions, aug.position_ids));
  return {target, matmul(target, params.user_query), matmul(behaviors, params.user_key),
          matmul(behaviors, params.user_value)};
}

Tensor item_logits(const ItemProjection& proj) {
  const double s = 1.0 / std::sqrt(static_cast<double>(proj.query.numel()));
  return scale(matmul(proj.keys, proj.query), s);
}

Tensor user_logits(const UserProjection& proj) {
  const double s = 1.0 / std::sqrt(static_cast<double>(proj.query.numel()));
  return scale(matmul(proj.keys, proj.query), s);
}

AttentionOutput attend(const Tensor& item_logits, const Tensor& user_logits,
                       const std::vector<bool>& mask, const Tensor& query,
                       const Tensor& values) {
  if (item_logits.dim() != 1 || item_logits.numel() != mask.size()) {
    throw DimensionError("logits " + shape_str(item_logits.shape()) + " vs mask of " +
                         std::to_string(mask.size()));
  }
  if (values.dim() != 2 || values.size(0) != mask.size() || values.size(1) != query.numel()) {
    throw DimensionError("values " + shape_str(values.shape()) + " vs query " +
                         shape_str(query.shape()));
  }
  const Tensor fused = user_logits.defined() ? add(item_logits, user_logits) : item_logits;
  AttentionOutput out;
  out.weights = softmax_masked(fused, mask);
  out.pooled = mul(query, matmul(out.weights, values));
  return out;
}

AttentionOutput user_aware_attention(const ItemProjection& items, const UserProjection& users,
                                     const std::vector<bool>& mask,
                                     const UserAwareAttentionParams& params) {
  Tensor query;
  if (params.literal_pairing) {
    if (params.item_dim() != params.user_dim()) {
      throw ConfigError("literal query pairing needs equal item and user widths");
    }
    query = concat({matmul(items.target, params.user_query),
                    matmul(users.target, params.item_query)});
  } else {
    query = concat({items.query, users.query});
  }
  const Tensor values = concat({items.values, users.values}, 1);
  return attend(item_logits(items), user_logits(users), mask, query, values);
}

AttentionOutput target_attention(const ItemProjection& items, const std::vector<bool>& mask) {
  return attend(item_logits(items), Tensor{}, mask, items.query, items.values);
}

}  // namespace suin
