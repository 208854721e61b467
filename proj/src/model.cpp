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

#include "suin/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "suin/errors.hpp"
#include "suin/optim.hpp"

namespace suin {

std::string to_string(PoolingMode m) {
  switch (m) {
    case PoolingMode::kSuin: return "suin";
    case PoolingMode::kAvg: return "avg";
    case PoolingMode::kTargetAttention: return "target_attention";
  }
  return "?";
}

PoolingMode parse_pooling(const std::string& text) {
  if (text == "suin") return PoolingMode::kSuin;
  if (text == "avg") return PoolingMode::kAvg;
  if (text == "target_attention") return PoolingMode::kTargetAttention;
  throw ConfigError("unknown pooling mode '" + text + "'");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoUta: return "no_uta";
    case Variant::kNoUtaKeepBe: return "no_uta_keep_be";
    case Variant::kRandomUsers: return "random_users";
    case Variant::kNoSuNoUta: return "no_su_no_uta";
    case Variant::kNoPos: return "no_pos";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  if (text == "full") return Variant::kFull;
  if (text == "no_uta") return Variant::kNoUta;
  if (text == "no_uta_keep_be") return Variant::kNoUtaKeepBe;
  if (text == "random_users") return Variant::kRandomUsers;
  if (text == "no_su_no_uta") return Variant::kNoSuNoUta;
  if (text == "no_pos") return Variant::kNoPos;
  throw ConfigError("unknown variant '" + text + "'");
}

void ModelConfig::validate() const {
  if (embedding_dim <= 0 || behavior_dim <= 0) throw ConfigError("model dimensions must be positive");
  if (seq_len <= 0) throw ConfigError("sequence length L must be positive");
  if (top_k < 0) throw ConfigError("top-K must be non-negative");
  for (auto h : mlp_hidden) {
    if (h <= 0) throw ConfigError("MLP hidden sizes must be positive");
  }
  for (auto h : adapter_hidden) {
    if (h <= 0) throw ConfigError("adapter hidden sizes must be positive");
  }
  if (adapter_dropout < 0.0 || adapter_dropout >= 1.0) {
    throw ConfigError("adapter dropout must be in [0, 1)");
  }
}

PoolingMode ModelConfig::effective_pooling() const {
  switch (variant) {
    case Variant::kNoUta:
    case Variant::kNoUtaKeepBe:
    case Variant::kNoSuNoUta:
      return PoolingMode::kTargetAttention;
    default:
      return pooling;
  }
}

std::int64_t ModelConfig::effective_top_k() const {
  return variant == Variant::kNoSuNoUta ? 0 : top_k;
}

bool ModelConfig::uses_behavior_embeddings() const {
  return effective_pooling() == PoolingMode::kSuin || variant == Variant::kNoUtaKeepBe;
}

// ---------------------------------------------------------------------------
// Input assembly

namespace {

std::vector<double> embedding_of(const EmbeddingTable& table, UserId user) {
  auto it = table.rows.find(user);
  if (it == table.rows.end() || it->second.empty_history) {
    throw ConsistencyError("no behavior embedding for user " + std::to_string(user));
  }
  return it->second.values;
}

std::vector<UserId> random_neighbors(std::span<const UserId> pool, UserId self, std::size_t k,
                                     Rng& rng) {
  std::vector<UserId> candidates;
  candidates.reserve(pool.size());
  for (UserId u : pool) {
    if (u != self) candidates.push_back(u);
  }
  k = std::min(k, candidates.size());
  // Partial Fisher-Yates: the first k entries become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(k);
  return candidates;
}

SampleInput assemble(const TrainingSample& s, const InputSources& src, const ModelConfig& cfg,
                     std::uint64_t seed, std::size_t index) {
  const auto& seq = src.sequences->at(s.user);
  if (s.history_len == 0 || s.history_len > seq.size()) {
    throw ConsistencyError("sample for user " + std::to_string(s.user) +
                           " has an invalid history length");
  }
  const std::int64_t K = cfg.effective_top_k();
  const auto d_b = static_cast<std::size_t>(cfg.behavior_dim);
  std::span<const ItemId> history(seq.data(), s.history_len);
  const bool full_prefix = s.history_len + 1 == seq.size();

  SimilarUserResult neighbors;
  std::vector<double> target_embedding;
  const bool need_embedding = cfg.uses_behavior_embeddings();
  const bool need_neighbors = K > 0 && cfg.variant != Variant::kRandomUsers;
  if (full_prefix) {
    if (need_embedding) target_embedding = embedding_of(*src.embeddings, s.user);
    if (need_neighbors) {
      auto it = src.neighbors->find(s.user);
      if (it == src.neighbors->end()) {
        throw ConsistencyError("no neighbor list for user " + std::to_string(s.user));
      }
      neighbors = it->second;
    }
  } else if (need_embedding || need_neighbors) {
    const PrefixEntry* entry = nullptr;
    if (src.prefixes) {
      auto it = src.prefixes->find({s.user, s.history_len});
      if (it != src.prefixes->end()) entry = &it->second;
    }
    if (!entry) {
      throw ConsistencyError("no retrieval result for user " + std::to_string(s.user) +
                             " at history length " + std::to_string(s.history_len));
    }
    target_embedding = entry->embedding;
    neighbors = entry->neighbors;
  }
  if (cfg.variant == Variant::kRandomUsers && K > 0) {
    Rng rng(derive_seed(derive_seed(seed, 9100), index));
    for (UserId u : random_neighbors(src.random_candidates, s.user, static_cast<std::size_t>(K), rng)) {
      neighbors.neighbors.push_back({u, 0.0});
    }
  }
  if (static_cast<std::int64_t>(neighbors.neighbors.size()) > K) {
    neighbors.neighbors.resize(static_cast<std::size_t>(K));
  }

  SequenceTable neighbor_histories;
  for (const auto& nb : neighbors.neighbors) {
    neighbor_histories[nb.user] = history_prefix(src.sequences->at(nb.user));
  }
  BehaviorSequence target{s.user, std::vector<ItemId>(history.begin(), history.end())};
  SampleInput in;
  in.user = s.user;
  in.target = s.target;
  in.label = s.label;
  in.history_len = s.history_len;
  in.aug = assign_position_ids(
      build_augmented(target, neighbors, neighbor_histories, cfg.seq_len, K), cfg.scheme);
  if (need_embedding) {
    if (target_embedding.size() != d_b) {
      throw ConfigError("behavior embeddings have width " +
                        std::to_string(target_embedding.size()) + ", model expects " +
                        std::to_string(d_b));
    }
    in.behaviors.assign(static_cast<std::size_t>(K + 1) * d_b, 0.0);
    std::copy(target_embedding.begin(), target_embedding.end(), in.behaviors.begin());
    for (std::size_t k = 1; k <= neighbors.neighbors.size(); ++k) {
      const auto e = embedding_of(*src.embeddings, neighbors.neighbors[k - 1].user);
      std::copy(e.begin(), e.end(), in.behaviors.begin() + static_cast<std::ptrdiff_t>(k * d_b));
    }
  }
  return in;
}

template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n));
  if (workers == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        fn(std::min(n, w * chunk), std::min(n, (w + 1) * chunk));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<SampleInput> build_inputs(std::span<const TrainingSample> samples,
                                      const InputSources& sources, const ModelConfig& config,
                                      std::uint64_t seed, int threads) {
  config.validate();
  if (!sources.sequences || !sources.embeddings || !sources.neighbors) {
    throw ConfigError("input sources are incomplete");
  }
  if (config.variant != Variant::kRandomUsers &&
      config.effective_top_k() > sources.retrieved_top_k) {
    throw ConfigError("model K=" + std::to_string(config.effective_top_k()) +
                      " exceeds the retrieved top-K=" + std::to_string(sources.retrieved_top_k));
  }
  std::vector<SampleInput> out(samples.size());
  parallel_chunks(samples.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = assemble(samples[i], sources, config, seed, i);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

ModelParams ModelParams::init(std::int64_t num_items, const ModelConfig& config,
                              std::uint64_t seed) {
  config.validate();
  if (num_items <= 0) throw ConfigError("model: no items");
  Rng rng(derive_seed(seed, 77));
  const auto d = static_cast<std::size_t>(config.embedding_dim);
  ModelParams p;
  p.config = config;
  p.num_items = num_items;
  p.item_table = normal_table(static_cast<std::size_t>(num_items + 1), d, 0.1, rng);
  std::vector<std::size_t> adapter_hidden(config.adapter_hidden.begin(),
                                          config.adapter_hidden.end());
  p.adapter = AdapterParams::create(static_cast<std::size_t>(config.behavior_dim), adapter_hidden,
                                    d, config.adapter_dropout, rng);
  p.attention = UserAwareAttentionParams::create(
      d, d,
      position_table_rows(static_cast<std::size_t>(config.seq_len),
                          static_cast<std::size_t>(config.effective_top_k())),
      rng);
  p.attention.literal_pairing = config.literal_pairing;
  if (config.literal_pairing && p.attention.item_dim() != p.attention.user_dim()) {
    throw ConfigError("literal query pairing needs equal item and user widths");
  }
  if (config.variant == Variant::kNoPos) {
    for (Tensor* t : {&p.attention.item_positions, &p.attention.user_positions}) {
      *t = Tensor::zeros(t->shape(), false);
    }
  }
  std::size_t prev = p.mlp_input_width();
  for (auto h : config.mlp_hidden) {
    p.mlp.push_back(Linear::create(prev, static_cast<std::size_t>(h), rng));
    prev = static_cast<std::size_t>(h);
  }
  p.mlp.push_back(Linear::create(prev, 1, rng));
  return p;
}

std::size_t ModelParams::mlp_input_width() const {
  const auto d = static_cast<std::size_t>(config.embedding_dim);
  std::size_t pooled = d;
  if (config.effective_pooling() == PoolingMode::kSuin) pooled = 2 * d;
  std::size_t width = pooled + d;
  if (config.variant == Variant::kNoUtaKeepBe) width += 2 * d;
  return width;
}

ParamList ModelParams::parameters() const {
  ParamList out{{"model.items", item_table}};
  adapter.collect(out, "model.adapter");
  attention.collect(out, "model.attention");
  for (std::size_t i = 0; i < mlp.size(); ++i) mlp[i].collect(out, "model.mlp" + std::to_string(i));
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.config = config;
  p.num_items = num_items;
  p.item_table = clone_param(item_table);
  p.adapter = adapter.clone();
  p.attention = attention.clone();
  for (const auto& l : mlp) p.mlp.push_back(l.clone());
  return p;
}

void ModelParams::save(TensorArchive& ar) const {
  const auto& c = config;
  ar.put_ints("model.meta", {9},
              {num_items, c.embedding_dim, c.behavior_dim, c.seq_len, c.top_k,
               static_cast<std::int64_t>(c.pooling), static_cast<std::int64_t>(c.variant),
               static_cast<std::int64_t>(c.scheme), c.literal_pairing ? 1 : 0});
  ar.put_ints("model.mlp_hidden", {c.mlp_hidden.size()}, c.mlp_hidden);
  ar.put_ints("model.adapter_hidden", {c.adapter_hidden.size()}, c.adapter_hidden);
  ar.put("model.adapter_dropout", Tensor::scalar(c.adapter_dropout));
  ar.put("model.items", item_table);
  adapter.save(ar, "model.adapter");
  attention.save(ar, "model.attention");
  ar.put_ints("model.mlp_depth", {1}, {static_cast<std::int64_t>(mlp.size())});
  for (std::size_t i = 0; i < mlp.size(); ++i) mlp[i].save(ar, "model.mlp" + std::to_string(i));
}

ModelParams ModelParams::load(const TensorArchive& ar) {
  const auto& meta = ar.ints("model.meta");
  if (meta.size() != 9) throw IoError("model archive has a malformed header");
  ModelParams p;
  auto& c = p.config;
  p.num_items = meta[0];
  c.embedding_dim = meta[1];
  c.behavior_dim = meta[2];
  c.seq_len = meta[3];
  c.top_k = meta[4];
  c.pooling = static_cast<PoolingMode>(meta[5]);
  c.variant = static_cast<Variant>(meta[6]);
  c.scheme = static_cast<PositionScheme>(meta[7]);
  c.literal_pairing = meta[8] != 0;
  c.mlp_hidden = ar.ints("model.mlp_hidden");
  c.adapter_hidden = ar.ints("model.adapter_hidden");
  c.adapter_dropout = ar.tensor("model.adapter_dropout").item();
  p.item_table = ar.tensor("model.items", true);
  p.adapter = AdapterParams::load(ar, "model.adapter", c.adapter_dropout);
  p.attention = UserAwareAttentionParams::load(ar, "model.attention");
  if (c.variant == Variant::kNoPos) {
    p.attention.item_positions.set_requires_grad(false);
    p.attention.user_positions.set_requires_grad(false);
  }
  const std::int64_t depth = ar.ints("model.mlp_depth").at(0);
  for (std::int64_t i = 0; i < depth; ++i) {
    p.mlp.push_back(Linear::load(ar, "model.mlp" + std::to_string(i)));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

struct Features {
  Tensor row;
  AttentionOutput attention;
};

Features sample_features(const ModelParams& params, const SampleInput& s, Rng* dropout_rng) {
  const auto& cfg = params.config;
  const auto& aug = s.aug;
  const std::size_t d = static_cast<std::size_t>(cfg.embedding_dim);
  if (static_cast<std::int64_t>(aug.top_k) != cfg.effective_top_k() ||
      static_cast<std::int64_t>(aug.seq_len) != cfg.seq_len) {
    throw ConsistencyError("sample was built for L=" + std::to_string(aug.seq_len) +
                           ", K=" + std::to_string(aug.top_k) + " but the model expects L=" +
                           std::to_string(cfg.seq_len) + ", K=" +
                           std::to_string(cfg.effective_top_k()));
  }
  if (s.target <= 0 || s.target > params.num_items) {
    throw IndexError("target item " + std::to_string(s.target) + " out of range");
  }
  const std::int64_t target_index[1] = {s.target};
  const Tensor e_t = reshape(gather_rows(params.item_table, target_index), {d});
  const Tensor items = gather_rows(params.item_table, aug.items);

  Tensor adapted;  // [(K + 1) x d]
  if (cfg.uses_behavior_embeddings()) {
    const std::size_t d_b = static_cast<std::size_t>(cfg.behavior_dim);
    if (s.behaviors.size() != (aug.top_k + 1) * d_b) {
      throw ConsistencyError("sample carries no behavior embeddings for user " +
                             std::to_string(s.user));
    }
    adapted = adapt(Tensor::from_data({aug.top_k + 1, d_b}, s.behaviors), params.adapter,
                    dropout_rng);
  }

  Features f;
  Tensor pooled;
  switch (cfg.effective_pooling()) {
    case PoolingMode::kAvg: {
      const std::size_t count = aug.nonpad_count();
      if (count == 0) throw EmptyAttentionError("no behaviors to average");
      std::vector<double> w(aug.size(), 0.0);
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (aug.mask[i]) w[i] = 1.0 / static_cast<double>(count);
      }
      const Tensor behaviors =
          add(items, gather_rows(params.attention.item_positions, aug.position_ids));
      pooled = matmul(Tensor::vector(std::move(w)), behaviors);
      break;
    }
    case PoolingMode::kTargetAttention: {
      const auto proj = project_items(items, e_t, aug.position_ids, params.attention);
      f.attention = target_attention(proj, aug.mask);
      pooled = f.attention.pooled;
      break;
    }
    case PoolingMode::kSuin: {
      const auto ip = project_items(items, e_t, aug.position_ids, params.attention);
      const auto up = project_users(adapted, aug, params.attention);
      f.attention = user_aware_attention(ip, up, aug.mask, params.attention);
      pooled = f.attention.pooled;
      break;
    }
  }

  if (cfg.variant == Variant::kNoUtaKeepBe) {
    std::vector<double> w(aug.top_k + 1, 0.0);
    std::size_t present = 0;
    for (std::size_t k = 1; k <= aug.top_k; ++k) present += aug.slot_present[k] ? 1 : 0;
    for (std::size_t k = 1; k <= aug.top_k; ++k) {
      if (aug.slot_present[k]) w[k] = 1.0 / static_cast<double>(present);
    }
    const Tensor neighbor_mean = matmul(Tensor::vector(std::move(w)), adapted);
    f.row = concat({pooled, e_t, row(adapted, 0), neighbor_mean});
  } else {
    f.row = concat({pooled, e_t});
  }
  return f;
}

Tensor mlp_logits(const ModelParams& params, const Tensor& x) {
  Tensor h = x;
  for (std::size_t i = 0; i + 1 < params.mlp.size(); ++i) h = relu(params.mlp[i].forward(h));
  return params.mlp.back().forward(h);
}

}  // namespace

Tensor forward_batch(const ModelParams& params, std::span<const SampleInput* const> batch,
                     Rng* dropout_rng) {
  if (batch.empty()) throw DimensionError("empty batch");
  std::vector<Tensor> rows;
  rows.reserve(batch.size());
  for (const SampleInput* s : batch) rows.push_back(sample_features(params, *s, dropout_rng).row);
  const Tensor logits = mlp_logits(params, stack_rows(rows));
  return sigmoid(reshape(logits, {batch.size()}));
}

Tensor forward_batch(const ModelParams& params, std::span<const SampleInput> batch,
                     Rng* dropout_rng) {
  std::vector<const SampleInput*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return forward_batch(params, std::span<const SampleInput* const>(ptrs), dropout_rng);
}

ForwardDetail forward_detail(const ModelParams& params, const SampleInput& sample) {
  Features f = sample_features(params, sample, nullptr);
  ForwardDetail out;
  out.logit = reshape(mlp_logits(params, f.row), {});
  out.probability = sigmoid(out.logit);
  out.attention = f.attention;
  return out;
}

std::vector<double> predict(const ModelParams& params, std::span<const SampleInput> inputs,
                            int threads, std::size_t batch_size) {
  std::vector<double> out(inputs.size());
  batch_size = std::max<std::size_t>(batch_size, 1);
  const std::size_t batches = (inputs.size() + batch_size - 1) / batch_size;
  parallel_chunks(batches, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t lo = b * batch_size;
      const std::size_t hi = std::min(inputs.size(), lo + batch_size);
      const Tensor p = forward_batch(params, inputs.subspan(lo, hi - lo));
      std::copy(p.data().begin(), p.data().end(), out.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Training

bool EarlyStopping::update(double score) {
  ++epoch_;
  improved_ = best_epoch_ == 0 || score > best_;
  if (improved_) {
    best_ = score;
    best_epoch_ = epoch_;
    bad_epochs_ = 0;
    return false;
  }
  return ++bad_epochs_ >= patience_;
}

namespace {

std::vector<double> labels_of(std::span<const SampleInput> inputs) {
  std::vector<double> y;
  y.reserve(inputs.size());
  for (const auto& s : inputs) y.push_back(s.label);
  return y;
}

}  // namespace

TrainResult train_model(const ModelParams& init, std::span<const SampleInput> train,
                        std::span<const SampleInput> val, const TrainConfig& config) {
  if (train.empty()) throw ConfigError("no training samples");
  if (val.empty()) throw ConfigError("no validation samples");
  if (config.batch_size <= 0 || config.max_epochs < 0 || config.patience <= 0 || config.lr < 0) {
    throw ConfigError("train: batch_size > 0, max_epochs >= 0, patience > 0 and lr >= 0 required");
  }
  TrainResult result;
  result.params = init.clone();
  ModelParams params = init.clone();
  Adam opt(params.parameters(), {.lr = config.lr});
  EarlyStopping stopper(config.patience);
  const std::vector<double> val_labels = labels_of(val);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (std::int64_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, 7000 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(derive_seed(config.seed, 8000 + static_cast<std::uint64_t>(epoch)));

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += batch, ++batch_index) {
      const std::size_t hi = std::min(order.size(), lo + batch);
      std::vector<const SampleInput*> ptrs;
      std::vector<double> labels;
      for (std::size_t i = lo; i < hi; ++i) {
        ptrs.push_back(&train[order[i]]);
        labels.push_back(train[order[i]].label);
      }
      const Tensor probs = forward_batch(params, ptrs, &dropout_rng);
      const Tensor loss = bce_loss(probs, labels);
      if (!std::isfinite(loss.item())) {
        throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batch_index));
      }
      opt.zero_grad();
      loss.backward();
      opt.step();
      loss_sum += loss.item() * static_cast<double>(hi - lo);
    }

    const std::vector<double> scores = predict(params, val, config.threads);
    TrainLogRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train.size());
    row.val_auc = auc(scores, val_labels);
    row.val_logloss = logloss(scores, val_labels);
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(row);

    const bool stop = stopper.update(row.val_auc);
    if (stopper.improved()) {
      result.params = params.clone();
      result.best_epoch = epoch;
    }
    if (stop) break;
  }
  if (result.best_epoch == 0) result.params = params.clone();
  return result;
}

std::string train_log_csv(std::span<const TrainLogRow> log, bool include_wall_time) {
  std::string out = "epoch,train_loss,val_auc,val_logloss";
  out += include_wall_time ? ",wall_time_s\n" : "\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.6f", static_cast<long long>(r.epoch),
                  r.train_loss, r.val_auc, r.val_logloss);
    out += buf;
    if (include_wall_time) {
      std::snprintf(buf, sizeof(buf), ",%.3f", r.wall_time_s);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

std::string group_key(const SampleInput& input, Grouping grouping) {
  switch (grouping) {
    case Grouping::kNone:
      return "all";
    case Grouping::kSeqLength:
      return seq_length_bucket(input.history_len);
    case Grouping::kAugRatio: {
      const double original = static_cast<double>(input.aug.slot_lengths.at(0));
      if (original == 0) throw ConsistencyError("target slot is empty");
      return aug_ratio_bucket(static_cast<double>(input.aug.nonpad_count()) / original);
    }
  }
  return "all";
}

EvalReport evaluate(const ModelParams& params, std::span<const SampleInput> inputs,
                    Grouping grouping, int threads) {
  const std::vector<double> scores = predict(params, inputs, threads);
  const std::vector<double> labels = labels_of(inputs);
  std::vector<std::string> keys;
  if (grouping != Grouping::kNone) {
    keys.reserve(inputs.size());
    for (const auto& s : inputs) keys.push_back(group_key(s, grouping));
  }
  return make_report(scores, labels, grouping, keys);
}

}  // namespace suin
