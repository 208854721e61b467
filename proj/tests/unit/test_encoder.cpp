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

#include <cmath>

#include "doctest.h"
#include "suin/encoder.hpp"
#include "suin/errors.hpp"
#include "suin/retrieval.hpp"
#include "temp_dir.hpp"

using namespace suin;

namespace {

EncoderConfig small_encoder() {
  EncoderConfig c;
  c.dim = 8;
  c.max_len = 12;
  c.seed = 5;
  return c;
}

struct Corpus {
  SyntheticCorpus raw;
  SequenceTable seqs;
  SplitAssignment splits;
};

Corpus corpus(std::int64_t users, std::uint64_t seed) {
  SyntheticConfig sc;
  sc.users = users;
  sc.items = 120;
  sc.max_length = 25;
  sc.seed = seed;
  Corpus c;
  c.raw = generate_synthetic(sc);
  c.seqs = group_sequences(c.raw.records);
  std::vector<UserId> ids;
  for (const auto& [u, _] : c.seqs) ids.push_back(u);
  c.splits = split_by_user(ids, {0.8, 0.1, 0.1}, 1);
  return c;
}

ParamList params_of(const EncoderParams& p) { return p.parameters(); }

bool same_params(const EncoderParams& a, const EncoderParams& b) {
  const auto pa = params_of(a), pb = params_of(b);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const auto x = pa[i].tensor.data(), y = pb[i].tensor.data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return cosine_similarity(a, b);
}

}  // namespace

TEST_CASE("zero blocks reduce a single item to its embeddings") {
  const auto cfg = small_encoder();
  const auto p = EncoderParams::init_zero_blocks(30, cfg);
  const std::vector<ItemId> seq{7};
  const auto e = encode(1, seq, p);
  REQUIRE(e.values.size() == 8);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(e.values[j] == p.item_table.at(7, j) + p.position_table.at(11, j));
  }
}

TEST_CASE("encoding is deterministic and order sensitive") {
  const auto p = EncoderParams::init(30, small_encoder());
  const std::vector<ItemId> a{3, 9, 4}, b{9, 3, 4};
  CHECK(encode(1, a, p).values == encode(1, a, p).values);
  const auto ea = encode(1, a, p).values, eb = encode(1, b, p).values;
  double diff = 0.0;
  for (std::size_t j = 0; j < ea.size(); ++j) diff += std::abs(ea[j] - eb[j]);
  CHECK(diff > 1e-6);
}

TEST_CASE("hidden states are causal") {
  const auto p = EncoderParams::init(30, small_encoder());
  const std::vector<ItemId> a{3, 9, 4, 12, 1}, b{3, 9, 4, 20, 25};
  // Same length keeps the position rows aligned; only items after t = 2 differ.
  const Tensor ha = encode_hidden(a, p), hb = encode_hidden(b, p);
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t j = 0; j < 8; ++j) CHECK(ha.at(t, j) == hb.at(t, j));
  }
  double diff = 0.0;
  for (std::size_t j = 0; j < 8; ++j) diff += std::abs(ha.at(4, j) - hb.at(4, j));
  CHECK(diff > 0.0);
}

TEST_CASE("long sequences keep only the latest max_len items") {
  const auto p = EncoderParams::init(40, small_encoder());
  std::vector<ItemId> longer;
  for (ItemId i = 1; i <= 20; ++i) longer.push_back(i);
  const std::vector<ItemId> tail(longer.end() - 12, longer.end());
  CHECK(encode(1, longer, p).values == encode(1, tail, p).values);
}

TEST_CASE("empty histories") {
  const auto p = EncoderParams::init(10, small_encoder());
  const std::vector<ItemId> none;
  CHECK_THROWS_AS(encode(1, none, p), EmptyHistoryError);
  const auto z = encode_or_empty(1, none, p);
  CHECK(z.empty_history);
  CHECK(z.values == std::vector<double>(8, 0.0));
}

TEST_CASE("multi-head encoder needs a divisible width") {
  auto cfg = small_encoder();
  cfg.heads = 3;
  CHECK_THROWS_AS(EncoderParams::init(10, cfg), ConfigError);
  cfg.heads = 2;
  const auto p = EncoderParams::init(10, cfg);
  const std::vector<ItemId> seq{1, 2, 3};
  CHECK(encode(0, seq, p).values.size() == 8);
}

TEST_CASE("pretraining lowers the loss") {
  const auto c = corpus(100, 4);
  auto cfg = small_encoder();
  cfg.epochs = 6;
  cfg.lr = 0.01;
  PretrainLog log;
  const auto p = pretrain_encoder(c.seqs, c.splits, c.raw.num_items, cfg, &log);
  REQUIRE(log.epoch_loss.size() == 6);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
  CHECK(p.frozen);
}

TEST_CASE("lr = 0 leaves parameters at their initial values") {
  const auto c = corpus(100, 4);
  auto cfg = small_encoder();
  cfg.lr = 0.0;
  const auto trained = pretrain_encoder(c.seqs, c.splits, c.raw.num_items, cfg);
  CHECK(same_params(trained, EncoderParams::init(c.raw.num_items, cfg)));
}

TEST_CASE("seeded pretraining is bit-reproducible") {
  const auto c = corpus(100, 4);
  const auto cfg = small_encoder();
  const auto a = pretrain_encoder(c.seqs, c.splits, c.raw.num_items, cfg);
  const auto b = pretrain_encoder(c.seqs, c.splits, c.raw.num_items, cfg);
  CHECK(same_params(a, b));
}

TEST_CASE("pretraining never reads validation or test users") {
  auto c = corpus(100, 4);
  const auto cfg = small_encoder();
  const auto a = pretrain_encoder(c.seqs, c.splits, c.raw.num_items, cfg);
  for (Split s : {Split::kVal, Split::kTest}) {
    for (UserId u : c.splits.users(s)) c.seqs[u] = {1, 2, 3, 4, 5, 6};
  }
  const auto b = pretrain_encoder(c.seqs, c.splits, c.raw.num_items, cfg);
  CHECK(same_params(a, b));

  SplitAssignment none;
  for (const auto& [u, _] : c.seqs) none.assign(u, Split::kTest);
  CHECK_THROWS_AS(pretrain_encoder(c.seqs, none, c.raw.num_items, cfg), ConfigError);
}

TEST_CASE("parameters survive a save and load") {
  suin::testing::TempDir dir("encoder_io");
  const auto p = EncoderParams::init(30, small_encoder());
  TensorArchive ar;
  p.save(ar);
  ar.write(dir / "e.bin");
  const auto back = EncoderParams::load(TensorArchive::read(dir / "e.bin"));
  CHECK(back.frozen);
  CHECK(same_params(p, back));
  const std::vector<ItemId> seq{4, 5, 6};
  CHECK(encode(0, seq, p).values == encode(0, seq, back).values);
}

TEST_CASE("behavior embeddings cluster by planted group") {
  const auto c = corpus(400, 6);
  const auto p = pretrain_encoder(c.seqs, c.splits, c.raw.num_items, small_encoder());
  std::vector<std::pair<int, std::vector<double>>> emb;
  for (const auto& [u, seq] : c.seqs) {
    const auto h = history_prefix(seq);
    if (!h.empty()) emb.push_back({c.raw.user_cluster[u], encode(u, h, p).values});
  }
  double intra = 0.0, inter = 0.0;
  std::size_t ni = 0, nx = 0;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    for (std::size_t j = i + 1; j < emb.size(); ++j) {
      const double s = cosine(emb[i].second, emb[j].second);
      if (emb[i].first == emb[j].first) {
        intra += s;
        ++ni;
      } else {
        inter += s;
        ++nx;
      }
    }
  }
  CHECK(intra / static_cast<double>(ni) > inter / static_cast<double>(nx));
}
