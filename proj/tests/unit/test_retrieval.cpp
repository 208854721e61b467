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
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "suin/errors.hpp"
#include "suin/random.hpp"
#include "suin/retrieval.hpp"
#include "temp_dir.hpp"

using namespace suin;
using suin::testing::OracleRow;
using suin::testing::TempDir;

namespace {

SplitAssignment all_train(std::int64_t n) {
  SplitAssignment s;
  for (UserId u = 0; u < n; ++u) s.assign(u, Split::kTrain);
  return s;
}

// Random rows with a few exact duplicates so ties are exercised.
std::vector<OracleRow> random_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<OracleRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].user = static_cast<UserId>(i);
    rows[i].embedding.resize(dim);
    for (auto& v : rows[i].embedding) v = rng.normal();
    for (int j = 0; j < 6; ++j) rows[i].items.push_back(1 + static_cast<ItemId>(rng.below(30)));
    rows[i].items = item_set(rows[i].items);
  }
  for (std::size_t i = 0; i + 7 < n; i += 7) {
    rows[i + 7].embedding = rows[i].embedding;
    rows[i + 7].items = rows[i].items;
  }
  return rows;
}

RetrievalPool pool_from(const std::vector<OracleRow>& rows) {
  std::vector<UserId> users;
  std::vector<std::vector<double>> emb;
  std::vector<std::vector<ItemId>> items;
  for (const auto& r : rows) {
    users.push_back(r.user);
    emb.push_back(r.embedding);
    items.push_back(r.items);
  }
  return RetrievalPool::from_rows(users, emb, items, all_train(static_cast<std::int64_t>(rows.size())));
}

UserQuery query_of(const OracleRow& r) { return {r.user, r.embedding, r.items}; }

constexpr SimilarityMeasure kMeasures[] = {SimilarityMeasure::kCosine,
                                           SimilarityMeasure::kInnerProduct,
                                           SimilarityMeasure::kEuclidean,
                                           SimilarityMeasure::kJaccard};

}  // namespace

TEST_CASE("similarity examples") {
  const std::vector<double> a{3, 4}, b{1, 0}, c{0, 1}, d{1, 2}, e{2, 1};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(b, c) == 0.0);
  CHECK(cosine_similarity(d, e) == doctest::Approx(0.8).epsilon(1e-15));
  const std::vector<ItemId> s1{1, 2, 3}, s2{2, 3, 4};
  CHECK(jaccard_similarity(s1, s2) == 0.5);
  CHECK(euclidean_similarity(a, a) == 0.0);
  CHECK(euclidean_similarity(a, b) < 0.0);
  CHECK(inner_product(d, e) == 4.0);
  const std::vector<double> zero{0, 0};
  CHECK_THROWS_AS(cosine_similarity(a, zero), UndefinedSimilarityError);
}

TEST_CASE("cosine stays within [-1, 1]") {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> x(16);
    for (auto& v : x) v = rng.normal() * std::pow(10.0, rng.uniform(-5, 5));
    std::vector<double> y = x;
    for (auto& v : y) v *= 3.0;
    const double s = cosine_similarity(x, y);
    CHECK(s <= 1.0);
    CHECK(s >= -1.0);
    for (auto& v : y) v = -v;
    CHECK(cosine_similarity(x, y) >= -1.0);
  }
}

TEST_CASE("pool is ordered by user and guarded against leakage") {
  SplitAssignment s;
  s.assign(9, Split::kTrain);
  s.assign(2, Split::kTrain);
  s.assign(5, Split::kTrain);
  s.assign(7, Split::kTest);
  const auto pool = RetrievalPool::from_rows({9, 2, 5}, {{1, 0}, {0, 1}, {1, 1}},
                                             {{1}, {2}, {3}}, s);
  CHECK(pool.size() == 3);
  CHECK(pool.user_ids() == std::vector<UserId>{2, 5, 9});
  CHECK(pool.embedding(0)[1] == 1.0);
  CHECK(pool.split_tag() == "train");
  CHECK_THROWS_AS(RetrievalPool::from_rows({9, 7}, {{1, 0}, {0, 1}}, {{1}, {2}}, s),
                  LeakageError);
  CHECK_THROWS_AS(RetrievalPool::from_rows({9}, {{NAN, 0}}, {{1}}, s), DivergenceError);
}

TEST_CASE("build_pool rejects non-train users and skips empty histories") {
  EncoderConfig ec;
  ec.dim = 8;
  ec.max_len = 10;
  auto enc = EncoderParams::init(20, ec);
  enc.freeze();
  const SequenceTable seqs{{0, {1, 2, 3}}, {1, {4}}, {2, {5, 6}}, {3, {7, 8}}};
  SplitAssignment s;
  for (UserId u : {0, 1, 2}) s.assign(u, Split::kTrain);
  s.assign(3, Split::kVal);
  const std::vector<UserId> train{0, 1, 2};
  const auto pool = build_pool(seqs, s, train, enc);
  // User 1 has a single interaction, so its history prefix is empty.
  CHECK(pool.user_ids() == std::vector<UserId>{0, 2});
  const std::vector<UserId> leaky{0, 3};
  CHECK_THROWS_AS(build_pool(seqs, s, leaky, enc), LeakageError);
}

TEST_CASE("rebuilt pool is byte-identical on disk") {
  TempDir dir("pool_bytes");
  const auto rows = random_rows(50, 8, 3);
  TensorArchive a, b;
  pool_from(rows).save(a);
  pool_from(rows).save(b);
  a.write(dir / "a.bin");
  b.write(dir / "b.bin");
  CHECK(suin::testing::slurp(dir / "a.bin") == suin::testing::slurp(dir / "b.bin"));
  const auto back = RetrievalPool::load(TensorArchive::read(dir / "a.bin"));
  CHECK(back.user_ids() == pool_from(rows).user_ids());
  CHECK(std::equal(back.embedding(4).begin(), back.embedding(4).end(),
                   rows[4].embedding.begin()));
}

TEST_CASE("K = 0 and unattainable thresholds give empty results") {
  const auto rows = random_rows(30, 4, 1);
  const auto pool = pool_from(rows);
  CHECK(retrieve_topk(pool, query_of(rows[0]), 0, SimilarityMeasure::kCosine).neighbors.empty());
  CHECK(retrieve_topk(pool, query_of(rows[0]), 5, SimilarityMeasure::kCosine, 1.0 + 1e-9)
            .neighbors.empty());
  CHECK_THROWS_AS(retrieve_topk(pool, query_of(rows[0]), -1, SimilarityMeasure::kCosine),
                  ConfigError);
}

TEST_CASE("query without an embedding is flagged, not an error") {
  const auto rows = random_rows(10, 4, 2);
  const UserQuery q{99, std::nullopt, {1, 2}};
  const auto r = retrieve_topk(pool_from(rows), q, 3, SimilarityMeasure::kCosine);
  CHECK(r.missing_query);
  CHECK(r.neighbors.empty());
  // Jaccard only needs the item set.
  const auto j = retrieve_topk(pool_from(rows), q, 3, SimilarityMeasure::kJaccard);
  CHECK_FALSE(j.missing_query);
}

TEST_CASE("top-K matches a full-sort oracle, ties included") {
  const auto rows = random_rows(1000, 16, 17);
  const auto pool = pool_from(rows);
  Rng pick(4);
  for (auto m : kMeasures) {
    for (int t = 0; t < 40; ++t) {
      const auto& q = rows[pick.below(rows.size())];
      const auto got = retrieve_topk(pool, query_of(q), 5, m);
      const auto want = suin::testing::brute_force_topk(rows, q.embedding, q.items, q.user, 5, m);
      CHECK(got.neighbors == want);
    }
  }
}

TEST_CASE("threshold drops neighbors scoring below it") {
  const auto rows = random_rows(200, 8, 21);
  const auto pool = pool_from(rows);
  for (double th : {-0.2, 0.0, 0.3}) {
    const auto got = retrieve_topk(pool, query_of(rows[3]), 20, SimilarityMeasure::kCosine, th);
    const auto want = suin::testing::brute_force_topk(rows, rows[3].embedding, rows[3].items, 3,
                                                      20, SimilarityMeasure::kCosine, th);
    CHECK(got.neighbors == want);
    for (const auto& n : got.neighbors) CHECK(n.score >= th);
  }
  const auto full = retrieve_topk(pool, query_of(rows[3]), 20, SimilarityMeasure::kCosine);
  CHECK(apply_threshold(full, 0.3).neighbors ==
        retrieve_topk(pool, query_of(rows[3]), 20, SimilarityMeasure::kCosine, 0.3).neighbors);
}

TEST_CASE("results are sorted, exclude the query and nest across K") {
  const auto rows = random_rows(300, 8, 8);
  const auto pool = pool_from(rows);
  for (auto m : kMeasures) {
    for (std::size_t i = 0; i < 300; i += 37) {
      const auto big = retrieve_topk(pool, query_of(rows[i]), 50, m).neighbors;
      for (std::size_t j = 1; j < big.size(); ++j) CHECK(big[j - 1].score >= big[j].score);
      for (const auto& n : big) CHECK(n.user != rows[i].user);
      for (std::int64_t k1 : {1, 3, 10, 49}) {
        const auto small = retrieve_topk(pool, query_of(rows[i]), k1, m).neighbors;
        CHECK(std::equal(small.begin(), small.end(), big.begin()));
      }
    }
  }
}

TEST_CASE("pool row order and query scale do not change results") {
  auto rows = random_rows(200, 8, 12);
  const auto pool = pool_from(rows);
  auto shuffled = rows;
  Rng rng(1);
  rng.shuffle(shuffled);
  const auto pool2 = pool_from(shuffled);
  for (auto m : kMeasures) {
    CHECK(retrieve_topk(pool, query_of(rows[5]), 10, m).neighbors ==
          retrieve_topk(pool2, query_of(rows[5]), 10, m).neighbors);
  }
  auto scaled = query_of(rows[5]);
  for (auto& v : *scaled.embedding) v *= 3.7;
  const auto a = retrieve_topk(pool, query_of(rows[5]), 10, SimilarityMeasure::kCosine).neighbors;
  const auto b = retrieve_topk(pool, scaled, 10, SimilarityMeasure::kCosine).neighbors;
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].user == b[i].user);
    CHECK(a[i].score == doctest::Approx(b[i].score).epsilon(1e-12));
  }
}

TEST_CASE("batch retrieval is independent of thread count") {
  const auto rows = random_rows(400, 8, 30);
  const auto pool = pool_from(rows);
  std::vector<UserQuery> qs;
  for (std::size_t i = 0; i < rows.size(); i += 3) qs.push_back(query_of(rows[i]));
  const auto one = retrieve_all(pool, qs, 7, SimilarityMeasure::kCosine, std::nullopt, 1);
  const auto four = retrieve_all(pool, qs, 7, SimilarityMeasure::kCosine, std::nullopt, 4);
  REQUIRE(one.size() == qs.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].neighbors == four[i].neighbors);
}

TEST_CASE("neighbor file round trip at six decimals") {
  TempDir dir("neighbors");
  NeighborTable t;
  t[3].neighbors = {{7, 0.91234567}, {1, -0.5}};
  t[4].neighbors = {};
  t[10].neighbors = {{2, 0.25}};
  write_neighbor_file(dir / "n.tsv", t);
  const auto text = suin::testing::slurp(dir / "n.tsv");
  CHECK(text.find("3\t7:0.912346,1:-0.500000\n") != std::string::npos);
  const auto back = read_neighbor_file(dir / "n.tsv");
  REQUIRE(back.size() == 3);
  CHECK(back.at(3).neighbors.size() == 2);
  CHECK(back.at(3).neighbors[0].user == 7);
  CHECK(back.at(3).neighbors[0].score == doctest::Approx(0.912346).epsilon(1e-12));
  CHECK(back.at(4).neighbors.empty());
  // Writing what was read gives the same bytes.
  write_neighbor_file(dir / "m.tsv", back);
  CHECK(suin::testing::slurp(dir / "m.tsv") == text);
  suin::testing::spit(dir / "bad.tsv", "3\t7:x\n");
  CHECK_THROWS_AS(read_neighbor_file(dir / "bad.tsv"), IoError);
}

TEST_CASE("retrieved neighbors share the query's planted cluster") {
  SyntheticConfig sc;
  sc.users = 600;
  sc.items = 200;
  sc.max_length = 30;
  sc.seed = 2;
  const auto corpus = generate_synthetic(sc);
  const auto seqs = group_sequences(corpus.records);
  std::vector<UserId> users;
  for (const auto& [u, _] : seqs) users.push_back(u);
  const auto splits = split_by_user(users, {0.8, 0.1, 0.1}, 1);
  EncoderConfig ec;
  ec.dim = 16;
  ec.max_len = 30;
  ec.epochs = 2;
  const auto enc = pretrain_encoder(seqs, splits, corpus.num_items, ec);
  const auto pool = build_pool(seqs, splits, splits.users(Split::kTrain), enc);
  const auto table = embed_users(seqs, enc);

  double same = 0.0, total = 0.0;
  for (Split sp : {Split::kVal, Split::kTest}) {
    for (UserId u : splits.users(sp)) {
      const auto r = retrieve_topk(pool, make_query(u, table, seqs), 5, SimilarityMeasure::kCosine);
      for (const auto& n : r.neighbors) {
        CHECK(splits.is_train(n.user));
        total += 1.0;
        same += corpus.user_cluster[n.user] == corpus.user_cluster[u] ? 1.0 : 0.0;
      }
    }
  }
  REQUIRE(total > 0.0);
  const double p0 = 1.0 / static_cast<double>(sc.clusters);
  const double sigma = std::sqrt(p0 * (1.0 - p0) / total);
  CHECK(same / total > p0 + 3.0 * sigma);
}

TEST_CASE("prefix table covers shorter histories only") {
  EncoderConfig ec;
  ec.dim = 8;
  ec.max_len = 10;
  auto enc = EncoderParams::init(20, ec);
  enc.freeze();
  const SequenceTable seqs{{0, {1, 2, 3, 4, 5}}, {1, {6, 7, 8}}, {2, {9, 10, 11, 12}}};
  const auto splits = all_train(3);
  const std::vector<UserId> all{0, 1, 2};
  const auto pool = build_pool(seqs, splits, all, enc);
  const auto pre = retrieve_prefixes(seqs, all, pool, enc, 2, SimilarityMeasure::kCosine,
                                     std::nullopt);
  // Lengths 1 .. len-2 per user: 3 + 1 + 2.
  CHECK(pre.size() == 6);
  CHECK(pre.count({0, 3}) == 1);
  CHECK(pre.count({0, 4}) == 0);
  const auto& e = pre.at({0, 2});
  const std::vector<ItemId> head{1, 2};
  const auto direct = encode(0, head, enc);
  CHECK(e.embedding == direct.values);
  for (const auto& n : e.neighbors.neighbors) CHECK(n.user != 0);

  TempDir dir("prefixes");
  TensorArchive ar;
  save_prefix_table(ar, pre, 8);
  ar.write(dir / "p.bin");
  const auto back = load_prefix_table(TensorArchive::read(dir / "p.bin"));
  REQUIRE(back.size() == pre.size());
  for (const auto& [key, entry] : pre) {
    CHECK(back.at(key).embedding == entry.embedding);
    CHECK(back.at(key).neighbors.neighbors == entry.neighbors.neighbors);
  }
}
