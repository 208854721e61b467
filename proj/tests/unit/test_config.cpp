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

#include <filesystem>

#include "doctest.h"
#include "suin/config.hpp"
#include "suin/errors.hpp"

using namespace suin;

namespace {

std::string error_of(const std::string& json) {
  try {
    parse_run_config(json);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty object gives the defaults") {
  const auto c = parse_run_config("{}");
  CHECK(c.seed == 1);
  CHECK(c.model.seq_len == 10);
  CHECK(c.samples.train_mode == SampleMode::kLastItem);
  CHECK(c.train.patience == 1);
  CHECK(c.model.behavior_dim == c.encoder.dim);
}

TEST_CASE("shipped configs load") {
  const std::filesystem::path root = SUIN_SOURCE_DIR;
  const auto def = load_run_config(root / "configs" / "default.json");
  CHECK(def.data.synthetic.users == 2000);
  CHECK(def.samples.eval_mode == SampleMode::kAllPositions);
  CHECK(def.train.batch_size == 32);
  const auto tiny = load_run_config(root / "configs" / "tiny.json");
  CHECK(tiny.model.behavior_dim == 8);
  CHECK_THROWS_AS(load_run_config(root / "configs" / "absent.json"), ConfigError);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK(error_of(R"({"sed": 3})").find("unknown key 'sed'") != std::string::npos);
  CHECK(error_of(R"({"data": {"synthetic": {"user": 5}}})").find("'user'") != std::string::npos);
  CHECK(error_of(R"({"model": {"topk": 2}})").find("'model'") != std::string::npos);
  CHECK(error_of(R"({"train": {"epochs": 2}})").find("'epochs'") != std::string::npos);
  CHECK(error_of(R"({"ablate": {"seed": [1]}})").find("'seed'") != std::string::npos);
  CHECK(error_of(R"({"retrieval": {"k": 1}})").find("'k'") != std::string::npos);
}

TEST_CASE("wrong types and bad values are rejected") {
  CHECK_FALSE(error_of(R"({"seed": "one"})").empty());
  CHECK_FALSE(error_of(R"({"seed": -1})").empty());
  CHECK_FALSE(error_of(R"({"model": {"seq_len": 2.5}})").empty());
  CHECK_FALSE(error_of(R"({"model": {"mlp_hidden": [200, "x"]}})").empty());
  CHECK_FALSE(error_of(R"({"model": {"variant": "nope"}})").empty());
  CHECK_FALSE(error_of(R"({"retrieval": {"measure": "manhattan"}})").empty());
  CHECK_FALSE(error_of(R"({"retrieval": {"threshold": "high"}})").empty());
  CHECK_FALSE(error_of(R"({"split": {"train": 0.5, "val": 0.1, "test": 0.1}})").empty());
  CHECK_FALSE(error_of(R"({"train": {"patience": 0}})").empty());
  CHECK_FALSE(error_of(R"({"data": {"source": "parquet"}})").empty());
  CHECK_FALSE(error_of(R"({"data": {"source": "csv"}})").empty());
  CHECK_FALSE(error_of("{").empty());
  CHECK_FALSE(error_of("[]").empty());
}

TEST_CASE("threshold accepts a number or null") {
  CHECK(parse_run_config(R"({"retrieval": {"threshold": 0.5}})").retrieval.threshold == 0.5);
  CHECK_FALSE(parse_run_config(R"({"retrieval": {"threshold": null}})").retrieval.threshold);
}

TEST_CASE("dump and parse round trip") {
  auto c = parse_run_config(R"({
    "seed": 9,
    "samples": {"eval_mode": "all_positions"},
    "retrieval": {"measure": "jaccard", "threshold": 0.25},
    "model": {"variant": "no_pos", "scheme": "stpe", "mlp_hidden": [7]},
    "ablate": {"thresholds": [0.1]}
  })");
  const auto text = dump_run_config(c);
  const auto back = parse_run_config(text);
  CHECK(dump_run_config(back) == text);
  CHECK(back.seed == 9);
  CHECK(back.retrieval.measure == SimilarityMeasure::kJaccard);
  CHECK(back.model.scheme == PositionScheme::kStpe);
  CHECK(back.model.mlp_hidden == std::vector<std::int64_t>{7});
}
