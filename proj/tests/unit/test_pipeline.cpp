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
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "suin/errors.hpp"
#include "suin/pipeline.hpp"
#include "temp_dir.hpp"

using namespace suin;
using suin::testing::slurp;
using suin::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config(const fs::path& out) {
  auto c = load_run_config(fs::path(SUIN_SOURCE_DIR) / "configs" / "tiny.json");
  c.out_dir = out.string();
  return c;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(SUIN_CLI_PATH) + " " + args + " 2>/dev/null";
  return std::system(cmd.c_str());
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("stages run end to end and leave manifests") {
  TempDir dir("pipe_stages");
  const auto c = tiny_config(dir.path());
  StageOptions o;
  stage_run(c, o);
  for (const char* f : {artifacts::kInteractions, artifacts::kSplits, artifacts::kEncoder,
                        artifacts::kPool, artifacts::kNeighbors, artifacts::kPrefixes,
                        artifacts::kModel, artifacts::kTrainLog, artifacts::kResolvedConfig,
                        "eval_test_none.csv", "train.manifest"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  CHECK(slurp(dir / "eval_test_none.csv").rfind("group,count,auc,logloss\nall,", 0) == 0);

  o.grouping = Grouping::kSeqLength;
  stage_evaluate(c, o);
  CHECK(line_count(slurp(dir / "eval_test_seq_length.csv")) > 2);
  o.grouping = Grouping::kAugRatio;
  o.eval_split = Split::kVal;
  stage_evaluate(c, o);
  CHECK(fs::exists(dir / "eval_val_aug_ratio.csv"));
}

TEST_CASE("missing upstream artifacts name the stage to run") {
  TempDir dir("pipe_missing");
  const auto c = tiny_config(dir.path());
  StageOptions o;
  try {
    stage_train(c, o);
    FAIL("stage_train ran without inputs");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("run `suin generate` first") != std::string::npos);
  }
  stage_generate(c, o);
  stage_split(c, o);
  try {
    stage_build_pool(c, o);
    FAIL("stage_build_pool ran without an encoder");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("run `suin pretrain` first") != std::string::npos);
  }
  auto other = c;
  other.seed = 2;
  CHECK_THROWS_AS(stage_pretrain(other, o), ConsistencyError);
}

TEST_CASE("retrieval file holds train-only neighbors and round trips") {
  TempDir dir("pipe_neighbors");
  const auto c = tiny_config(dir.path());
  StageOptions o;
  stage_generate(c, o);
  stage_split(c, o);
  stage_pretrain(c, o);
  stage_build_pool(c, o);
  stage_retrieve(c, o);
  const auto splits = read_splits_csv(dir / artifacts::kSplits);
  const auto pool = RetrievalPool::load(TensorArchive::read(dir / artifacts::kPool));
  for (UserId u : pool.user_ids()) CHECK(splits.is_train(u));
  const auto table = read_neighbor_file(dir / artifacts::kNeighbors);
  std::size_t queried_eval = 0;
  for (const auto& [u, r] : table) {
    if (!splits.is_train(u)) ++queried_eval;
    CHECK(r.neighbors.size() <= static_cast<std::size_t>(c.retrieval.top_k));
    for (const auto& n : r.neighbors) {
      CHECK(splits.is_train(n.user));
      CHECK(n.user != u);
    }
  }
  CHECK(queried_eval > 0);
  // What train reads back is what an in-memory retrieval produces, to the
  // six decimals the file keeps.
  const auto data = prepare_data(c);
  const auto mem = run_retrieval(data, c);
  REQUIRE(mem.neighbors.size() == table.size());
  for (const auto& [u, r] : mem.neighbors) {
    const auto& back = table.at(u).neighbors;
    REQUIRE(back.size() == r.neighbors.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].user == r.neighbors[i].user);
      CHECK(std::abs(back[i].score - r.neighbors[i].score) <= 5e-7);
    }
  }
}

TEST_CASE("CLI rerun with the same config is byte-identical") {
  TempDir a("pipe_cli_a"), b("pipe_cli_b");
  const std::string cfg = std::string(SUIN_SOURCE_DIR) + "/configs/tiny.json";
  REQUIRE(cli("--config " + cfg + " --out " + a.path().string() + " run") == 0);
  REQUIRE(cli("--config " + cfg + " --out " + b.path().string() + " run") == 0);
  for (const auto& e : fs::directory_iterator(a.path())) {
    const auto name = e.path().filename().string();
    if (name == artifacts::kResolvedConfig) continue;  // records out_dir
    if (name == artifacts::kTrainLog) {
      const auto strip = [](const std::string& text) {
        std::string out;
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
        return out;
      };
      CHECK(strip(slurp(e.path())) == strip(slurp(b / name)));
      continue;
    }
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / name), name);
  }
}

TEST_CASE("CLI reports bad input with a non-zero exit") {
  TempDir dir("pipe_cli_err");
  const std::string cfg = std::string(SUIN_SOURCE_DIR) + "/configs/tiny.json";
  const std::string out = " --out " + dir.path().string();
  CHECK(cli("--config " + cfg + out + " train") != 0);
  CHECK(cli("--config " + cfg + out + " --variant bogus run") != 0);
  CHECK(cli("--config " + cfg + out + " ablate --sweep nothing") != 0);
  CHECK(cli("--config " + cfg + out + " evaluate --split train") != 0);
  CHECK(cli("--config /nonexistent.json run") != 0);
}

TEST_CASE("CLI overrides, inspect and the variants sweep") {
  TempDir dir("pipe_cli_ablate");
  const std::string cfg = std::string(SUIN_SOURCE_DIR) + "/configs/tiny.json";
  const std::string out = " --out " + dir.path().string();
  REQUIRE(cli("--config " + cfg + out + " --k 3 --scheme stpe run") == 0);
  const auto resolved = load_run_config(dir / artifacts::kResolvedConfig);
  CHECK(resolved.model.top_k == 3);
  CHECK(resolved.model.scheme == PositionScheme::kStpe);

  const auto test = read_splits_csv(dir / artifacts::kSplits).users(Split::kTest);
  REQUIRE_FALSE(test.empty());
  const auto u = std::to_string(test.front());
  REQUIRE(cli("--config " + cfg + out + " --k 3 --scheme stpe inspect --user " + u) == 0);
  CHECK(slurp(dir / ("inspect_" + u + ".txt")).find("slot") != std::string::npos);
  CHECK(fs::exists(dir / ("attention_" + u + ".csv")));

  REQUIRE(cli("--config " + cfg + out + " ablate --sweep variants") == 0);
  const auto table = slurp(dir / "ablation_variants.csv");
  CHECK(line_count(table) == 7);  // header and six variants
  for (const char* v : {"full", "no_uta", "no_uta_keep_be", "random_users", "no_su_no_uta", "no_pos"}) {
    CHECK(table.find(std::string("\n") + v + ",") != std::string::npos);
  }
  CHECK(table.find("failed") == std::string::npos);
  // Two seeds per setting in the tiny config.
  CHECK(line_count(slurp(dir / "ablation_variants_runs.csv")) == 13);
}

TEST_CASE("sweep settings") {
  const RunConfig base;
  CHECK(sweep_settings(base, "variants").size() == 6);
  const auto topk = sweep_settings(base, "topk");
  REQUIRE(topk.size() == 7);
  CHECK(topk.front().name == "K=0");
  for (const auto& s : topk) CHECK(s.config.retrieval.top_k == 6);
  const auto th = sweep_settings(base, "thresholds");
  CHECK(th.front().config.model.variant == Variant::kNoSuNoUta);
  CHECK(th.back().config.retrieval.threshold == 0.9);
  CHECK_THROWS_AS(sweep_settings(base, "nope"), ConfigError);
}

TEST_CASE("sweep summary statistics") {
  std::vector<SweepRun> runs{{"a", 1, true, 0.6, 0.5, ""}, {"a", 2, true, 0.8, 0.7, ""},
                             {"b", 1, true, 0.7, 0.6, ""}, {"b", 2, false, 0, 0, "boom"}};
  const auto rows = summarize_sweep(runs, {"a", "b"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].auc_mean == doctest::Approx(0.7));
  CHECK(rows[0].auc_std == doctest::Approx(std::sqrt(0.02)));
  CHECK(rows[0].delta_auc == 0.0);
  CHECK(rows[1].runs_ok == 1);
  CHECK(rows[1].delta_auc == doctest::Approx(0.0));
  const auto csv = sweep_runs_csv(runs);
  CHECK(csv.find("b,2,failed,,,\"boom\"") != std::string::npos);
}
