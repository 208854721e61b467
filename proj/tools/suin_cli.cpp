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

// suin: command-line driver for the retrieval-augmented CTR pipeline.
//
//   suin run --config configs/tiny.json --out runs/tiny
//   suin ablate --config configs/default.json --sweep topk

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "suin/config.hpp"
#include "suin/errors.hpp"
#include "suin/pipeline.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  std::optional<std::int64_t> k;
  std::optional<std::int64_t> l;
  std::string variant;
  std::string measure;
  std::string scheme;
};

suin::RunConfig resolve(const GlobalFlags& f) {
  suin::RunConfig c = f.config.empty() ? suin::parse_run_config("{}")
                                       : suin::load_run_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.k) {
    c.model.top_k = *f.k;
    c.retrieval.top_k = std::max(c.retrieval.top_k, *f.k);
  }
  if (f.l) c.model.seq_len = *f.l;
  if (!f.variant.empty()) c.model.variant = suin::parse_variant(f.variant);
  if (!f.measure.empty()) c.retrieval.measure = suin::parse_similarity(f.measure);
  if (!f.scheme.empty()) c.model.scheme = suin::parse_position_scheme(f.scheme);
  // --out wins; otherwise a relative out_dir lives under $SUIN_OUT when set.
  if (!f.out.empty()) {
    c.out_dir = f.out;
  } else if (const char* root = std::getenv("SUIN_OUT"); root && *root) {
    if (std::filesystem::path(c.out_dir).is_relative()) {
      c.out_dir = (std::filesystem::path(root) / c.out_dir).string();
    }
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similar-user retrieval augmented CTR pipeline"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Run seed (overrides the config)");
  app.add_option("--out", flags.out, "Output directory (overrides config and SUIN_OUT)");
  app.add_option("--threads", flags.threads, "Worker threads for retrieval and evaluation")
      ->check(CLI::PositiveNumber);
  app.add_option("--k", flags.k, "Number of similar users K")->check(CLI::NonNegativeNumber);
  app.add_option("--l", flags.l, "Per-user sequence length L")->check(CLI::PositiveNumber);
  app.add_option("--variant", flags.variant,
                 "full|no_uta|no_uta_keep_be|random_users|no_su_no_uta|no_pos");
  app.add_option("--measure", flags.measure, "cosine|inner_product|euclidean|jaccard");
  app.add_option("--scheme", flags.scheme, "utpe|tpe|stpe|none");
  app.fallthrough();

  suin::StageOptions opts;
  std::string grouping = "none";
  std::string split = "test";
  std::optional<std::int64_t> user;

  auto* generate = app.add_subcommand("generate", "Generate or ingest the interaction corpus");
  auto* split_cmd = app.add_subcommand("split", "Partition users into train/val/test");
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the sequence encoder");
  auto* build_pool = app.add_subcommand("build-pool", "Embed users and build the retrieval pool");
  auto* retrieve = app.add_subcommand("retrieve", "Retrieve similar users for every query");
  auto* train = app.add_subcommand("train", "Train the CTR model");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate the trained model");
  evaluate->add_option("--grouping", grouping, "none|seq_length|aug_ratio");
  evaluate->add_option("--split", split, "val|test");
  auto* inspect = app.add_subcommand("inspect", "Dump one augmented sequence and its attention");
  inspect->add_option("--user", user, "User to inspect (default: first test user)");
  auto* ablate = app.add_subcommand("ablate", "Run an ablation sweep over the configured seeds");
  ablate->add_option("--sweep", opts.sweep,
                     "variants|topk|position_schemes|similarity_measures|thresholds")
      ->required();
  auto* run = app.add_subcommand("run", "generate, split, pretrain, build-pool, retrieve, "
                                        "train and evaluate in one go");

  CLI11_PARSE(app, argc, argv);

  try {
    const suin::RunConfig config = resolve(flags);
    opts.threads = flags.threads;
    opts.grouping = suin::parse_grouping(grouping);
    opts.eval_split = suin::parse_split(split);
    if (opts.eval_split == suin::Split::kTrain) {
      throw suin::ConfigError("evaluate --split must be val or test");
    }
    if (user) opts.inspect_user = *user;
    opts.log = [](const std::string& line) { std::cerr << line << '\n'; };

    if (generate->parsed()) suin::stage_generate(config, opts);
    if (split_cmd->parsed()) suin::stage_split(config, opts);
    if (pretrain->parsed()) suin::stage_pretrain(config, opts);
    if (build_pool->parsed()) suin::stage_build_pool(config, opts);
    if (retrieve->parsed()) suin::stage_retrieve(config, opts);
    if (train->parsed()) suin::stage_train(config, opts);
    if (evaluate->parsed()) suin::stage_evaluate(config, opts);
    if (inspect->parsed()) suin::stage_inspect(config, opts);
    if (ablate->parsed()) {
      const auto names = suin::sweep_names();
      if (std::find(names.begin(), names.end(), opts.sweep) == names.end()) {
        throw suin::ConfigError("unknown sweep '" + opts.sweep + "'");
      }
      suin::stage_ablate(config, opts);
    }
    if (run->parsed()) suin::stage_run(config, opts);
  } catch (const suin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
