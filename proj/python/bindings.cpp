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

// Python module _suin. Configs cross the boundary as JSON text; the suin
// package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "suin/augmentation.hpp"
#include "suin/config.hpp"
#include "suin/errors.hpp"
#include "suin/metrics.hpp"
#include "suin/pipeline.hpp"
#include "suin/retrieval.hpp"

namespace py = pybind11;
using namespace suin;

namespace {

using NeighborList = std::vector<std::pair<UserId, double>>;

NeighborList to_list(const SimilarUserResult& r) {
  NeighborList out;
  for (const auto& n : r.neighbors) out.emplace_back(n.user, n.score);
  return out;
}

SimilarUserResult from_list(const NeighborList& list) {
  SimilarUserResult r;
  for (const auto& [u, s] : list) r.neighbors.push_back({u, s});
  return r;
}

double similarity(const std::string& measure, const std::vector<double>& a,
                  const std::vector<double>& b) {
  switch (parse_similarity(measure)) {
    case SimilarityMeasure::kCosine: return cosine_similarity(a, b);
    case SimilarityMeasure::kInnerProduct: return inner_product(a, b);
    case SimilarityMeasure::kEuclidean: return euclidean_similarity(a, b);
    case SimilarityMeasure::kJaccard: break;
  }
  throw ConfigError("jaccard compares item sets; use jaccard_similarity");
}

double jaccard(const std::vector<ItemId>& a, const std::vector<ItemId>& b) {
  return jaccard_similarity(item_set(a), item_set(b));
}

// Every user in `users` is treated as a training user.
NeighborList retrieve(const std::vector<UserId>& users,
                      const std::vector<std::vector<double>>& embeddings,
                      const std::vector<std::vector<ItemId>>& items, UserId query_user,
                      std::optional<std::vector<double>> query_embedding,
                      const std::vector<ItemId>& query_items, std::int64_t k,
                      const std::string& measure, std::optional<double> threshold) {
  SplitAssignment splits;
  for (UserId u : users) splits.assign(u, Split::kTrain);
  std::vector<std::vector<ItemId>> sets = items;
  if (sets.empty()) sets.resize(users.size());
  for (auto& s : sets) s = item_set(s);
  const auto pool = RetrievalPool::from_rows(users, embeddings, sets, splits);
  const UserQuery q{query_user, std::move(query_embedding), item_set(query_items)};
  return to_list(retrieve_topk(pool, q, k, parse_similarity(measure), threshold));
}

py::dict augment(UserId user, const std::vector<ItemId>& history, const NeighborList& neighbors,
                 const SequenceTable& histories, std::int64_t seq_len, std::int64_t top_k,
                 const std::string& scheme) {
  auto aug = build_augmented({user, history}, from_list(neighbors), histories, seq_len, top_k);
  aug = assign_position_ids(aug, parse_position_scheme(scheme));
  py::dict d;
  d["items"] = aug.items;
  d["position_ids"] = aug.position_ids;
  d["slot"] = aug.slot;
  d["mask"] = aug.mask;
  d["slot_users"] = aug.slot_users;
  d["slot_lengths"] = aug.slot_lengths;
  d["text"] = render_augmented(aug);
  return d;
}

std::string resolve_config(const std::string& json_text) {
  const auto c = parse_run_config(json_text);
  c.validate();
  return dump_run_config(c);
}

void run_stage(const std::string& stage, const std::string& config_json,
               const std::string& sweep, const std::string& grouping,
               const std::string& split, std::optional<UserId> user, int threads) {
  RunConfig c = parse_run_config(config_json);
  c.validate();
  StageOptions o;
  o.threads = threads;
  o.sweep = sweep;
  o.grouping = parse_grouping(grouping);
  o.eval_split = parse_split(split);
  o.inspect_user = user;
  py::gil_scoped_release release;
  if (stage == "generate") stage_generate(c, o);
  else if (stage == "split") stage_split(c, o);
  else if (stage == "pretrain") stage_pretrain(c, o);
  else if (stage == "build-pool") stage_build_pool(c, o);
  else if (stage == "retrieve") stage_retrieve(c, o);
  else if (stage == "train") stage_train(c, o);
  else if (stage == "evaluate") stage_evaluate(c, o);
  else if (stage == "inspect") stage_inspect(c, o);
  else if (stage == "ablate") stage_ablate(c, o);
  else if (stage == "run") stage_run(c, o);
  else throw ConfigError("unknown stage '" + stage + "'");
}

py::dict run_in_memory(const std::string& config_json, int threads) {
  RunConfig c = parse_run_config(config_json);
  c.validate();
  SettingResult r;
  {
    py::gil_scoped_release release;
    const auto data = prepare_data(c, threads);
    const auto retrieval = run_retrieval(data, c, threads);
    r = run_setting(data, retrieval, c, threads);
  }
  py::list log;
  for (const auto& row : r.train.log) {
    py::dict e;
    e["epoch"] = row.epoch;
    e["train_loss"] = row.train_loss;
    e["val_auc"] = row.val_auc;
    e["val_logloss"] = row.val_logloss;
    log.append(e);
  }
  py::dict d;
  d["test_auc"] = r.test.auc;
  d["test_logloss"] = r.test.logloss;
  d["test_count"] = r.test.count;
  d["best_epoch"] = r.train.best_epoch;
  d["log"] = log;
  return d;
}

}  // namespace

PYBIND11_MODULE(_suin, m) {
  m.doc() = "SUIN similar-user CTR pipeline (C++ core)";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<LeakageError>(m, "LeakageError", base);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<IndexError>(m, "SuinIndexError", base);
  py::register_exception<NumericDomainError>(m, "NumericDomainError", base);
  py::register_exception<EmptyAttentionError>(m, "EmptyAttentionError", base);
  py::register_exception<GraphError>(m, "GraphError", base);
  py::register_exception<DivergenceError>(m, "DivergenceError", base);
  py::register_exception<EmptyHistoryError>(m, "EmptyHistoryError", base);
  py::register_exception<UndefinedSimilarityError>(m, "UndefinedSimilarityError", base);
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", base);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base);
  py::register_exception<IoError>(m, "IoError", base);

  m.def("auc", [](const std::vector<double>& s, const std::vector<double>& y) { return auc(s, y); },
        py::arg("scores"), py::arg("labels"));
  m.def("logloss",
        [](const std::vector<double>& p, const std::vector<double>& y) { return logloss(p, y); },
        py::arg("predictions"), py::arg("labels"));
  m.def("similarity", &similarity, py::arg("measure"), py::arg("a"), py::arg("b"));
  m.def("jaccard_similarity", &jaccard, py::arg("a"), py::arg("b"));
  m.def("retrieve_topk", &retrieve, py::arg("users"), py::arg("embeddings"),
        py::arg("items") = std::vector<std::vector<ItemId>>{}, py::arg("query_user"),
        py::arg("query_embedding") = std::nullopt,
        py::arg("query_items") = std::vector<ItemId>{}, py::arg("k"),
        py::arg("measure") = "cosine", py::arg("threshold") = std::nullopt);
  m.def("augment", &augment, py::arg("user"), py::arg("history"), py::arg("neighbors"),
        py::arg("histories"), py::arg("seq_len"), py::arg("top_k"), py::arg("scheme") = "utpe");
  m.def("position_table_rows", &position_table_rows, py::arg("seq_len"), py::arg("top_k"));
  m.def("resolve_config", &resolve_config, py::arg("json_text"));
  m.def("load_config_text",
        [](const std::filesystem::path& p) { return dump_run_config(load_run_config(p)); },
        py::arg("path"));
  m.def("run_stage", &run_stage, py::arg("stage"), py::arg("config_json"),
        py::arg("sweep") = "variants", py::arg("grouping") = "none", py::arg("split") = "test",
        py::arg("user") = std::nullopt, py::arg("threads") = 1);
  m.def("run_in_memory", &run_in_memory, py::arg("config_json"), py::arg("threads") = 1);
  m.def("sweep_names", &sweep_names);
}
