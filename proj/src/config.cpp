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

#include "suin/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "suin/errors.hpp"
#include "suin/random.hpp"

namespace suin {

using json = nlohmann::ordered_json;

std::uint64_t RunConfig::stream_seed(std::uint64_t stream) const {
  return derive_seed(seed, stream);
}

void RunConfig::validate() const {
  if (data.source != "synthetic" && data.source != "csv") {
    throw ConfigError("data.source must be 'synthetic' or 'csv', got '" + data.source + "'");
  }
  if (data.source == "csv" && data.interactions.empty()) {
    throw ConfigError("data.interactions is required when data.source is 'csv'");
  }
  if (data.source == "synthetic") data.synthetic.validate();
  const double total = split.train + split.val + split.test;
  if (split.train <= 0 || split.val < 0 || split.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  if (samples.negatives_per_positive < 1) {
    throw ConfigError("samples.negatives_per_positive must be at least 1");
  }
  encoder.validate();
  if (retrieval.top_k < 0) throw ConfigError("retrieval.top_k must be non-negative");
  model.validate();
  if (model.behavior_dim != encoder.dim) {
    throw ConfigError("model behavior width must equal encoder.dim");
  }
  if (train.batch_size <= 0 || train.max_epochs < 0 || train.patience <= 0 || train.lr < 0) {
    throw ConfigError("train: batch_size > 0, max_epochs >= 0, patience > 0, lr >= 0 required");
  }
  if (ablate.seeds.empty()) throw ConfigError("ablate.seeds must not be empty");
  for (auto k : ablate.topk) {
    if (k < 0) throw ConfigError("ablate.topk entries must be non-negative");
  }
}

namespace {

// Walks one JSON object, handing out values by key and rejecting leftovers.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError("unknown key '" + key + "' in " + where());
      }
    }
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = get(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError("");
        if (std::is_unsigned_v<T> && v->template get<long long>() < 0) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError("");
      }
      out = v->template get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where() + "." + key + " has the wrong type");
    }
  }

  template <typename T>
  void read_list(const std::string& key, std::vector<T>& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_array()) throw ConfigError(where() + "." + key + " must be an array");
    std::vector<T> values;
    for (const auto& e : *v) {
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) throw ConfigError(where() + "." + key + " must hold integers");
      } else {
        if (!e.is_number()) throw ConfigError(where() + "." + key + " must hold numbers");
      }
      values.push_back(e.template get<T>());
    }
    out = std::move(values);
  }

  template <typename Fn>
  void read_enum(const std::string& key, Fn parse) {
    std::string text;
    const json* v = get(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(where() + "." + key + " must be a string");
    parse(v->template get<std::string>());
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

 private:
  std::string where() const { return "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_synthetic(const json& j, SyntheticConfig& c) {
  Reader r(j, "data.synthetic");
  r.read("users", c.users);
  r.read("items", c.items);
  r.read("clusters", c.clusters);
  r.read("latent_dim", c.latent_dim);
  r.read("min_length", c.min_length);
  r.read("max_length", c.max_length);
  r.read("length_exponent", c.length_exponent);
  r.read("temperature", c.temperature);
  r.read("cluster_separation", c.cluster_separation);
  r.read("user_noise", c.user_noise);
  r.read("item_noise", c.item_noise);
}

void read_config(const json& root, RunConfig& c) {
  Reader r(root, "config");
  r.read("seed", c.seed);
  r.read("out_dir", c.out_dir);
  if (const json* d = r.get("data")) {
    Reader dr(*d, "data");
    dr.read("source", c.data.source);
    dr.read("interactions", c.data.interactions);
    if (const json* s = dr.get("synthetic")) read_synthetic(*s, c.data.synthetic);
  }
  if (const json* s = r.get("split")) {
    Reader sr(*s, "split");
    sr.read("train", c.split.train);
    sr.read("val", c.split.val);
    sr.read("test", c.split.test);
  }
  if (const json* s = r.get("samples")) {
    Reader sr(*s, "samples");
    sr.read_enum("train_mode", [&](const std::string& t) { c.samples.train_mode = parse_sample_mode(t); });
    sr.read_enum("eval_mode", [&](const std::string& t) { c.samples.eval_mode = parse_sample_mode(t); });
    sr.read("negatives_per_positive", c.samples.negatives_per_positive);
  }
  if (const json* e = r.get("encoder")) {
    Reader er(*e, "encoder");
    er.read("dim", c.encoder.dim);
    er.read("max_len", c.encoder.max_len);
    er.read("blocks", c.encoder.blocks);
    er.read("heads", c.encoder.heads);
    er.read("epochs", c.encoder.epochs);
    er.read("lr", c.encoder.lr);
    er.read("batch_users", c.encoder.batch_users);
  }
  if (const json* e = r.get("retrieval")) {
    Reader rr(*e, "retrieval");
    rr.read("top_k", c.retrieval.top_k);
    rr.read_enum("measure", [&](const std::string& t) { c.retrieval.measure = parse_similarity(t); });
    if (const json* t = rr.get("threshold")) {
      if (t->is_null()) {
        c.retrieval.threshold.reset();
      } else if (t->is_number()) {
        c.retrieval.threshold = t->get<double>();
      } else {
        throw ConfigError("'retrieval'.threshold must be a number or null");
      }
    }
  }
  if (const json* m = r.get("model")) {
    Reader mr(*m, "model");
    mr.read("embedding_dim", c.model.embedding_dim);
    mr.read("seq_len", c.model.seq_len);
    mr.read("top_k", c.model.top_k);
    mr.read_list("mlp_hidden", c.model.mlp_hidden);
    mr.read_list("adapter_hidden", c.model.adapter_hidden);
    mr.read("adapter_dropout", c.model.adapter_dropout);
    mr.read_enum("pooling", [&](const std::string& t) { c.model.pooling = parse_pooling(t); });
    mr.read_enum("variant", [&](const std::string& t) { c.model.variant = parse_variant(t); });
    mr.read_enum("scheme", [&](const std::string& t) { c.model.scheme = parse_position_scheme(t); });
    mr.read("literal_pairing", c.model.literal_pairing);
  }
  if (const json* t = r.get("train")) {
    Reader tr(*t, "train");
    tr.read("lr", c.train.lr);
    tr.read("batch_size", c.train.batch_size);
    tr.read("max_epochs", c.train.max_epochs);
    tr.read("patience", c.train.patience);
  }
  if (const json* a = r.get("ablate")) {
    Reader ar(*a, "ablate");
    ar.read_list("seeds", c.ablate.seeds);
    ar.read_list("topk", c.ablate.topk);
    ar.read_list("thresholds", c.ablate.thresholds);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  read_config(root, c);
  c.model.behavior_dim = c.encoder.dim;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& c) {
  const auto& s = c.data.synthetic;
  json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["data"] = {{"source", c.data.source},
               {"interactions", c.data.interactions},
               {"synthetic",
                {{"users", s.users},
                 {"items", s.items},
                 {"clusters", s.clusters},
                 {"latent_dim", s.latent_dim},
                 {"min_length", s.min_length},
                 {"max_length", s.max_length},
                 {"length_exponent", s.length_exponent},
                 {"temperature", s.temperature},
                 {"cluster_separation", s.cluster_separation},
                 {"user_noise", s.user_noise},
                 {"item_noise", s.item_noise}}}};
  j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
  j["samples"] = {{"train_mode", to_string(c.samples.train_mode)},
                  {"eval_mode", to_string(c.samples.eval_mode)},
                  {"negatives_per_positive", c.samples.negatives_per_positive}};
  j["encoder"] = {{"dim", c.encoder.dim},         {"max_len", c.encoder.max_len},
                  {"blocks", c.encoder.blocks},   {"heads", c.encoder.heads},
                  {"epochs", c.encoder.epochs},   {"lr", c.encoder.lr},
                  {"batch_users", c.encoder.batch_users}};
  j["retrieval"] = {{"top_k", c.retrieval.top_k},
                    {"measure", to_string(c.retrieval.measure)},
                    {"threshold", c.retrieval.threshold ? json(*c.retrieval.threshold) : json()}};
  j["model"] = {{"embedding_dim", c.model.embedding_dim},
                {"seq_len", c.model.seq_len},
                {"top_k", c.model.top_k},
                {"mlp_hidden", c.model.mlp_hidden},
                {"adapter_hidden", c.model.adapter_hidden},
                {"adapter_dropout", c.model.adapter_dropout},
                {"pooling", to_string(c.model.pooling)},
                {"variant", to_string(c.model.variant)},
                {"scheme", to_string(c.model.scheme)},
                {"literal_pairing", c.model.literal_pairing}};
  j["train"] = {{"lr", c.train.lr},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience}};
  j["ablate"] = {{"seeds", c.ablate.seeds},
                 {"topk", c.ablate.topk},
                 {"thresholds", c.ablate.thresholds}};
  return j.dump(2) + "\n";
}

}  // namespace suin
