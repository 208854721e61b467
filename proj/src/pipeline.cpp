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

#include "suin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

#include "suin/errors.hpp"
#include "suin/random.hpp"

namespace suin {

namespace fs = std::filesystem;

Corpus make_corpus(const RunConfig& config) {
  Corpus c;
  if (config.data.source == "synthetic") {
    SyntheticConfig s = config.data.synthetic;
    s.seed = config.stream_seed(streams::kData);
    SyntheticCorpus g = generate_synthetic(s);
    c.records = std::move(g.records);
    c.num_items = g.num_items;
    c.user_cluster = std::move(g.user_cluster);
    c.item_cluster = std::move(g.item_cluster);
  } else {
    IngestResult r = ingest_interactions_csv(config.data.interactions);
    c.records = std::move(r.records);
    c.num_items = r.num_items;
  }
  c.sequences = group_sequences(c.records);
  return c;
}

SampleSet make_split_samples(const RunConfig& config, const SequenceTable& sequences,
                             const SplitAssignment& splits, Split split,
                             std::int64_t num_items) {
  const SampleMode mode =
      split == Split::kTrain ? config.samples.train_mode : config.samples.eval_mode;
  const std::uint64_t stream = split == Split::kTrain ? streams::kTrainSamples
                               : split == Split::kVal ? streams::kValSamples
                                                      : streams::kTestSamples;
  return make_samples(sequences, splits.users(split), mode, num_items,
                      config.samples.negatives_per_positive, config.stream_seed(stream));
}

PreparedData prepare_data(const RunConfig& config, int threads) {
  return prepare_data(config, make_corpus(config), threads);
}

PreparedData prepare_data(const RunConfig& config, Corpus corpus, int threads) {
  (void)threads;
  PreparedData d;
  d.corpus = std::move(corpus);
  std::vector<UserId> users;
  for (const auto& [u, _] : d.corpus.sequences) users.push_back(u);
  d.splits = split_by_user(users, config.split, config.stream_seed(streams::kSplit));
  EncoderConfig enc = config.encoder;
  enc.seed = config.stream_seed(streams::kEncoder);
  d.encoder = pretrain_encoder(d.corpus.sequences, d.splits, d.corpus.num_items, enc,
                               &d.pretrain_log);
  d.embeddings = embed_users(d.corpus.sequences, d.encoder);
  d.pool = build_pool(d.embeddings, d.corpus.sequences, d.splits, d.splits.users(Split::kTrain));
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    SampleSet set = make_split_samples(config, d.corpus.sequences, d.splits, s, d.corpus.num_items);
    (s == Split::kTrain ? d.train : s == Split::kVal ? d.val : d.test) = std::move(set);
  }
  return d;
}

RetrievalArtifacts run_retrieval(const SequenceTable& sequences,
                                 const RetrievalPool& pool, const EmbeddingTable& embeddings,
                                 const EncoderParams& encoder, const RetrievalConfig& settings,
                                 std::span<const UserId> prefix_users, int threads) {
  RetrievalArtifacts out;
  out.settings = settings;
  std::vector<UserQuery> queries;
  for (const auto& [u, seq] : sequences) {
    if (seq.size() >= 2) queries.push_back(make_query(u, embeddings, sequences));
  }
  auto results =
      retrieve_all(pool, queries, settings.top_k, settings.measure, settings.threshold, threads);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out.neighbors.emplace(queries[i].user, std::move(results[i]));
  }
  if (!prefix_users.empty()) {
    out.prefixes = retrieve_prefixes(sequences, prefix_users, pool, encoder,
                                     settings.top_k, settings.measure, settings.threshold, threads);
  }
  return out;
}

RetrievalArtifacts run_retrieval(const PreparedData& data, const RunConfig& config,
                                 int threads) {
  return run_retrieval(data.corpus.sequences, data.pool, data.embeddings,
                       data.encoder, config.retrieval, prefix_users(config, data.splits), threads);
}

std::vector<UserId> prefix_users(const RunConfig& config, const SplitAssignment& splits) {
  std::vector<UserId> users;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    const SampleMode mode =
        s == Split::kTrain ? config.samples.train_mode : config.samples.eval_mode;
    if (mode != SampleMode::kAllPositions) continue;
    const auto& part = splits.users(s);
    users.insert(users.end(), part.begin(), part.end());
  }
  std::sort(users.begin(), users.end());
  return users;
}

InputSources make_input_sources(const SequenceTable& sequences, const RetrievalPool& pool,
                                const EmbeddingTable& embeddings,
                                const RetrievalArtifacts& retrieval) {
  InputSources src;
  src.sequences = &sequences;
  src.embeddings = &embeddings;
  src.neighbors = &retrieval.neighbors;
  src.prefixes = &retrieval.prefixes;
  src.retrieved_top_k = retrieval.settings.top_k;
  src.random_candidates = pool.user_ids();
  return src;
}

namespace {

ModelConfig model_config_for(const RunConfig& config, const EncoderParams& encoder) {
  ModelConfig m = config.model;
  m.behavior_dim = encoder.dim;
  return m;
}

std::vector<SampleInput> inputs_for(const SampleSet& set, const InputSources& src,
                                    const ModelConfig& model, const RunConfig& config,
                                    Split split, int threads) {
  const std::uint64_t seed =
      derive_seed(config.stream_seed(streams::kRandomUsers), static_cast<std::uint64_t>(split));
  return build_inputs(set.samples, src, model, seed, threads);
}

TrainConfig train_config_for(const RunConfig& config, int threads) {
  TrainConfig t = config.train;
  t.seed = config.stream_seed(streams::kTraining);
  t.threads = threads;
  return t;
}

}  // namespace

SettingResult run_setting(const PreparedData& data, const RetrievalArtifacts& retrieval,
                          const RunConfig& config, int threads) {
  const ModelConfig model = model_config_for(config, data.encoder);
  const InputSources src =
      make_input_sources(data.corpus.sequences, data.pool, data.embeddings, retrieval);
  const auto train = inputs_for(data.train, src, model, config, Split::kTrain, threads);
  const auto val = inputs_for(data.val, src, model, config, Split::kVal, threads);
  const auto test = inputs_for(data.test, src, model, config, Split::kTest, threads);
  const ModelParams init =
      ModelParams::init(data.corpus.num_items, model, config.stream_seed(streams::kModelInit));
  SettingResult r;
  r.train = train_model(init, train, val, train_config_for(config, threads));
  r.test = evaluate(r.train.params, test, Grouping::kNone, threads);
  return r;
}

// ---------------------------------------------------------------------------
// File-based stages

namespace {

void say(const StageOptions& o, const std::string& line) {
  if (o.log) o.log(line);
}

fs::path out_path(const RunConfig& c, const std::string& name) { return fs::path(c.out_dir) / name; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

void begin_stage(const RunConfig& c) {
  fs::create_directories(c.out_dir);
  write_text(out_path(c, artifacts::kResolvedConfig), dump_run_config(c));
}

// Upstream artifact check: the file must exist and its producing stage must
// have finished with the same seed.
void require(const RunConfig& c, const std::string& artifact, const std::string& stage) {
  const fs::path path = out_path(c, artifact);
  const fs::path manifest = out_path(c, stage + ".manifest");
  if (!fs::exists(path) || !fs::exists(manifest)) {
    throw IoError("missing " + path.string() + "; run `suin " + stage + "` first");
  }
  const Manifest m = Manifest::read(manifest);
  if (m.get("seed") != std::to_string(c.seed)) {
    throw ConsistencyError(path.string() + " was produced with seed " + m.get("seed") +
                           ", this run uses seed " + std::to_string(c.seed) + "; rerun `suin " +
                           stage + "`");
  }
}

void finish_stage(const RunConfig& c, const std::string& stage, Manifest m,
                  const std::vector<std::string>& outputs) {
  m.set("stage", stage);
  m.set("seed", std::to_string(c.seed));
  std::string list;
  for (const auto& o : outputs) list += (list.empty() ? "" : ",") + o;
  m.set("outputs", list);
  m.write(out_path(c, stage + ".manifest"));
}

TensorArchive read_archive(const RunConfig& c, const std::string& name) {
  return TensorArchive::read(out_path(c, name));
}

SequenceTable load_sequences(const RunConfig& c) {
  require(c, artifacts::kInteractions, "generate");
  return group_sequences(read_interactions_csv(out_path(c, artifacts::kInteractions)));
}

std::int64_t load_num_items(const RunConfig& c) {
  return Manifest::read(out_path(c, "generate.manifest")).get_int("num_items");
}

SplitAssignment load_splits(const RunConfig& c) {
  require(c, artifacts::kSplits, "split");
  return read_splits_csv(out_path(c, artifacts::kSplits));
}

EncoderParams load_encoder(const RunConfig& c) {
  require(c, artifacts::kEncoder, "pretrain");
  return EncoderParams::load(read_archive(c, artifacts::kEncoder));
}

struct RetrievalFiles {
  EmbeddingTable embeddings;
  RetrievalPool pool;
  RetrievalArtifacts retrieval;
};

RetrievalFiles load_retrieval(const RunConfig& c) {
  require(c, artifacts::kEmbeddings, "build-pool");
  require(c, artifacts::kPool, "build-pool");
  require(c, artifacts::kNeighbors, "retrieve");
  RetrievalFiles f;
  f.embeddings = EmbeddingTable::load(read_archive(c, artifacts::kEmbeddings));
  f.pool = RetrievalPool::load(read_archive(c, artifacts::kPool));
  const Manifest m = Manifest::read(out_path(c, "retrieve.manifest"));
  f.retrieval.settings.top_k = m.get_int("top_k");
  f.retrieval.settings.measure = parse_similarity(m.get("measure"));
  if (m.get("threshold") != "none") f.retrieval.settings.threshold = std::stod(m.get("threshold"));
  f.retrieval.neighbors = read_neighbor_file(out_path(c, artifacts::kNeighbors));
  if (fs::exists(out_path(c, artifacts::kPrefixes))) {
    f.retrieval.prefixes = load_prefix_table(read_archive(c, artifacts::kPrefixes));
  }
  return f;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void stage_generate(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  say(o, "generate: building corpus from " + c.data.source + " source");
  Corpus corpus = make_corpus(c);
  write_interactions_csv(out_path(c, artifacts::kInteractions), corpus.records);
  std::vector<std::string> outputs{artifacts::kInteractions};
  if (!corpus.user_cluster.empty()) {
    write_clusters_csv(out_path(c, artifacts::kClusters), corpus.user_cluster);
    outputs.push_back(artifacts::kClusters);
  }
  Manifest m;
  m.set("source", c.data.source);
  m.set("num_users", static_cast<std::int64_t>(corpus.sequences.size()));
  m.set("num_items", corpus.num_items);
  m.set("num_records", static_cast<std::int64_t>(corpus.records.size()));
  finish_stage(c, "generate", m, outputs);
  say(o, "generate: " + std::to_string(corpus.sequences.size()) + " users, " +
             std::to_string(corpus.num_items) + " items, " +
             std::to_string(corpus.records.size()) + " interactions");
}

void stage_split(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const SequenceTable seqs = load_sequences(c);
  std::vector<UserId> users;
  for (const auto& [u, _] : seqs) users.push_back(u);
  const SplitAssignment splits = split_by_user(users, c.split, c.stream_seed(streams::kSplit));
  write_splits_csv(out_path(c, artifacts::kSplits), splits);
  Manifest m;
  m.set("train_users", static_cast<std::int64_t>(splits.users(Split::kTrain).size()));
  m.set("val_users", static_cast<std::int64_t>(splits.users(Split::kVal).size()));
  m.set("test_users", static_cast<std::int64_t>(splits.users(Split::kTest).size()));
  finish_stage(c, "split", m, {artifacts::kSplits});
  say(o, "split: " + m.get("train_users") + "/" + m.get("val_users") + "/" +
             m.get("test_users") + " users");
}

void stage_pretrain(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const SequenceTable seqs = load_sequences(c);
  const SplitAssignment splits = load_splits(c);
  EncoderConfig enc = c.encoder;
  enc.seed = c.stream_seed(streams::kEncoder);
  PretrainLog log;
  const EncoderParams encoder = pretrain_encoder(seqs, splits, load_num_items(c), enc, &log);
  TensorArchive ar;
  encoder.save(ar);
  ar.write(out_path(c, artifacts::kEncoder));
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
    csv += std::to_string(e + 1) + "," + fmt6(log.epoch_loss[e]) + "\n";
  }
  write_text(out_path(c, artifacts::kPretrainLog), csv);
  Manifest m;
  m.set("dim", encoder.dim);
  m.set("epochs", static_cast<std::int64_t>(log.epoch_loss.size()));
  finish_stage(c, "pretrain", m, {artifacts::kEncoder, artifacts::kPretrainLog});
  say(o, "pretrain: " + std::to_string(log.epoch_loss.size()) + " epochs, final loss " +
             (log.epoch_loss.empty() ? std::string("n/a") : fmt6(log.epoch_loss.back())));
}

void stage_build_pool(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const SequenceTable seqs = load_sequences(c);
  const SplitAssignment splits = load_splits(c);
  const EncoderParams encoder = load_encoder(c);
  const EmbeddingTable embeddings = embed_users(seqs, encoder);
  const RetrievalPool pool = build_pool(embeddings, seqs, splits, splits.users(Split::kTrain));
  TensorArchive pa, ea;
  pool.save(pa);
  pa.write(out_path(c, artifacts::kPool));
  embeddings.save(ea);
  ea.write(out_path(c, artifacts::kEmbeddings));
  Manifest m;
  m.set("pool_users", static_cast<std::int64_t>(pool.size()));
  m.set("split_tag", pool.split_tag());
  finish_stage(c, "build-pool", m, {artifacts::kPool, artifacts::kEmbeddings});
  say(o, "build-pool: " + std::to_string(pool.size()) + " training users in the pool");
}

void stage_retrieve(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const SequenceTable seqs = load_sequences(c);
  const SplitAssignment splits = load_splits(c);
  const EncoderParams encoder = load_encoder(c);
  require(c, artifacts::kPool, "build-pool");
  require(c, artifacts::kEmbeddings, "build-pool");
  const RetrievalPool pool = RetrievalPool::load(read_archive(c, artifacts::kPool));
  const EmbeddingTable embeddings = EmbeddingTable::load(read_archive(c, artifacts::kEmbeddings));
  const std::vector<UserId> users = prefix_users(c, splits);
  const bool prefixes = !users.empty();
  const RetrievalArtifacts r =
      run_retrieval(seqs, pool, embeddings, encoder, c.retrieval, users, o.threads);
  write_neighbor_file(out_path(c, artifacts::kNeighbors), r.neighbors);
  std::vector<std::string> outputs{artifacts::kNeighbors};
  const fs::path prefix_path = out_path(c, artifacts::kPrefixes);
  if (prefixes) {
    TensorArchive ar;
    save_prefix_table(ar, r.prefixes, encoder.dim);
    ar.write(prefix_path);
    outputs.push_back(artifacts::kPrefixes);
  } else if (fs::exists(prefix_path)) {
    fs::remove(prefix_path);
  }
  Manifest m;
  m.set("top_k", c.retrieval.top_k);
  m.set("measure", to_string(c.retrieval.measure));
  m.set("threshold", c.retrieval.threshold ? fmt6(*c.retrieval.threshold) : "none");
  m.set("queries", static_cast<std::int64_t>(r.neighbors.size()));
  m.set("prefix_queries", static_cast<std::int64_t>(r.prefixes.size()));
  finish_stage(c, "retrieve", m, outputs);
  say(o, "retrieve: top-" + std::to_string(c.retrieval.top_k) + " " +
             to_string(c.retrieval.measure) + " neighbors for " +
             std::to_string(r.neighbors.size()) + " users");
}

void stage_train(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const SequenceTable seqs = load_sequences(c);
  const SplitAssignment splits = load_splits(c);
  const EncoderParams encoder = load_encoder(c);
  const RetrievalFiles f = load_retrieval(c);
  if (!prefix_users(c, splits).empty() &&
      !fs::exists(out_path(c, artifacts::kPrefixes))) {
    throw IoError("missing " + out_path(c, artifacts::kPrefixes).string() +
                  "; run `suin retrieve` first");
  }
  const std::int64_t num_items = load_num_items(c);
  const ModelConfig model = model_config_for(c, encoder);
  const InputSources src = make_input_sources(seqs, f.pool, f.embeddings, f.retrieval);
  const auto train = inputs_for(make_split_samples(c, seqs, splits, Split::kTrain, num_items),
                                src, model, c, Split::kTrain, o.threads);
  const auto val = inputs_for(make_split_samples(c, seqs, splits, Split::kVal, num_items), src,
                              model, c, Split::kVal, o.threads);
  say(o, "train: " + std::to_string(train.size()) + " training and " +
             std::to_string(val.size()) + " validation samples, variant " +
             to_string(model.variant));
  const ModelParams init = ModelParams::init(num_items, model, c.stream_seed(streams::kModelInit));
  const TrainResult r = train_model(init, train, val, train_config_for(c, o.threads));
  TensorArchive ar;
  r.params.save(ar);
  ar.write(out_path(c, artifacts::kModel));
  write_text(out_path(c, artifacts::kTrainLog), train_log_csv(r.log));
  Manifest m;
  m.set("variant", to_string(model.variant));
  m.set("pooling", to_string(model.effective_pooling()));
  m.set("top_k", model.effective_top_k());
  m.set("seq_len", model.seq_len);
  m.set("scheme", to_string(model.scheme));
  m.set("best_epoch", r.best_epoch);
  m.set("epochs_run", static_cast<std::int64_t>(r.log.size()));
  finish_stage(c, "train", m, {artifacts::kModel, artifacts::kTrainLog});
  for (const auto& row : r.log) {
    say(o, "train: epoch " + std::to_string(row.epoch) + " loss " + fmt6(row.train_loss) +
               " val AUC " + fmt6(row.val_auc));
  }
}

namespace {

struct LoadedModel {
  SequenceTable seqs;
  SplitAssignment splits;
  RetrievalFiles files;
  ModelParams params;
  std::int64_t num_items = 0;
};

LoadedModel load_model_context(const RunConfig& c) {
  LoadedModel l;
  l.seqs = load_sequences(c);
  l.splits = load_splits(c);
  l.files = load_retrieval(c);
  require(c, artifacts::kModel, "train");
  l.params = ModelParams::load(read_archive(c, artifacts::kModel));
  l.num_items = load_num_items(c);
  return l;
}

}  // namespace

void stage_evaluate(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const LoadedModel l = load_model_context(c);
  const InputSources src = make_input_sources(l.seqs, l.files.pool, l.files.embeddings,
                                              l.files.retrieval);
  const SampleSet samples = make_split_samples(c, l.seqs, l.splits, o.eval_split, l.num_items);
  const auto inputs = inputs_for(samples, src, l.params.config, c, o.eval_split, o.threads);
  const EvalReport report = evaluate(l.params, inputs, o.grouping, o.threads);
  const std::string name =
      "eval_" + to_string(o.eval_split) + "_" + to_string(o.grouping) + ".csv";
  report.write_csv(out_path(c, name));
  Manifest m;
  m.set("split", to_string(o.eval_split));
  m.set("grouping", to_string(o.grouping));
  m.set("samples", static_cast<std::int64_t>(report.count));
  m.set("auc", fmt6(report.auc));
  m.set("logloss", fmt6(report.logloss));
  finish_stage(c, "evaluate", m, {name});
  say(o, "evaluate: " + to_string(o.eval_split) + " AUC " + fmt6(report.auc) + ", logloss " +
             fmt6(report.logloss) + " over " + std::to_string(report.count) + " samples");
}

void stage_inspect(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const LoadedModel l = load_model_context(c);
  UserId user = -1;
  if (o.inspect_user) {
    user = *o.inspect_user;
    if (!l.seqs.count(user) || l.seqs.at(user).size() < 2) {
      throw ConfigError("user " + std::to_string(user) + " has fewer than two interactions");
    }
  } else {
    for (UserId u : l.splits.users(Split::kTest)) {
      if (l.seqs.at(u).size() >= 2) {
        user = u;
        break;
      }
    }
    if (user < 0) throw ConfigError("no test user with at least two interactions");
  }
  const auto& seq = l.seqs.at(user);
  const TrainingSample sample{user, seq.back(), 1.0, seq.size() - 1};
  const InputSources src = make_input_sources(l.seqs, l.files.pool, l.files.embeddings,
                                              l.files.retrieval);
  const auto inputs = build_inputs(std::span<const TrainingSample>(&sample, 1), src,
                                   l.params.config, c.stream_seed(streams::kRandomUsers));
  const SampleInput& in = inputs.front();
  const ForwardDetail fwd = forward_detail(l.params, in);

  std::vector<double> weights(in.aug.size(), 0.0);
  if (fwd.attention.weights.defined()) {
    std::copy(fwd.attention.weights.data().begin(), fwd.attention.weights.data().end(),
              weights.begin());
  } else {
    const double share = 1.0 / static_cast<double>(in.aug.nonpad_count());
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = in.aug.mask[i] ? share : 0.0;
  }
  std::string text = "user " + std::to_string(user) + " (" + to_string(l.splits.of(user)) +
                     " split), target item " + std::to_string(in.target) + ", label 1\n";
  text += "variant " + to_string(l.params.config.variant) + ", pooling " +
          to_string(l.params.config.effective_pooling()) + ", scheme " +
          to_string(l.params.config.scheme) + "\n";
  text += "predicted click probability " + fmt6(fwd.probability.item()) + "\n\n";
  text += render_augmented(in.aug);
  std::string csv = "position_id,user_slot,weight\n";
  for (std::size_t i = 0; i < in.aug.size(); ++i) {
    csv += std::to_string(in.aug.position_ids[i]) + "," + std::to_string(in.aug.slot[i]) + "," +
           fmt6(weights[i]) + "\n";
  }
  const std::string txt_name = "inspect_" + std::to_string(user) + ".txt";
  const std::string csv_name = "attention_" + std::to_string(user) + ".csv";
  write_text(out_path(c, txt_name), text);
  write_text(out_path(c, csv_name), csv);
  Manifest m;
  m.set("user", user);
  finish_stage(c, "inspect", m, {txt_name, csv_name});
  say(o, "inspect: wrote " + txt_name + " and " + csv_name);
}

void stage_ablate(const RunConfig& c, const StageOptions& o) {
  begin_stage(c);
  const auto runs = run_sweep(c, o.sweep, o.threads, o.log);
  std::vector<std::string> order;
  for (const auto& s : sweep_settings(c, o.sweep)) order.push_back(s.name);
  const auto rows = summarize_sweep(runs, order);
  const std::string table = "ablation_" + o.sweep + ".csv";
  const std::string detail = "ablation_" + o.sweep + "_runs.csv";
  write_text(out_path(c, table), sweep_table_csv(rows));
  write_text(out_path(c, detail), sweep_runs_csv(runs));
  Manifest m;
  m.set("sweep", o.sweep);
  m.set("settings", static_cast<std::int64_t>(rows.size()));
  m.set("seeds", static_cast<std::int64_t>(c.ablate.seeds.size()));
  finish_stage(c, "ablate", m, {table, detail});
  for (const auto& r : rows) {
    say(o, "ablate: " + r.setting + " AUC " + fmt6(r.auc_mean) + " +- " + fmt6(r.auc_std) +
               (r.failed ? " (failed)" : ""));
  }
}

void stage_run(const RunConfig& c, const StageOptions& o) {
  stage_generate(c, o);
  stage_split(c, o);
  stage_pretrain(c, o);
  stage_build_pool(c, o);
  stage_retrieve(c, o);
  stage_train(c, o);
  stage_evaluate(c, o);
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<std::string> sweep_names() {
  return {"variants", "topk", "position_schemes", "similarity_measures", "thresholds"};
}

std::vector<SweepSetting> sweep_settings(const RunConfig& base, const std::string& sweep) {
  std::vector<SweepSetting> out;
  if (sweep == "variants") {
    for (Variant v : {Variant::kFull, Variant::kNoUta, Variant::kNoUtaKeepBe,
                      Variant::kRandomUsers, Variant::kNoSuNoUta, Variant::kNoPos}) {
      RunConfig c = base;
      c.model.variant = v;
      c.retrieval.top_k = std::max(c.retrieval.top_k, c.model.top_k);
      out.push_back({to_string(v), c});
    }
  } else if (sweep == "topk") {
    std::vector<std::int64_t> ks = base.ablate.topk;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty()) throw ConfigError("ablate.topk is empty");
    for (std::int64_t k : ks) {
      RunConfig c = base;
      c.model.top_k = k;
      c.retrieval.top_k = ks.back();
      out.push_back({"K=" + std::to_string(k), c});
    }
  } else if (sweep == "position_schemes") {
    for (PositionScheme s : {PositionScheme::kUtpe, PositionScheme::kTpe, PositionScheme::kStpe,
                             PositionScheme::kNone}) {
      RunConfig c = base;
      c.model.scheme = s;
      c.retrieval.top_k = std::max(c.retrieval.top_k, c.model.top_k);
      out.push_back({to_string(s), c});
    }
  } else if (sweep == "similarity_measures") {
    for (SimilarityMeasure m : {SimilarityMeasure::kCosine, SimilarityMeasure::kInnerProduct,
                                SimilarityMeasure::kEuclidean, SimilarityMeasure::kJaccard}) {
      RunConfig c = base;
      c.retrieval.measure = m;
      c.retrieval.top_k = std::max(c.retrieval.top_k, c.model.top_k);
      out.push_back({to_string(m), c});
    }
  } else if (sweep == "thresholds") {
    RunConfig k0 = base;
    k0.model.variant = Variant::kNoSuNoUta;
    out.push_back({"K=0", k0});
    for (double t : base.ablate.thresholds) {
      RunConfig c = base;
      c.model.variant = Variant::kNoUta;
      c.retrieval.threshold = t;
      c.retrieval.top_k = std::max(c.retrieval.top_k, c.model.top_k);
      out.push_back({"threshold=" + fmt6(t), c});
    }
  } else {
    throw ConfigError("unknown sweep '" + sweep + "'");
  }
  return out;
}

std::vector<SweepRun> run_sweep(const RunConfig& base, const std::string& sweep, int threads,
                                const std::function<void(const std::string&)>& log) {
  const auto settings = sweep_settings(base, sweep);
  std::vector<SweepRun> runs;
  for (std::uint64_t seed : base.ablate.seeds) {
    RunConfig seeded = base;
    seeded.seed = seed;
    std::optional<PreparedData> data;
    std::string prep_error;
    try {
      data = prepare_data(seeded, threads);
    } catch (const std::exception& e) {
      prep_error = e.what();
    }
    using Key = std::tuple<std::int64_t, int, bool, double>;
    std::map<Key, RetrievalArtifacts> cache;
    for (const auto& s : settings) {
      SweepRun run;
      run.setting = s.name;
      run.seed = seed;
      if (!data) {
        run.error = "data preparation failed: " + prep_error;
        runs.push_back(run);
        continue;
      }
      RunConfig c = s.config;
      c.seed = seed;
      try {
        const Key key{c.retrieval.top_k, static_cast<int>(c.retrieval.measure),
                      c.retrieval.threshold.has_value(), c.retrieval.threshold.value_or(0.0)};
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, run_retrieval(*data, c, threads)).first;
        const SettingResult r = run_setting(*data, it->second, c, threads);
        run.ok = true;
        run.auc = r.test.auc;
        run.logloss = r.test.logloss;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
      if (log) {
        log("ablate " + sweep + ": seed " + std::to_string(seed) + " " + s.name + " " +
            (run.ok ? "AUC " + fmt6(run.auc) : "failed: " + run.error));
      }
      runs.push_back(run);
    }
  }
  return runs;
}

std::vector<SweepRow> summarize_sweep(const std::vector<SweepRun>& runs,
                                      const std::vector<std::string>& order) {
  std::vector<SweepRow> rows;
  for (const auto& name : order) {
    SweepRow row;
    row.setting = name;
    std::vector<double> aucs, losses;
    for (const auto& r : runs) {
      if (r.setting == name && r.ok) {
        aucs.push_back(r.auc);
        losses.push_back(r.logloss);
      }
    }
    row.runs_ok = aucs.size();
    row.failed = aucs.empty();
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = sd = 0.0;
      if (v.empty()) return;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      if (v.size() < 2) return;
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
    };
    stats(aucs, row.auc_mean, row.auc_std);
    stats(losses, row.logloss_mean, row.logloss_std);
    rows.push_back(row);
  }
  if (!rows.empty() && !rows.front().failed) {
    for (auto& r : rows) r.delta_auc = r.failed ? 0.0 : r.auc_mean - rows.front().auc_mean;
  }
  return rows;
}

std::string sweep_table_csv(const std::vector<SweepRow>& rows) {
  std::string out = "setting,runs_ok,auc_mean,auc_std,logloss_mean,logloss_std,delta_auc,status\n";
  for (const auto& r : rows) {
    out += r.setting + "," + std::to_string(r.runs_ok) + ",";
    if (r.failed) {
      out += ",,,,,failed\n";
      continue;
    }
    out += fmt6(r.auc_mean) + "," + fmt6(r.auc_std) + "," + fmt6(r.logloss_mean) + "," +
           fmt6(r.logloss_std) + "," + fmt6(r.delta_auc) + ",ok\n";
  }
  return out;
}

std::string sweep_runs_csv(const std::vector<SweepRun>& runs) {
  std::string out = "setting,seed,status,auc,logloss,error\n";
  for (const auto& r : runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out += r.setting + "," + std::to_string(r.seed) + "," + (r.ok ? "ok" : "failed") + "," +
           (r.ok ? fmt6(r.auc) + "," + fmt6(r.logloss) : std::string(",")) + ",\"" + err +
           "\"\n";
  }
  return out;
}

}  // namespace suin
