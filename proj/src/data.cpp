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

#include "suin/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "suin/errors.hpp"
#include "suin/random.hpp"

namespace suin {

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ConfigError("unknown split tag '" + text + "'");
}

std::string to_string(SampleMode mode) {
  return mode == SampleMode::kLastItem ? "last_item" : "all_positions";
}

SampleMode parse_sample_mode(const std::string& text) {
  if (text == "last_item") return SampleMode::kLastItem;
  if (text == "all_positions") return SampleMode::kAllPositions;
  throw ConfigError("unknown sample mode '" + text + "'");
}

SequenceTable group_sequences(std::span<const InteractionRecord> records) {
  std::map<UserId, std::vector<std::pair<std::int64_t, ItemId>>> grouped;
  for (const auto& r : records) grouped[r.user].emplace_back(r.timestamp, r.item);
  SequenceTable out;
  for (auto& [user, events] : grouped) {
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    auto& seq = out[user];
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (i > 0 && events[i].first == events[i - 1].first) {
        throw ConfigError("user " + std::to_string(user) +
                          " has two interactions at timestamp " +
                          std::to_string(events[i].first));
      }
      seq.push_back(events[i].second);
    }
  }
  return out;
}

std::vector<ItemId> history_prefix(const std::vector<ItemId>& sequence) {
  if (sequence.empty()) return {};
  return {sequence.begin(), sequence.end() - 1};
}

// ---------------------------------------------------------------------------

void SyntheticConfig::validate() const {
  if (users <= 0 || items <= 0 || latent_dim <= 0) {
    throw ConfigError("synthetic: users, items and latent_dim must be positive");
  }
  if (clusters < 2) throw ConfigError("synthetic: need at least 2 clusters");
  if (items < clusters) {
    throw ConfigError("synthetic: " + std::to_string(items) + " items cannot cover " +
                      std::to_string(clusters) + " clusters");
  }
  if (min_length < 1 || max_length < min_length) {
    throw ConfigError("synthetic: need 1 <= min_length <= max_length");
  }
  if (!(temperature > 0.0)) throw ConfigError("synthetic: temperature must be > 0");
  if (user_noise < 0.0 || item_noise < 0.0 || cluster_separation < 0.0) {
    throw ConfigError("synthetic: noise and separation must be non-negative");
  }
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Random centers, orthonormalized when the latent space is wide enough.
std::vector<Vec> make_centers(const SyntheticConfig& c, Rng& rng) {
  const auto dim = static_cast<std::size_t>(c.latent_dim);
  std::vector<Vec> centers;
  for (std::int64_t k = 0; k < c.clusters; ++k) {
    Vec v(dim);
    for (auto& x : v) x = rng.normal();
    if (c.latent_dim >= c.clusters) {
      for (const auto& prev : centers) {
        const double proj = dot(v, prev);
        for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * prev[i];
      }
    }
    const double norm = std::sqrt(dot(v, v));
    for (auto& x : v) x /= norm;
    centers.push_back(std::move(v));
  }
  for (auto& v : centers) {
    for (auto& x : v) x *= c.cluster_separation;
  }
  return centers;
}

Vec jitter(const Vec& center, double noise, Rng& rng) {
  Vec v = center;
  for (auto& x : v) x += noise * rng.normal();
  return v;
}

std::vector<double> length_cdf(const SyntheticConfig& c) {
  std::vector<double> cdf;
  double total = 0.0;
  for (std::int64_t n = c.min_length; n <= c.max_length; ++n) {
    total += std::pow(static_cast<double>(n), -c.length_exponent);
    cdf.push_back(total);
  }
  for (auto& x : cdf) x /= total;
  return cdf;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  Rng global(derive_seed(config.seed, 0));
  const auto centers = make_centers(config, global);

  SyntheticCorpus corpus;
  corpus.num_users = config.users;
  corpus.num_items = config.items;
  corpus.item_cluster.assign(static_cast<std::size_t>(config.items + 1), -1);
  std::vector<Vec> item_latent(static_cast<std::size_t>(config.items + 1));
  for (std::int64_t i = 1; i <= config.items; ++i) {
    const auto k = static_cast<int>(global.below(static_cast<std::uint64_t>(config.clusters)));
    corpus.item_cluster[static_cast<std::size_t>(i)] = k;
    item_latent[static_cast<std::size_t>(i)] =
        jitter(centers[static_cast<std::size_t>(k)], config.item_noise, global);
  }

  const auto cdf = length_cdf(config);
  corpus.user_cluster.resize(static_cast<std::size_t>(config.users));
  std::vector<std::pair<double, ItemId>> keys(static_cast<std::size_t>(config.items));
  for (std::int64_t u = 0; u < config.users; ++u) {
    Rng rng(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(u)));
    const auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.clusters)));
    corpus.user_cluster[static_cast<std::size_t>(u)] = k;
    const Vec latent = jitter(centers[static_cast<std::size_t>(k)], config.user_noise, rng);

    const double draw = rng.uniform();
    const auto pos = static_cast<std::int64_t>(
        std::lower_bound(cdf.begin(), cdf.end(), draw) - cdf.begin());
    const auto length = std::min(config.min_length + pos, config.items);

    // Gumbel top-k: ordering by perturbed score is a sequential draw without
    // replacement from the softmax, so the order doubles as the timeline.
    for (std::int64_t i = 1; i <= config.items; ++i) {
      const double score = dot(latent, item_latent[static_cast<std::size_t>(i)]) /
                           config.temperature;
      keys[static_cast<std::size_t>(i - 1)] = {score + rng.gumbel(), i};
    }
    std::partial_sort(keys.begin(), keys.begin() + length, keys.end(),
                      [](const auto& a, const auto& b) {
                        return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    std::int64_t ts = static_cast<std::int64_t>(rng.below(1000000));
    for (std::int64_t j = 0; j < length; ++j) {
      corpus.records.push_back({u, keys[static_cast<std::size_t>(j)].second, ts});
      ts += 1 + static_cast<std::int64_t>(rng.below(3600));
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------

void SplitAssignment::assign(UserId user, Split split) {
  if (!tags_.emplace(user, split).second) {
    throw ConfigError("user " + std::to_string(user) + " assigned to two splits");
  }
  auto& list = lists_[static_cast<std::size_t>(split)];
  list.insert(std::upper_bound(list.begin(), list.end(), user), user);
}

Split SplitAssignment::of(UserId user) const {
  auto it = tags_.find(user);
  if (it == tags_.end()) {
    throw ConfigError("user " + std::to_string(user) + " has no split assignment");
  }
  return it->second;
}

bool SplitAssignment::is_train(UserId user) const {
  auto it = tags_.find(user);
  return it != tags_.end() && it->second == Split::kTrain;
}

const std::vector<UserId>& SplitAssignment::users(Split split) const {
  return lists_[static_cast<std::size_t>(split)];
}

SplitAssignment split_by_user(std::span<const UserId> users, SplitRatios ratios,
                              std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::vector<UserId> order(users.begin(), users.end());
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw ConfigError("duplicate user IDs passed to split_by_user");
  }
  if (order.size() < 3) {
    throw ConfigError("need at least 3 users to split, got " + std::to_string(order.size()));
  }
  Rng rng(derive_seed(seed, 7));
  rng.shuffle(order);
  const auto n = static_cast<double>(order.size());
  const auto n_val = static_cast<std::size_t>(std::llround(n * ratios.val));
  const auto n_test = static_cast<std::size_t>(std::llround(n * ratios.test));
  if (n_val + n_test > order.size()) throw ConfigError("split ratios leave no users");
  SplitAssignment out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Split s = Split::kTrain;
    if (i < n_val) {
      s = Split::kVal;
    } else if (i < n_val + n_test) {
      s = Split::kTest;
    }
    out.assign(order[i], s);
  }
  return out;
}

// ---------------------------------------------------------------------------

SampleSet make_samples(const SequenceTable& sequences, std::span<const UserId> users,
                       SampleMode mode, std::int64_t num_items,
                       int negatives_per_positive, std::uint64_t seed) {
  if (negatives_per_positive < 0) throw ConfigError("negatives_per_positive must be >= 0");
  if (num_items < 2) throw ConfigError("negative sampling needs at least 2 items");
  SampleSet out;
  for (UserId user : users) {
    auto it = sequences.find(user);
    if (it == sequences.end() || it->second.size() < 2) {
      ++out.skipped_users;
      continue;
    }
    const auto& seq = it->second;
    Rng rng(derive_seed(seed, 500000 + static_cast<std::uint64_t>(user)));
    const std::size_t first = mode == SampleMode::kLastItem ? seq.size() - 1 : 1;
    for (std::size_t t = first; t < seq.size(); ++t) {
      const ItemId positive = seq[t];
      out.samples.push_back({user, positive, 1.0, t});
      std::set<ItemId> excluded(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(t));
      excluded.insert(positive);
      if (static_cast<std::int64_t>(excluded.size()) >= num_items) continue;
      for (int k = 0; k < negatives_per_positive; ++k) {
        ItemId neg;
        do {
          neg = 1 + static_cast<ItemId>(rng.below(static_cast<std::uint64_t>(num_items)));
        } while (excluded.count(neg));
        out.samples.push_back({user, neg, 0.0, t});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::int64_t parse_int(const std::string& s, const std::filesystem::path& path,
                       std::size_t line_no) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ":" + std::to_string(line_no) +
                  ": expected an integer, got '" + s + "'");
  }
}

std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void write_interactions_csv(const std::filesystem::path& path,
                            std::span<const InteractionRecord> records) {
  auto os = open_out(path);
  os << "user_id,item_id,timestamp\n";
  for (const auto& r : records) os << r.user << ',' << r.item << ',' << r.timestamp << '\n';
}

namespace {

std::vector<std::array<std::int64_t, 3>> read_triples(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || chomp(line) != "user_id,item_id,timestamp") {
    throw IoError(path.string() + ": missing header 'user_id,item_id,timestamp'");
  }
  std::vector<std::array<std::int64_t, 3>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    rows.push_back({parse_int(f[0], path, line_no), parse_int(f[1], path, line_no),
                    parse_int(f[2], path, line_no)});
  }
  return rows;
}

}  // namespace

std::vector<InteractionRecord> read_interactions_csv(const std::filesystem::path& path) {
  std::vector<InteractionRecord> out;
  for (const auto& [u, i, t] : read_triples(path)) {
    if (u < 0 || i < 1) {
      throw IoError(path.string() + ": user IDs must be >= 0 and item IDs >= 1");
    }
    if (!out.empty()) {
      const auto& prev = out.back();
      if (u < prev.user || (u == prev.user && t <= prev.timestamp)) {
        throw IoError(path.string() + ": rows must be sorted by (user, timestamp) with "
                      "strictly increasing timestamps per user");
      }
    }
    out.push_back({u, i, t});
  }
  return out;
}

IngestResult ingest_interactions_csv(const std::filesystem::path& path) {
  const auto rows = read_triples(path);
  std::map<std::int64_t, UserId> user_ids;
  std::map<std::int64_t, ItemId> item_ids;
  for (const auto& r : rows) {
    user_ids.emplace(r[0], 0);
    item_ids.emplace(r[1], 0);
  }
  UserId next_user = 0;
  for (auto& [raw, dense] : user_ids) dense = next_user++;
  ItemId next_item = 1;
  for (auto& [raw, dense] : item_ids) dense = next_item++;

  std::map<UserId, std::vector<std::pair<std::int64_t, ItemId>>> grouped;
  for (const auto& r : rows) grouped[user_ids[r[0]]].emplace_back(r[2], item_ids[r[1]]);
  IngestResult out;
  out.num_users = next_user;
  out.num_items = next_item - 1;
  for (auto& [user, events] : grouped) {
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::set<ItemId> seen;
    std::int64_t last_ts = 0;
    bool first = true;
    for (const auto& [ts, item] : events) {
      if (!seen.insert(item).second) {
        ++out.dropped_repeats;
        continue;
      }
      const std::int64_t t = first ? ts : std::max(ts, last_ts + 1);
      out.records.push_back({user, item, t});
      last_ts = t;
      first = false;
    }
  }
  return out;
}

void write_clusters_csv(const std::filesystem::path& path,
                        const std::vector<int>& user_cluster) {
  auto os = open_out(path);
  os << "user_id,cluster\n";
  for (std::size_t u = 0; u < user_cluster.size(); ++u) os << u << ',' << user_cluster[u] << '\n';
}

std::vector<int> read_clusters_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  std::getline(is, line);
  std::vector<int> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 2 || parse_int(f[0], path, line_no) != static_cast<std::int64_t>(out.size())) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed cluster row");
    }
    out.push_back(static_cast<int>(parse_int(f[1], path, line_no)));
  }
  return out;
}

void write_splits_csv(const std::filesystem::path& path, const SplitAssignment& splits) {
  auto os = open_out(path);
  os << "user_id,split\n";
  for (const auto& [user, split] : splits.tags()) os << user << ',' << to_string(split) << '\n';
}

SplitAssignment read_splits_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || chomp(line) != "user_id,split") {
    throw IoError(path.string() + ": missing header 'user_id,split'");
  }
  SplitAssignment out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = chomp(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 2) throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad row");
    out.assign(parse_int(f[0], path, line_no), parse_split(f[1]));
  }
  return out;
}

const std::string& Manifest::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw IoError("manifest has no key '" + key + "'");
  return it->second;
}

std::int64_t Manifest::get_int(const std::string& key) const {
  const auto& v = get(key);
  try {
    return std::stoll(v);
  } catch (const std::exception&) {
    throw IoError("manifest key '" + key + "' is not an integer: " + v);
  }
}

void Manifest::write(const std::filesystem::path& path) const {
  auto os = open_out(path);
  for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
}

Manifest Manifest::read(const std::filesystem::path& path) {
  auto is = open_in(path);
  Manifest m;
  std::string line;
  while (std::getline(is, line)) {
    line = chomp(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(path.string() + ": malformed line '" + line + "'");
    m.values_[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

}  // namespace suin
