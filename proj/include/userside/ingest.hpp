// Copyright 2026 The userside authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USERSIDE_INGEST_HPP
#define USERSIDE_INGEST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "userside/core.hpp"
#include "userside/csv.hpp"
#include "userside/rng.hpp"

/**
 * @file ingest.hpp
 * @brief Interaction logs, item attributes and item feature tables: loading,
 * k-core filtering and leave-one-out splitting.
 *
 * File formats are plain UTF-8 CSV. A first line is treated as a header iff
 * it matches the documented header of the schema being read (for example
 * "user,item" or "user,item,timestamp"); anything else is parsed as data, so
 * a malformed first row is reported as line 1. Files written by this module
 * always carry the header.
 */

namespace userside {

/** One user-item interaction; timestamp is meaningful iff the log has them. */
struct Interaction {
  int user;
  ItemId item;
  long long timestamp;
};

/**
 * Deduplicated implicit-feedback log over dense ids.
 *
 * Ids are dense in `[0, n_users) x [0, n_items)`. Each (user, item) pair
 * appears at most once; any rating value in the source data counts as a
 * single interaction.
 */
struct InteractionLog {
  std::vector<Interaction> triples;
  int n_users = 0;
  ItemId n_items = 0;
  bool has_timestamps = false;

  bool empty() const { return triples.empty(); }
};

/** A log plus the dense-to-original id remap recorded during re-indexing. */
struct LoadedLog {
  InteractionLog log;
  std::vector<long long> user_ids;  ///< dense user -> original id
  std::vector<long long> item_ids;  ///< dense item -> original id
};

/** Per-user evaluation split; vectors are indexed by user. */
struct LeaveOneOutSplit {
  std::vector<ItemId> source;                 ///< second latest interaction
  std::vector<ItemId> positive;               ///< latest interaction, held out
  std::vector<std::vector<ItemId>> history;   ///< all items except the positive
};

/** Fixed-dimension real vectors per item (features or embeddings). */
struct VectorTable {
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;

  ItemId num_items() const { return static_cast<ItemId>(rows.size()); }
};

using FeatureTable = VectorTable;
using EmbeddingTable = VectorTable;

namespace detail {

inline bool is_header(const std::vector<std::string>& fields,
                      const std::vector<std::vector<std::string>>& accepted) {
  return std::find(accepted.begin(), accepted.end(), fields) != accepted.end();
}

inline void check_item_range(long long item, std::size_t line) {
  if (item < 0 || item > INT32_MAX) {
    throw ParseError("item id " + std::to_string(item) + " out of range", line);
  }
}

}  // namespace detail

/**
 * Loads an interactions CSV with rows `user,item[,timestamp]`.
 *
 * Ids may be arbitrary non-negative integers; they are re-indexed densely in
 * ascending original-id order and the remap is returned alongside. Duplicate
 * (user, item) pairs collapse to their first occurrence. The column count
 * must be uniform across rows.
 *
 * @throws ParseError on a malformed row, naming its line.
 * @throws std::runtime_error if the file is missing or holds no rows.
 */
inline LoadedLog load_interactions(const std::filesystem::path& path) {
  const std::vector<std::string> lines = csv::read_lines(path);
  std::size_t line_no = 0;
  // A recognized header also pins the expected column count.
  int n_columns = 0;
  if (!lines.empty() &&
      detail::is_header(csv::split(lines[0]), {{"user", "item"}, {"user", "item", "timestamp"}})) {
    n_columns = static_cast<int>(csv::split(lines[0]).size());
    line_no = 1;
  }

  struct Row {
    long long user, item, timestamp;
  };
  std::vector<Row> rows;
  for (; line_no < lines.size(); ++line_no) {
    const std::string& line = lines[line_no];
    if (line.empty()) continue;
    const std::vector<std::string> fields = csv::split(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw ParseError("expected user,item[,timestamp], got " +
                       std::to_string(fields.size()) + " fields", line_no + 1);
    }
    if (n_columns == 0) {
      n_columns = static_cast<int>(fields.size());
    } else if (n_columns != static_cast<int>(fields.size())) {
      throw ParseError("inconsistent column count", line_no + 1);
    }
    Row row;
    row.user = csv::parse_int(fields[0], line_no + 1);
    row.item = csv::parse_int(fields[1], line_no + 1);
    row.timestamp = fields.size() == 3 ? csv::parse_int(fields[2], line_no + 1) : 0;
    if (row.user < 0) throw ParseError("negative user id", line_no + 1);
    detail::check_item_range(row.item, line_no + 1);
    rows.push_back(row);
  }
  if (rows.empty()) {
    throw std::runtime_error("no interactions in " + path.string());
  }

  std::set<long long> users, items;
  for (const Row& row : rows) {
    users.insert(row.user);
    items.insert(row.item);
  }
  LoadedLog out;
  out.user_ids.assign(users.begin(), users.end());
  out.item_ids.assign(items.begin(), items.end());
  std::map<long long, int> user_of;
  std::map<long long, ItemId> item_of;
  for (std::size_t i = 0; i < out.user_ids.size(); ++i) user_of[out.user_ids[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < out.item_ids.size(); ++i) item_of[out.item_ids[i]] = static_cast<ItemId>(i);

  out.log.n_users = static_cast<int>(out.user_ids.size());
  out.log.n_items = static_cast<ItemId>(out.item_ids.size());
  out.log.has_timestamps = (n_columns == 3);
  std::set<std::pair<int, ItemId>> seen;
  for (const Row& row : rows) {
    const Interaction triple{user_of[row.user], item_of[row.item], row.timestamp};
    if (seen.insert({triple.user, triple.item}).second) {
      out.log.triples.push_back(triple);
    }
  }
  return out;
}

/** A filtered log plus which dense ids of the input survived. */
struct KCoreResult {
  InteractionLog log;
  std::vector<int> kept_users;      ///< new dense user -> old dense user
  std::vector<ItemId> kept_items;   ///< new dense item -> old dense item
};

/**
 * Iterated k-core filter: repeatedly drops users and items with fewer than
 * `k` interactions until both degree conditions hold, then re-densifies ids.
 * The result may be empty; callers should check `log.empty()`.
 */
inline KCoreResult k_core(const InteractionLog& log, int k) {
  if (k < 1) throw ConstraintError("k-core threshold must be >= 1");
  std::vector<bool> user_alive(static_cast<std::size_t>(log.n_users), true);
  std::vector<bool> item_alive(static_cast<std::size_t>(log.n_items), true);

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> user_deg(static_cast<std::size_t>(log.n_users), 0);
    std::vector<int> item_deg(static_cast<std::size_t>(log.n_items), 0);
    for (const Interaction& t : log.triples) {
      if (!user_alive[static_cast<std::size_t>(t.user)] ||
          !item_alive[static_cast<std::size_t>(t.item)]) {
        continue;
      }
      ++user_deg[static_cast<std::size_t>(t.user)];
      ++item_deg[static_cast<std::size_t>(t.item)];
    }
    for (int u = 0; u < log.n_users; ++u) {
      if (user_alive[static_cast<std::size_t>(u)] && user_deg[static_cast<std::size_t>(u)] < k) {
        user_alive[static_cast<std::size_t>(u)] = false;
        changed = true;
      }
    }
    for (ItemId i = 0; i < log.n_items; ++i) {
      if (item_alive[static_cast<std::size_t>(i)] && item_deg[static_cast<std::size_t>(i)] < k) {
        item_alive[static_cast<std::size_t>(i)] = false;
        changed = true;
      }
    }
  }

  KCoreResult out;
  std::vector<int> new_user(static_cast<std::size_t>(log.n_users), -1);
  std::vector<ItemId> new_item(static_cast<std::size_t>(log.n_items), -1);
  for (int u = 0; u < log.n_users; ++u) {
    if (user_alive[static_cast<std::size_t>(u)]) {
      new_user[static_cast<std::size_t>(u)] = static_cast<int>(out.kept_users.size());
      out.kept_users.push_back(u);
    }
  }
  for (ItemId i = 0; i < log.n_items; ++i) {
    if (item_alive[static_cast<std::size_t>(i)]) {
      new_item[static_cast<std::size_t>(i)] = static_cast<ItemId>(out.kept_items.size());
      out.kept_items.push_back(i);
    }
  }
  out.log.n_users = static_cast<int>(out.kept_users.size());
  out.log.n_items = static_cast<ItemId>(out.kept_items.size());
  out.log.has_timestamps = log.has_timestamps;
  for (const Interaction& t : log.triples) {
    const int u = new_user[static_cast<std::size_t>(t.user)];
    const ItemId i = new_item[static_cast<std::size_t>(t.item)];
    if (u >= 0 && i >= 0) out.log.triples.push_back({u, i, t.timestamp});
  }
  return out;
}

/**
 * Leave-one-out split: per user, the latest interaction is held out as the
 * positive and the second latest becomes the source; everything but the
 * positive forms the history.
 *
 * With timestamps, "latest" means largest (timestamp, input row order) pair.
 * Without timestamps the user's interactions are arranged by a seeded
 * shuffle first, so the split is random but reproducible.
 *
 * @throws ConstraintError when any user has fewer than 2 interactions.
 */
inline LeaveOneOutSplit leave_one_out(const InteractionLog& log, std::uint64_t seed = 0) {
  std::vector<std::vector<ItemId>> items_of(static_cast<std::size_t>(log.n_users));
  if (log.has_timestamps) {
    // Stable sort on timestamp alone keeps input row order as the tiebreak.
    std::vector<std::pair<long long, std::size_t>> order;
    order.reserve(log.triples.size());
    for (std::size_t r = 0; r < log.triples.size(); ++r) {
      order.emplace_back(log.triples[r].timestamp, r);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [ts, r] : order) {
      (void)ts;
      items_of[static_cast<std::size_t>(log.triples[r].user)].push_back(log.triples[r].item);
    }
  } else {
    for (const Interaction& t : log.triples) {
      items_of[static_cast<std::size_t>(t.user)].push_back(t.item);
    }
    for (int u = 0; u < log.n_users; ++u) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(u)));
      rng.shuffle(items_of[static_cast<std::size_t>(u)]);
    }
  }

  std::vector<int> offenders;
  for (int u = 0; u < log.n_users; ++u) {
    if (items_of[static_cast<std::size_t>(u)].size() < 2) offenders.push_back(u);
  }
  if (!offenders.empty()) {
    std::ostringstream msg;
    msg << offenders.size() << " user(s) with fewer than 2 interactions:";
    for (std::size_t i = 0; i < offenders.size() && i < 10; ++i) msg << ' ' << offenders[i];
    if (offenders.size() > 10) msg << " ...";
    throw ConstraintError(msg.str());
  }

  LeaveOneOutSplit split;
  split.source.resize(static_cast<std::size_t>(log.n_users));
  split.positive.resize(static_cast<std::size_t>(log.n_users));
  split.history.resize(static_cast<std::size_t>(log.n_users));
  for (int u = 0; u < log.n_users; ++u) {
    std::vector<ItemId>& seq = items_of[static_cast<std::size_t>(u)];
    split.positive[static_cast<std::size_t>(u)] = seq.back();
    split.source[static_cast<std::size_t>(u)] = seq[seq.size() - 2];
    seq.pop_back();
    split.history[static_cast<std::size_t>(u)] = std::move(seq);
  }
  return split;
}

/**
 * Popularity rule from the experimental protocol: items with fewer than
 * `threshold` interactions form the "protected" group (group 0), the rest
 * are "popular" (group 1). The comparison is strict.
 */
inline AttributeTable popularity_attributes(const InteractionLog& log, int threshold) {
  std::vector<int> count(static_cast<std::size_t>(log.n_items), 0);
  for (const Interaction& t : log.triples) ++count[static_cast<std::size_t>(t.item)];
  std::vector<int> group(static_cast<std::size_t>(log.n_items));
  for (ItemId i = 0; i < log.n_items; ++i) {
    group[static_cast<std::size_t>(i)] = count[static_cast<std::size_t>(i)] < threshold ? 0 : 1;
  }
  return AttributeTable(std::move(group), {"protected", "popular"});
}

/**
 * Loads an attributes CSV with rows `item,label`. Every item in
 * `[0, n_items)` must appear exactly once; group indices follow the
 * lexicographic order of the distinct labels.
 */
inline AttributeTable load_attributes(const std::filesystem::path& path, ItemId n_items) {
  const std::vector<std::string> lines = csv::read_lines(path);
  std::size_t line_no = 0;
  if (!lines.empty() && detail::is_header(csv::split(lines[0]), {{"item", "label"}})) {
    line_no = 1;
  }
  std::vector<std::string> label_of(static_cast<std::size_t>(n_items));
  std::vector<bool> seen(static_cast<std::size_t>(n_items), false);
  for (; line_no < lines.size(); ++line_no) {
    if (lines[line_no].empty()) continue;
    const std::vector<std::string> fields = csv::split(lines[line_no]);
    if (fields.size() != 2) {
      throw ParseError("expected item,label", line_no + 1);
    }
    const long long item = csv::parse_int(fields[0], line_no + 1);
    if (item < 0 || item >= n_items) {
      throw ParseError("item id " + std::to_string(item) + " outside [0, " +
                       std::to_string(n_items) + ")", line_no + 1);
    }
    if (seen[static_cast<std::size_t>(item)]) {
      throw ParseError("duplicate label for item " + std::to_string(item), line_no + 1);
    }
    seen[static_cast<std::size_t>(item)] = true;
    label_of[static_cast<std::size_t>(item)] = fields[1];
  }
  for (ItemId i = 0; i < n_items; ++i) {
    if (!seen[static_cast<std::size_t>(i)]) {
      throw std::runtime_error("item " + std::to_string(i) + " has no label in " + path.string());
    }
  }

  std::set<std::string> distinct(label_of.begin(), label_of.end());
  std::map<std::string, int> group_of_label;
  std::vector<std::string> names;
  for (const std::string& label : distinct) {
    group_of_label[label] = static_cast<int>(names.size());
    names.push_back(label);
  }
  std::vector<int> group(static_cast<std::size_t>(n_items));
  for (ItemId i = 0; i < n_items; ++i) {
    group[static_cast<std::size_t>(i)] = group_of_label[label_of[static_cast<std::size_t>(i)]];
  }
  return AttributeTable(std::move(group), std::move(names));
}

/**
 * Loads a vector table CSV with rows `item,v0,...,v{d-1}`. Items must cover
 * `[0, n)` exactly once with uniform dimension and finite values; `n` is
 * inferred from the file.
 */
inline VectorTable load_vectors(const std::filesystem::path& path) {
  const std::vector<std::string> lines = csv::read_lines(path);
  std::size_t line_no = 0;
  if (!lines.empty()) {
    const std::vector<std::string> first = csv::split(lines[0]);
    if (first.size() >= 2 && first[0] == "item" && first[1] == "v0") line_no = 1;
  }
  std::map<ItemId, std::vector<double>> rows;
  std::size_t dim = 0;
  for (; line_no < lines.size(); ++line_no) {
    if (lines[line_no].empty()) continue;
    const std::vector<std::string> fields = csv::split(lines[line_no]);
    if (fields.size() < 2) {
      throw ParseError("expected item,v0,...", line_no + 1);
    }
    const long long item = csv::parse_int(fields[0], line_no + 1);
    detail::check_item_range(item, line_no + 1);
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const double v = csv::parse_double(fields[f], line_no + 1);
      if (!std::isfinite(v)) throw ParseError("non-finite value", line_no + 1);
      vec.push_back(v);
    }
    if (dim == 0) {
      dim = vec.size();
    } else if (dim != vec.size()) {
      throw ParseError("inconsistent vector dimension", line_no + 1);
    }
    if (!rows.emplace(static_cast<ItemId>(item), std::move(vec)).second) {
      throw ParseError("duplicate vector for item " + std::to_string(item), line_no + 1);
    }
  }
  if (rows.empty()) throw std::runtime_error("no vectors in " + path.string());

  VectorTable table;
  table.dim = dim;
  ItemId expected = 0;
  for (auto& [item, vec] : rows) {
    if (item != expected) {
      throw std::runtime_error("vector table misses item " + std::to_string(expected) +
                               " in " + path.string());
    }
    table.rows.push_back(std::move(vec));
    ++expected;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Writers. All emit the documented header and write atomically.
// ---------------------------------------------------------------------------

inline void save_interactions(const std::filesystem::path& path, const InteractionLog& log) {
  std::ostringstream out;
  out << (log.has_timestamps ? "user,item,timestamp\n" : "user,item\n");
  for (const Interaction& t : log.triples) {
    out << t.user << ',' << t.item;
    if (log.has_timestamps) out << ',' << t.timestamp;
    out << '\n';
  }
  csv::atomic_write(path, out.str());
}

template <typename Id>
void save_remap(const std::filesystem::path& path, const std::string& kind,
                const std::vector<Id>& dense_to_original) {
  std::ostringstream out;
  out << kind << ",original\n";
  for (std::size_t i = 0; i < dense_to_original.size(); ++i) {
    out << i << ',' << dense_to_original[i] << '\n';
  }
  csv::atomic_write(path, out.str());
}

inline void save_attributes(const std::filesystem::path& path, const AttributeTable& attrs) {
  std::ostringstream out;
  out << "item,label\n";
  for (ItemId i = 0; i < attrs.num_items(); ++i) {
    out << i << ',' << attrs.group_name(attrs.group(i)) << '\n';
  }
  csv::atomic_write(path, out.str());
}

/** History cells use ';' between ids since ',' separates columns. */
inline void save_split(const std::filesystem::path& path, const LeaveOneOutSplit& split) {
  std::ostringstream out;
  out << "user,source,positive,history\n";
  for (std::size_t u = 0; u < split.source.size(); ++u) {
    out << u << ',' << split.source[u] << ',' << split.positive[u] << ',';
    for (std::size_t h = 0; h < split.history[u].size(); ++h) {
      if (h > 0) out << ';';
      out << split.history[u][h];
    }
    out << '\n';
  }
  csv::atomic_write(path, out.str());
}

inline void save_vectors(const std::filesystem::path& path, const VectorTable& table,
                         int precision = 12) {
  std::ostringstream out;
  out << "item";
  for (std::size_t j = 0; j < table.dim; ++j) out << ",v" << j;
  out << '\n';
  for (ItemId i = 0; i < table.num_items(); ++i) {
    out << i;
    for (double v : table.rows[static_cast<std::size_t>(i)]) {
      out << ',' << csv::format_double(v, precision);
    }
    out << '\n';
  }
  csv::atomic_write(path, out.str());
}

}  // namespace userside

#endif  // USERSIDE_INGEST_HPP
