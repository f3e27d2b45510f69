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

#ifndef USERSIDE_NETWORK_HPP
#define USERSIDE_NETWORK_HPP

#include <algorithm>
#include <filesystem>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "userside/core.hpp"
#include "userside/csv.hpp"
#include "userside/provider.hpp"

/**
 * @file network.hpp
 * @brief The weighted recommendation network crawled from a provider oracle
 * and the row-normalized operator behind personalized PageRank.
 *
 * The network has a directed edge (i, j) whenever item j appears on item i's
 * page, weighted by the inverse-logarithmic rank discount. Rows are stored
 * compressed (offset/dst/rank arrays) so the transpose multiply runs in
 * O(Kn).
 */

namespace userside {

/**
 * Crawled recommendation network. Edge weights are a function of the stored
 * 1-based ranks, `rank_discount(rank)`, and are recomputed on demand so the
 * discount stays single-sourced.
 */
struct RecNetwork {
  ItemId n = 0;
  int k = 0;                        ///< provider list length
  std::vector<std::size_t> offset;  ///< n+1 row offsets into dst/rank
  std::vector<ItemId> dst;
  std::vector<int> rank;            ///< 1-based rank of dst within its row
  bool short_lists = false;         ///< some page held fewer than k items

  std::size_t num_edges() const { return dst.size(); }
  double weight(std::size_t e) const { return rank_discount(rank[e]); }

  /** Row i as the provider's ranked list (ranks are contiguous from 1). */
  RecList list_of(ItemId i) const {
    return RecList(dst.begin() + static_cast<std::ptrdiff_t>(offset[static_cast<std::size_t>(i)]),
                   dst.begin() + static_cast<std::ptrdiff_t>(offset[static_cast<std::size_t>(i) + 1]));
  }
};

/**
 * Crawls every item page exactly once, in ascending item order.
 *
 * Issues exactly `oracle.num_items()` queries. A failing query aborts the
 * crawl with an error naming the item.
 */
inline RecNetwork crawl(const ProviderOracle& oracle) {
  RecNetwork net;
  net.n = oracle.num_items();
  net.k = oracle.list_length();
  net.offset.reserve(static_cast<std::size_t>(net.n) + 1);
  net.offset.push_back(0);
  for (ItemId i = 0; i < net.n; ++i) {
    RecList list;
    try {
      list = oracle.query(i);
    } catch (const std::exception& e) {
      throw std::runtime_error("crawl failed at item " + std::to_string(i) + ": " + e.what());
    }
    if (static_cast<int>(list.size()) < net.k) net.short_lists = true;
    for (std::size_t r = 0; r < list.size(); ++r) {
      net.dst.push_back(list[r]);
      net.rank.push_back(static_cast<int>(r) + 1);
    }
    net.offset.push_back(net.dst.size());
  }
  return net;
}

/**
 * Row-stochastic view of the network. Non-dangling rows sum to 1; rows with
 * no out-edges stay all-zero and are flagged, letting probability mass
 * vanish rather than teleport.
 */
struct RowNormalizedNetwork {
  ItemId n = 0;
  std::vector<std::size_t> offset;
  std::vector<ItemId> dst;
  std::vector<double> weight;
  std::vector<bool> dangling;
  bool has_dangling = false;
};

inline RowNormalizedNetwork row_normalize(const RecNetwork& net) {
  RowNormalizedNetwork out;
  out.n = net.n;
  out.offset = net.offset;
  out.dst = net.dst;
  out.weight.resize(net.num_edges());
  out.dangling.assign(static_cast<std::size_t>(net.n), false);
  for (ItemId i = 0; i < net.n; ++i) {
    const std::size_t begin = net.offset[static_cast<std::size_t>(i)];
    const std::size_t end = net.offset[static_cast<std::size_t>(i) + 1];
    if (begin == end) {
      out.dangling[static_cast<std::size_t>(i)] = true;
      out.has_dangling = true;
      continue;
    }
    double row_sum = 0.0;
    for (std::size_t e = begin; e < end; ++e) row_sum += net.weight(e);
    for (std::size_t e = begin; e < end; ++e) out.weight[e] = net.weight(e) / row_sum;
  }
  return out;
}

/** Computes the transposed operator application, `A~^T v`, in O(Kn). */
inline std::vector<double> transpose_apply(const RowNormalizedNetwork& net,
                                           std::span<const double> v) {
  if (static_cast<ItemId>(v.size()) != net.n) {
    throw std::invalid_argument("transpose_apply: vector length " + std::to_string(v.size()) +
                                " does not match n=" + std::to_string(net.n));
  }
  std::vector<double> out(static_cast<std::size_t>(net.n), 0.0);
  for (ItemId i = 0; i < net.n; ++i) {
    const double vi = v[static_cast<std::size_t>(i)];
    if (vi == 0.0) continue;
    const std::size_t begin = net.offset[static_cast<std::size_t>(i)];
    const std::size_t end = net.offset[static_cast<std::size_t>(i) + 1];
    for (std::size_t e = begin; e < end; ++e) {
      out[static_cast<std::size_t>(net.dst[e])] += net.weight[e] * vi;
    }
  }
  return out;
}

/** Serializes as `src,dst,rank` triples; weights are derived, not stored. */
inline void save_network(const std::filesystem::path& path, const RecNetwork& net) {
  std::ostringstream out;
  out << "src,dst,rank\n";
  for (ItemId i = 0; i < net.n; ++i) {
    for (std::size_t e = net.offset[static_cast<std::size_t>(i)];
         e < net.offset[static_cast<std::size_t>(i) + 1]; ++e) {
      out << i << ',' << net.dst[e] << ',' << net.rank[e] << '\n';
    }
  }
  csv::atomic_write(path, out.str());
}

/**
 * Loads a `src,dst,rank` file back into a network. Each source's ranks must
 * be contiguous from 1, entries distinct and never the source itself.
 * `n_hint` extends the universe beyond the largest id seen, for files whose
 * trailing items have no edges.
 */
inline RecNetwork load_network(const std::filesystem::path& path, ItemId n_hint = 0) {
  const std::vector<std::string> lines = csv::read_lines(path);
  std::size_t line_no = 0;
  if (!lines.empty() && csv::split(lines[0]) == std::vector<std::string>{"src", "dst", "rank"}) {
    line_no = 1;
  }
  struct Edge {
    ItemId src, dst;
    int rank;
  };
  std::vector<Edge> edges;
  ItemId n = n_hint;
  for (; line_no < lines.size(); ++line_no) {
    if (lines[line_no].empty()) continue;
    const std::vector<std::string> fields = csv::split(lines[line_no]);
    if (fields.size() != 3) throw ParseError("expected src,dst,rank", line_no + 1);
    const long long src = csv::parse_int(fields[0], line_no + 1);
    const long long dst = csv::parse_int(fields[1], line_no + 1);
    const long long rank = csv::parse_int(fields[2], line_no + 1);
    if (src < 0 || dst < 0 || src > INT32_MAX || dst > INT32_MAX) {
      throw ParseError("node id out of range", line_no + 1);
    }
    if (rank < 1 || rank > INT32_MAX) throw ParseError("rank must be >= 1", line_no + 1);
    if (src == dst) throw ParseError("self-loop", line_no + 1);
    edges.push_back({static_cast<ItemId>(src), static_cast<ItemId>(dst), static_cast<int>(rank)});
    n = std::max({n, static_cast<ItemId>(src + 1), static_cast<ItemId>(dst + 1)});
  }

  std::vector<RecList> lists(static_cast<std::size_t>(n));
  for (const Edge& e : edges) {
    RecList& row = lists[static_cast<std::size_t>(e.src)];
    if (static_cast<std::size_t>(e.rank) > row.size()) row.resize(static_cast<std::size_t>(e.rank), -1);
    if (row[static_cast<std::size_t>(e.rank) - 1] != -1) {
      throw std::runtime_error("duplicate rank " + std::to_string(e.rank) + " for source " +
                               std::to_string(e.src) + " in " + path.string());
    }
    row[static_cast<std::size_t>(e.rank) - 1] = e.dst;
  }
  RecNetwork net;
  net.n = n;
  net.offset.push_back(0);
  int max_len = 0;
  for (ItemId i = 0; i < n; ++i) {
    const RecList& row = lists[static_cast<std::size_t>(i)];
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (std::size_t r = 0; r < row.size(); ++r) {
      if (row[r] == -1) {
        throw std::runtime_error("source " + std::to_string(i) + " misses rank " +
                                 std::to_string(r + 1) + " in " + path.string());
      }
      if (seen[static_cast<std::size_t>(row[r])]) {
        throw std::runtime_error("source " + std::to_string(i) + " recommends item " +
                                 std::to_string(row[r]) + " twice in " + path.string());
      }
      seen[static_cast<std::size_t>(row[r])] = true;
      net.dst.push_back(row[r]);
      net.rank.push_back(static_cast<int>(r) + 1);
    }
    net.offset.push_back(net.dst.size());
    max_len = std::max(max_len, static_cast<int>(row.size()));
  }
  net.k = max_len;
  for (ItemId i = 0; i < n; ++i) {
    if (net.offset[static_cast<std::size_t>(i) + 1] - net.offset[static_cast<std::size_t>(i)] <
        static_cast<std::size_t>(net.k)) {
      net.short_lists = true;
    }
  }
  return net;
}

}  // namespace userside

#endif  // USERSIDE_NETWORK_HPP
