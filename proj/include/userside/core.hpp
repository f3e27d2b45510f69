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

#ifndef USERSIDE_CORE_HPP
#define USERSIDE_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

/**
 * @file core.hpp
 * @brief Shared vocabulary: item ids, sensitive attributes, fairness
 * constraints and the list-level fairness metrics built on them.
 */

namespace userside {

/** Dense item identifier in `[0, num_items)`. */
using ItemId = std::int32_t;

/** A ranked recommendation list, most relevant item first. */
using RecList = std::vector<ItemId>;

/**
 * Positional discount `1 / log2(rank + 1)` for a 1-based rank.
 *
 * The same discount serves three roles: edge weights of the recommendation
 * network, step distribution of the random walk, and the DCG gain. Rank 1
 * maps to 1, rank 3 to 1/2.
 */
inline double rank_discount(int rank) {
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

/** Raised when fairness constraints are unsatisfiable or violated. */
class ConstraintError : public std::runtime_error {
public:
  explicit ConstraintError(const std::string& what) : std::runtime_error(what) {}
};

/** Raised on malformed input files; carries the 1-based offending line. */
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line)
    : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/**
 * Immutable map from item to sensitive group.
 *
 * Groups are dense integers `[0, num_groups)` with human-readable names kept
 * alongside for reporting. Every item belongs to exactly one group.
 */
class AttributeTable {
public:
  /**
   * @param group_of group index per item, each in `[0, group_names.size())`.
   * @param group_names display name per group, e.g. {"protected", "rest"}.
   */
  AttributeTable(std::vector<int> group_of, std::vector<std::string> group_names)
    : group_of_(std::move(group_of)), names_(std::move(group_names)) {
    if (names_.empty()) {
      throw ConstraintError("attribute table needs at least one group");
    }
    for (int g : group_of_) {
      if (g < 0 || g >= static_cast<int>(names_.size())) {
        throw ConstraintError("item assigned to unknown group " + std::to_string(g));
      }
    }
  }

  /** Single-group table; fairness constraints become vacuous. */
  static AttributeTable uniform(ItemId num_items, std::string name = "all") {
    return AttributeTable(std::vector<int>(static_cast<std::size_t>(num_items), 0),
                          {std::move(name)});
  }

  ItemId num_items() const { return static_cast<ItemId>(group_of_.size()); }
  int num_groups() const { return static_cast<int>(names_.size()); }

  int group(ItemId item) const { return group_of_[static_cast<std::size_t>(item)]; }
  const std::string& group_name(int g) const { return names_[static_cast<std::size_t>(g)]; }

  /** Item count per group over the whole catalogue. */
  std::vector<int> group_sizes() const {
    std::vector<int> sizes(names_.size(), 0);
    for (int g : group_of_) ++sizes[static_cast<std::size_t>(g)];
    return sizes;
  }

private:
  std::vector<int> group_of_;
  std::vector<std::string> names_;
};

/**
 * Fairness contract for one recommendation list: exactly `k` items with at
 * least `tau` drawn from every sensitive group.
 */
struct FairnessParams {
  int k;    ///< list length, >= 1
  int tau;  ///< per-group minimum, >= 0

  FairnessParams(int k_, int tau_) : k(k_), tau(tau_) {
    if (k < 1) throw ConstraintError("list length must be positive");
    if (tau < 0) throw ConstraintError("per-group minimum must be non-negative");
  }

  /**
   * Checks the contract is satisfiable at all against a catalogue: `tau`
   * groups of `tau` items each must fit into `k` slots, and every group must
   * actually contain `tau` items.
   *
   * @throws ConstraintError naming the failing condition.
   */
  void validate(const AttributeTable& attrs) const {
    const int groups = attrs.num_groups();
    if (static_cast<long long>(tau) * groups > k) {
      throw ConstraintError("tau=" + std::to_string(tau) + " needs " +
                            std::to_string(static_cast<long long>(tau) * groups) +
                            " slots across " + std::to_string(groups) +
                            " groups but lists hold only " + std::to_string(k));
    }
    const std::vector<int> sizes = attrs.group_sizes();
    for (int g = 0; g < groups; ++g) {
      if (sizes[static_cast<std::size_t>(g)] < tau) {
        throw ConstraintError("group '" + attrs.group_name(g) + "' has only " +
                              std::to_string(sizes[static_cast<std::size_t>(g)]) +
                              " items, fewer than tau=" + std::to_string(tau));
      }
    }
  }
};

/**
 * Running per-group counts of a partially built list.
 *
 * The ledger is what the selection algorithms consult to decide whether a
 * candidate may still be added without making the `tau` quota unreachable.
 */
class GroupLedger {
public:
  explicit GroupLedger(int num_groups) : counts_(static_cast<std::size_t>(num_groups), 0) {}

  static GroupLedger from_list(const RecList& list, const AttributeTable& attrs) {
    GroupLedger ledger(attrs.num_groups());
    for (ItemId item : list) ledger.add(attrs.group(item));
    return ledger;
  }

  void add(int group) {
    ++counts_[static_cast<std::size_t>(group)];
    ++total_;
  }

  int count(int group) const { return counts_[static_cast<std::size_t>(group)]; }
  int total() const { return total_; }
  int num_groups() const { return static_cast<int>(counts_.size()); }

  /**
   * Total shortfall `sum_a max(0, tau - count(a))`, i.e. how many more items
   * the list still owes the groups. Pass `exclude_group` to leave one group
   * out of the sum.
   */
  int deficit(int tau, int exclude_group = -1) const {
    int owed = 0;
    for (int g = 0; g < num_groups(); ++g) {
      if (g == exclude_group) continue;
      owed += std::max(0, tau - count(g));
    }
    return owed;
  }

private:
  std::vector<int> counts_;
  int total_ = 0;
};

/**
 * Feasibility test for appending one more item to a partial list.
 *
 * Appending a candidate of group `a` is safe iff afterwards the remaining
 * slots still cover what the *other* groups are owed:
 *
 *     sum_{b != a} max(0, tau - count(b))  <=  k - len - 1
 *
 * where `len` is the current list length (before the append) and counts are
 * taken from `ledger`, also before the append. Greedy selection guided by
 * this test always ends with every per-group quota met.
 */
inline bool can_add(const GroupLedger& ledger, int list_len, int candidate_group,
                    const FairnessParams& params) {
  return ledger.deficit(params.tau, candidate_group) <= params.k - list_len - 1;
}

/**
 * Exact non-negative fraction, kept unreduced so `num` and `den` stay
 * meaningful as "count" and "length".
 */
struct Ratio {
  int num = 0;
  int den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  /** True iff `num/den >= p/q`, evaluated without rounding. */
  bool at_least(int p, int q) const {
    return static_cast<std::int64_t>(num) * q >= static_cast<std::int64_t>(p) * den;
  }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return static_cast<std::int64_t>(a.num) * b.den == static_cast<std::int64_t>(b.num) * a.den;
  }
};

/**
 * Share of the worst-served group: `min_a count(a) / len(list)`.
 *
 * The minimum ranges over *all* groups of the catalogue, so a group absent
 * from the list drives the ratio to zero. Empty lists are rejected.
 */
inline Ratio least_ratio(const RecList& list, const AttributeTable& attrs) {
  if (list.empty()) throw ConstraintError("least_ratio of an empty list");
  const GroupLedger ledger = GroupLedger::from_list(list, attrs);
  int worst = ledger.count(0);
  for (int g = 1; g < attrs.num_groups(); ++g) {
    worst = std::min(worst, ledger.count(g));
  }
  return Ratio{worst, static_cast<int>(list.size())};
}

/**
 * Shannon entropy (base 2) of the group distribution inside a list.
 *
 * Groups with zero share contribute nothing. A list drawing 1 of 6 items
 * from one group and 5 of 6 from the other scores about 0.650 bits. Empty
 * lists are rejected.
 */
inline double list_entropy(const RecList& list, const AttributeTable& attrs) {
  if (list.empty()) throw ConstraintError("list_entropy of an empty list");
  const GroupLedger ledger = GroupLedger::from_list(list, attrs);
  const double len = static_cast<double>(list.size());
  double h = 0.0;
  for (int g = 0; g < attrs.num_groups(); ++g) {
    const int c = ledger.count(g);
    if (c == 0) continue;
    const double p = static_cast<double>(c) / len;
    h -= p * std::log2(p);
  }
  return h;
}

/**
 * Greedy fairness-constrained selection, the shared post-processing step.
 *
 * Walks `ordered` from best to worst and keeps the first `params.k` items
 * that pass both the caller's `skip` predicate (typically "is the source or
 * already consumed") and the `can_add` feasibility test. Stops early when
 * the candidates run out, so the result may be shorter than `k`.
 */
template <typename SkipPred>
RecList fair_greedy_select(std::span<const ItemId> ordered, const AttributeTable& attrs,
                           const FairnessParams& params, SkipPred skip) {
  RecList out;
  out.reserve(static_cast<std::size_t>(params.k));
  GroupLedger ledger(attrs.num_groups());
  for (ItemId item : ordered) {
    if (static_cast<int>(out.size()) >= params.k) break;
    if (skip(item)) continue;
    const int g = attrs.group(item);
    if (!can_add(ledger, static_cast<int>(out.size()), g, params)) continue;
    out.push_back(item);
    ledger.add(g);
  }
  return out;
}

}  // namespace userside

#endif  // USERSIDE_CORE_HPP
