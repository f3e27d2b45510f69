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

#ifndef USERSIDE_WALK_HPP
#define USERSIDE_WALK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "userside/core.hpp"
#include "userside/provider.hpp"
#include "userside/rng.hpp"

/**
 * @file walk.hpp
 * @brief Query-local recommenders: PrivateWalk, a rank-discounted random
 * walk, and Consul, a deterministic depth-first search. Both touch only a
 * handful of item pages instead of crawling the catalogue.
 */

namespace userside {

/** Walk/search budget and the seed driving all random choices. */
struct WalkParams {
  int max_steps;        ///< L_max: walk steps per slot, or pages for Consul
  std::uint64_t seed = 0;

  void validate() const {
    if (max_steps < 1) throw ConstraintError("walk budget must be >= 1");
  }
};

/** Default per-slot walk length for PrivateWalk. */
inline constexpr int kPrivateWalkDefaultSteps = 100;

/** Default page budget for Consul; it needs far fewer pages than a walk. */
inline constexpr int kConsulDefaultPages = 10;

/** Safety cap on uniform fallback draws before giving up with an error. */
inline constexpr long long kFallbackDrawCap = 1000000;

/**
 * Rank drawn from the categorical distribution with weight `1/log2(r+1)`
 * on each rank r in [1, k]. For k=2 rank 1 wins with probability ~0.6131.
 */
inline int rank_discount_sample(int k, Rng& rng) {
  if (k < 1) throw ConstraintError("cannot sample a rank from an empty list");
  std::vector<double> weights(static_cast<std::size_t>(k));
  for (int r = 1; r <= k; ++r) {
    weights[static_cast<std::size_t>(r) - 1] = rank_discount(r);
  }
  return static_cast<int>(rng.pick_weighted(weights)) + 1;
}

namespace detail {

/**
 * One uniform fallback draw over the whole universe, retried until an
 * eligible item lands. Returns false without drawing when no eligible item
 * exists at all (the caller then stops with a short list). A run of
 * `kFallbackDrawCap` failed draws against existing eligible items aborts.
 */
inline bool fallback_draw(const AttributeTable& attrs, const FairnessParams& params, Rng& rng,
                          RecList& list, GroupLedger& ledger, std::vector<bool>& used) {
  const ItemId n = attrs.num_items();
  bool any_eligible = false;
  for (ItemId j = 0; j < n; ++j) {
    if (!used[static_cast<std::size_t>(j)] &&
        can_add(ledger, static_cast<int>(list.size()), attrs.group(j), params)) {
      any_eligible = true;
      break;
    }
  }
  if (!any_eligible) return false;
  for (long long draw = 0; draw < kFallbackDrawCap; ++draw) {
    const ItemId j = static_cast<ItemId>(rng.next_below(static_cast<std::uint64_t>(n)));
    if (used[static_cast<std::size_t>(j)] ||
        !can_add(ledger, static_cast<int>(list.size()), attrs.group(j), params)) {
      continue;
    }
    list.push_back(j);
    ledger.add(attrs.group(j));
    used[static_cast<std::size_t>(j)] = true;
    return true;
  }
  throw ConstraintError("fallback sampling exhausted its draw budget");
}

inline void check_universe(const ProviderOracle& oracle, const AttributeTable& attrs,
                           ItemId source, const std::vector<ItemId>& history) {
  if (oracle.num_items() != attrs.num_items()) {
    throw ConstraintError("oracle and attribute table disagree on the number of items");
  }
  if (source < 0 || source >= attrs.num_items()) throw ConstraintError("source out of range");
  for (ItemId h : history) {
    if (h < 0 || h >= attrs.num_items()) throw ConstraintError("history item out of range");
  }
}

}  // namespace detail

/**
 * PrivateWalk: fills the list one slot at a time with random walks.
 *
 * Each slot restarts at the source and walks up to `walk.max_steps` steps;
 * a step queries the current item's page and hops to the entry at a
 * rank-discount-sampled position. The first item along the way that is not
 * already used and keeps the fairness quota reachable is accepted. A walk
 * that finds nothing (or hits a dead end) falls back to uniform draws over
 * the universe. The output can be shorter than `params.k` only when the
 * universe itself runs out of eligible items.
 */
inline RecList privatewalk_recommend(const ProviderOracle& oracle, ItemId source,
                                     const AttributeTable& attrs, const FairnessParams& params,
                                     const WalkParams& walk,
                                     const std::vector<ItemId>& history = {}) {
  walk.validate();
  params.validate(attrs);
  detail::check_universe(oracle, attrs, source, history);

  std::vector<bool> used(static_cast<std::size_t>(attrs.num_items()), false);
  for (ItemId h : history) used[static_cast<std::size_t>(h)] = true;
  RecList out;
  GroupLedger ledger(attrs.num_groups());
  Rng rng(walk.seed);

  for (int slot = 0; slot < params.k; ++slot) {
    ItemId cur = source;
    bool found = false;
    for (int step = 0; step < walk.max_steps; ++step) {
      const RecList page = oracle.query(cur);
      if (page.empty()) break;
      // Lists are normally full; a shorter page narrows the rank range.
      const int rank = rank_discount_sample(static_cast<int>(page.size()), rng);
      cur = page[static_cast<std::size_t>(rank) - 1];
      if (!used[static_cast<std::size_t>(cur)] &&
          can_add(ledger, static_cast<int>(out.size()), attrs.group(cur), params)) {
        out.push_back(cur);
        ledger.add(attrs.group(cur));
        used[static_cast<std::size_t>(cur)] = true;
        found = true;
        break;
      }
    }
    if (!found && !detail::fallback_draw(attrs, params, rng, out, ledger, used)) {
      break;  // universe exhausted; return the short list
    }
  }
  return out;
}

/**
 * Consul: deterministic depth-first search over item pages.
 *
 * Visits at most `walk.max_steps` distinct pages starting from the source.
 * Every page's recommendations are scanned in rank order and appended when
 * unused and feasibility-safe; then the page's entries are pushed so that
 * rank 1 is explored next. If the budget or the reachable region runs out
 * before the list is full, uniform fallback draws complete it.
 *
 * Given the oracle's answers the search itself is fully deterministic; the
 * seed only drives the fallback.
 */
inline RecList consul_recommend(const ProviderOracle& oracle, ItemId source,
                                const AttributeTable& attrs, const FairnessParams& params,
                                const WalkParams& walk,
                                const std::vector<ItemId>& history = {}) {
  walk.validate();
  params.validate(attrs);
  detail::check_universe(oracle, attrs, source, history);

  std::vector<bool> used(static_cast<std::size_t>(attrs.num_items()), false);
  for (ItemId h : history) used[static_cast<std::size_t>(h)] = true;
  RecList out;
  GroupLedger ledger(attrs.num_groups());
  Rng rng(walk.seed);

  std::vector<bool> visited(static_cast<std::size_t>(attrs.num_items()), false);
  std::vector<ItemId> stack;
  ItemId page = source;
  bool frontier_empty = false;

  for (int iter = 0; iter < walk.max_steps && !frontier_empty; ++iter) {
    while (visited[static_cast<std::size_t>(page)]) {
      if (stack.empty()) {
        frontier_empty = true;
        break;
      }
      page = stack.back();
      stack.pop_back();
    }
    if (frontier_empty) break;
    visited[static_cast<std::size_t>(page)] = true;

    const RecList list = oracle.query(page);
    for (ItemId j : list) {
      if (!used[static_cast<std::size_t>(j)] &&
          can_add(ledger, static_cast<int>(out.size()), attrs.group(j), params)) {
        out.push_back(j);
        ledger.add(attrs.group(j));
        used[static_cast<std::size_t>(j)] = true;
      }
      if (static_cast<int>(out.size()) == params.k) return out;
    }
    for (std::size_t r = list.size(); r > 0; --r) {
      stack.push_back(list[r - 1]);
    }
  }

  while (static_cast<int>(out.size()) < params.k) {
    if (!detail::fallback_draw(attrs, params, rng, out, ledger, used)) break;
  }
  return out;
}

}  // namespace userside

#endif  // USERSIDE_WALK_HPP
