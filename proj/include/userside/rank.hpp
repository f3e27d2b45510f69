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

#ifndef USERSIDE_RANK_HPP
#define USERSIDE_RANK_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "userside/core.hpp"
#include "userside/network.hpp"

/**
 * @file rank.hpp
 * @brief PrivateRank: personalized PageRank over the crawled network by
 * cumulative power iteration, followed by greedy fair selection.
 */

namespace userside {

/**
 * Personalized PageRank hyperparameters.
 *
 * `damping` may be 0 (scores collapse onto the source) but must stay below
 * 1 for the series to converge. The truncation error after `iterations`
 * terms is at most damping^(iterations+1) in L1 norm.
 */
struct PprParams {
  double damping = 0.01;
  int iterations = 10;

  void validate() const {
    if (!(damping >= 0.0) || damping >= 1.0) {
      throw ConstraintError("damping factor must lie in [0, 1)");
    }
    if (iterations < 0) throw ConstraintError("iteration count must be >= 0");
  }
};

/**
 * Truncated personalized PageRank by cumulative power iteration:
 *
 *     S^(L) = (1 - c) * sum_{k=0}^{L} (c A~^T)^k e^(source)
 *
 * Entries are non-negative and sum to at most 1; dangling rows let mass
 * vanish, which the formula never renormalizes away.
 */
inline std::vector<double> ppr_cpi(const RowNormalizedNetwork& net, ItemId source,
                                   const PprParams& params) {
  params.validate();
  if (source < 0 || source >= net.n) throw ConstraintError("ppr source out of range");
  std::vector<double> acc(static_cast<std::size_t>(net.n), 0.0);
  std::vector<double> term(static_cast<std::size_t>(net.n), 0.0);
  term[static_cast<std::size_t>(source)] = 1.0;
  acc[static_cast<std::size_t>(source)] = 1.0;
  for (int k = 1; k <= params.iterations; ++k) {
    term = transpose_apply(net, term);
    for (double& t : term) t *= params.damping;
    for (ItemId j = 0; j < net.n; ++j) {
      acc[static_cast<std::size_t>(j)] += term[static_cast<std::size_t>(j)];
    }
  }
  for (double& a : acc) a *= 1.0 - params.damping;
  return acc;
}

/**
 * Damping bound of the consistency guarantee: below
 * `1 / ((K+1)^2 * log2^2(K+1))` the top-K order of the PageRank scores
 * provably equals the provider's list, so tau = 0 reproduces the provider.
 */
inline double consistency_threshold(int k) {
  if (k < 1) throw ConstraintError("list length must be >= 1");
  const double log_term = std::log2(static_cast<double>(k) + 1.0);
  return 1.0 / ((static_cast<double>(k) + 1.0) * (static_cast<double>(k) + 1.0) * log_term * log_term);
}

/** Items sorted by score descending, ItemId ascending on exact ties. */
inline std::vector<ItemId> argsort_desc(std::span<const double> scores) {
  std::vector<ItemId> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](ItemId a, ItemId b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return order;
}

/**
 * PrivateRank recommendation for one source item.
 *
 * Ranks the whole catalogue by truncated personalized PageRank from the
 * source, then greedily keeps the highest-scoring items that pass the
 * fairness feasibility test, skipping the source and the user's history.
 * Full-length outputs have at least `tau` items of every group; when the
 * catalogue cannot fill `k` slots the list comes back shorter.
 */
inline RecList privaterank_recommend(const RowNormalizedNetwork& net, ItemId source,
                                     const AttributeTable& attrs, const FairnessParams& params,
                                     const PprParams& ppr, const std::vector<ItemId>& history = {}) {
  if (attrs.num_items() != net.n) {
    throw ConstraintError("attribute table covers " + std::to_string(attrs.num_items()) +
                          " items but the network has " + std::to_string(net.n));
  }
  params.validate(attrs);
  const std::vector<double> scores = ppr_cpi(net, source, ppr);
  const std::vector<ItemId> order = argsort_desc(scores);
  std::vector<bool> banned(static_cast<std::size_t>(net.n), false);
  banned[static_cast<std::size_t>(source)] = true;
  for (ItemId h : history) banned[static_cast<std::size_t>(h)] = true;
  return fair_greedy_select(std::span<const ItemId>(order), attrs, params,
                            [&banned](ItemId j) { return banned[static_cast<std::size_t>(j)]; });
}

}  // namespace userside

#endif  // USERSIDE_RANK_HPP
