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

#ifndef USERSIDE_PROVIDER_HPP
#define USERSIDE_PROVIDER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "userside/core.hpp"
#include "userside/ingest.hpp"

/**
 * @file provider.hpp
 * @brief Simulated black-box provider oracles and the access meter.
 *
 * The consumer-side algorithms only ever see `ProviderOracle::query`, which
 * models reading one item page: the ranked list of the items the provider
 * shows there. Everything else (scores, features, interaction data) is
 * provider-internal, exposed to tests and privileged baselines only.
 */

namespace userside {

/**
 * Black-box item-to-item recommender: `query(i)` is the provider's ranked
 * list for item i's page.
 *
 * Contract: the list holds at most `list_length()` distinct items, never
 * contains the source or the configured history, and is deterministic in
 * (data, source). A list shorter than `list_length()` signals that the
 * catalogue (minus exclusions) ran out of candidates.
 */
class ProviderOracle {
public:
  virtual ~ProviderOracle() = default;

  virtual RecList query(ItemId source) const = 0;
  virtual ItemId num_items() const = 0;
  virtual int list_length() const = 0;
};

/**
 * A provider whose lists are induced by a per-source score over all items.
 * `query` is the top-K by (score descending, ItemId ascending), skipping the
 * source and any configured exclusions. The raw scores stay accessible so
 * privileged baselines can rank the whole catalogue.
 */
class ScoreProvider : public ProviderOracle {
public:
  /** Score of every item as a candidate for `source`'s page. */
  virtual std::vector<double> scores(ItemId source) const = 0;

  RecList query(ItemId source) const override {
    const std::vector<double> s = scores(source);
    std::vector<ItemId> ids;
    ids.reserve(s.size());
    for (ItemId j = 0; j < static_cast<ItemId>(s.size()); ++j) {
      if (j == source) continue;
      if (!excluded_.empty() && excluded_[static_cast<std::size_t>(j)]) continue;
      ids.push_back(j);
    }
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(list_length()), ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                      [&s](ItemId a, ItemId b) {
                        const double sa = s[static_cast<std::size_t>(a)];
                        const double sb = s[static_cast<std::size_t>(b)];
                        if (sa != sb) return sa > sb;
                        return a < b;
                      });
    ids.resize(k);
    return ids;
  }

protected:
  /** Items hidden from every list (a user's history); empty means none. */
  std::vector<bool> excluded_;
};

/**
 * K-nearest-neighbour provider over standardized features.
 *
 * Features are standardized per dimension (mean 0, variance 1) over all
 * items; zero-variance dimensions are dropped. Scores are negated squared
 * Euclidean distances, so `query` returns the K nearest items in ascending
 * distance order.
 */
class KnnProvider final : public ScoreProvider {
public:
  KnnProvider(const FeatureTable& features, int k) : k_(k) {
    if (k < 1) throw ConstraintError("provider list length must be >= 1");
    if (features.num_items() < k + 1) {
      throw ConstraintError("knn provider needs at least K+1 items");
    }
    const std::size_t n = features.rows.size();
    std::vector<double> mean(features.dim, 0.0), var(features.dim, 0.0);
    for (const auto& row : features.rows) {
      for (std::size_t j = 0; j < features.dim; ++j) mean[j] += row[j];
    }
    for (std::size_t j = 0; j < features.dim; ++j) mean[j] /= static_cast<double>(n);
    for (const auto& row : features.rows) {
      for (std::size_t j = 0; j < features.dim; ++j) {
        const double d = row[j] - mean[j];
        var[j] += d * d;
      }
    }
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < features.dim; ++j) {
      var[j] /= static_cast<double>(n);
      if (var[j] > 0.0) kept.push_back(j);
    }
    z_.assign(n, std::vector<double>(kept.size()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t jj = 0; jj < kept.size(); ++jj) {
        const std::size_t j = kept[jj];
        z_[i][jj] = (features.rows[i][j] - mean[j]) / std::sqrt(var[j]);
      }
    }
  }

  std::vector<double> scores(ItemId source) const override {
    const std::vector<double>& zs = z_[static_cast<std::size_t>(source)];
    std::vector<double> out(z_.size());
    for (std::size_t j = 0; j < z_.size(); ++j) {
      double dist2 = 0.0;
      for (std::size_t f = 0; f < zs.size(); ++f) {
        const double d = z_[j][f] - zs[f];
        dist2 += d * d;
      }
      out[j] = -dist2;
    }
    return out;
  }

  ItemId num_items() const override { return static_cast<ItemId>(z_.size()); }
  int list_length() const override { return k_; }

private:
  std::vector<std::vector<double>> z_;
  int k_;
};

/**
 * Item-to-item cosine similarity over the binary interaction matrix. An
 * item's vector is its user column; items nobody interacted with score -1
 * against everything, placing them after any genuine candidate.
 */
class CosineProvider final : public ScoreProvider {
public:
  CosineProvider(const InteractionLog& log, int k) : k_(k), n_(log.n_items) {
    if (k < 1) throw ConstraintError("provider list length must be >= 1");
    if (log.n_items < k + 1) {
      throw ConstraintError("cosine provider needs at least K+1 items");
    }
    items_of_user_.resize(static_cast<std::size_t>(log.n_users));
    users_of_item_.resize(static_cast<std::size_t>(log.n_items));
    for (const Interaction& t : log.triples) {
      items_of_user_[static_cast<std::size_t>(t.user)].push_back(t.item);
      users_of_item_[static_cast<std::size_t>(t.item)].push_back(t.user);
    }
    norm_.resize(static_cast<std::size_t>(log.n_items));
    for (ItemId i = 0; i < log.n_items; ++i) {
      norm_[static_cast<std::size_t>(i)] =
          std::sqrt(static_cast<double>(users_of_item_[static_cast<std::size_t>(i)].size()));
    }
  }

  std::vector<double> scores(ItemId source) const override {
    std::vector<double> out(static_cast<std::size_t>(n_), 0.0);
    const double ns = norm_[static_cast<std::size_t>(source)];
    if (ns > 0.0) {
      std::vector<int> overlap(static_cast<std::size_t>(n_), 0);
      for (int u : users_of_item_[static_cast<std::size_t>(source)]) {
        for (ItemId j : items_of_user_[static_cast<std::size_t>(u)]) {
          ++overlap[static_cast<std::size_t>(j)];
        }
      }
      for (ItemId j = 0; j < n_; ++j) {
        const double nj = norm_[static_cast<std::size_t>(j)];
        if (nj > 0.0) {
          out[static_cast<std::size_t>(j)] =
              static_cast<double>(overlap[static_cast<std::size_t>(j)]) / (ns * nj);
        }
      }
    }
    for (ItemId j = 0; j < n_; ++j) {
      if (norm_[static_cast<std::size_t>(j)] == 0.0) out[static_cast<std::size_t>(j)] = -1.0;
    }
    return out;
  }

  ItemId num_items() const override { return n_; }
  int list_length() const override { return k_; }

private:
  std::vector<std::vector<ItemId>> items_of_user_;
  std::vector<std::vector<int>> users_of_item_;
  std::vector<double> norm_;
  int k_;
  ItemId n_;
};

/** Inner-product provider over ingested latent embeddings. */
class DotProvider final : public ScoreProvider {
public:
  DotProvider(EmbeddingTable emb, int k) : emb_(std::move(emb)), k_(k) {
    if (k < 1) throw ConstraintError("provider list length must be >= 1");
    if (emb_.num_items() < k + 1) {
      throw ConstraintError("dot provider needs at least K+1 items");
    }
  }

  std::vector<double> scores(ItemId source) const override {
    const std::vector<double>& vs = emb_.rows[static_cast<std::size_t>(source)];
    std::vector<double> out(emb_.rows.size());
    for (std::size_t j = 0; j < emb_.rows.size(); ++j) {
      double dot = 0.0;
      for (std::size_t f = 0; f < emb_.dim; ++f) dot += vs[f] * emb_.rows[j][f];
      out[j] = dot;
    }
    return out;
  }

  ItemId num_items() const override { return emb_.num_items(); }
  int list_length() const override { return k_; }

private:
  EmbeddingTable emb_;
  int k_;
};

/**
 * Fixture provider replaying stored lists, e.g. a network file loaded back.
 * Lists are validated once: in-range distinct entries, no self-loops.
 */
class ListsProvider final : public ProviderOracle {
public:
  ListsProvider(std::vector<RecList> lists, int k) : lists_(std::move(lists)), k_(k) {
    if (k < 1) throw ConstraintError("provider list length must be >= 1");
    const ItemId n = static_cast<ItemId>(lists_.size());
    for (ItemId i = 0; i < n; ++i) {
      std::vector<bool> seen(static_cast<std::size_t>(n), false);
      for (ItemId j : lists_[static_cast<std::size_t>(i)]) {
        if (j < 0 || j >= n) throw ConstraintError("list entry out of range");
        if (j == i) throw ConstraintError("list for item " + std::to_string(i) +
                                          " recommends the item itself");
        if (seen[static_cast<std::size_t>(j)]) {
          throw ConstraintError("duplicate entry in list for item " + std::to_string(i));
        }
        seen[static_cast<std::size_t>(j)] = true;
      }
      if (static_cast<int>(lists_[static_cast<std::size_t>(i)].size()) > k_) {
        throw ConstraintError("list for item " + std::to_string(i) + " longer than K");
      }
    }
  }

  RecList query(ItemId source) const override { return lists_[static_cast<std::size_t>(source)]; }
  ItemId num_items() const override { return static_cast<ItemId>(lists_.size()); }
  int list_length() const override { return k_; }

private:
  std::vector<RecList> lists_;
  int k_;
};

namespace detail {

/** History view over a score provider: lists re-ranked, stay full length. */
class ScoreHistoryView final : public ScoreProvider {
public:
  ScoreHistoryView(const ScoreProvider& base, const std::vector<ItemId>& history) : base_(base) {
    excluded_.assign(static_cast<std::size_t>(base.num_items()), false);
    for (ItemId h : history) excluded_[static_cast<std::size_t>(h)] = true;
  }

  std::vector<double> scores(ItemId source) const override { return base_.scores(source); }
  ItemId num_items() const override { return base_.num_items(); }
  int list_length() const override { return base_.list_length(); }

private:
  const ScoreProvider& base_;
};

/** History view over an opaque provider: entries dropped, lists may shorten. */
class FilterHistoryView final : public ProviderOracle {
public:
  FilterHistoryView(const ProviderOracle& base, const std::vector<ItemId>& history) : base_(base) {
    excluded_.assign(static_cast<std::size_t>(base.num_items()), false);
    for (ItemId h : history) excluded_[static_cast<std::size_t>(h)] = true;
  }

  RecList query(ItemId source) const override {
    RecList list = base_.query(source);
    std::erase_if(list, [this](ItemId j) { return excluded_[static_cast<std::size_t>(j)]; });
    return list;
  }

  ItemId num_items() const override { return base_.num_items(); }
  int list_length() const override { return base_.list_length(); }

private:
  const ProviderOracle& base_;
  std::vector<bool> excluded_;
};

}  // namespace detail

/**
 * Applies a user's history to an oracle so its pages never show consumed
 * items. Score-backed providers refill their lists to full length; opaque
 * list providers can only drop entries, so their lists may shorten. The
 * view borrows `base`, which must outlive it.
 */
inline std::unique_ptr<ProviderOracle> with_history(const ProviderOracle& base,
                                                    const std::vector<ItemId>& history) {
  for (ItemId h : history) {
    if (h < 0 || h >= base.num_items()) {
      throw ConstraintError("history item " + std::to_string(h) + " out of range");
    }
  }
  if (const auto* scored = dynamic_cast<const ScoreProvider*>(&base)) {
    return std::make_unique<detail::ScoreHistoryView>(*scored, history);
  }
  return std::make_unique<detail::FilterHistoryView>(base, history);
}

/** Exact query counters; distinct never exceeds total. */
struct AccessMeter {
  long long total = 0;     ///< every query() call
  long long distinct = 0;  ///< unique source items queried
};

/**
 * Memoizing meter around an oracle. Repeat queries to a source are served
 * from the cache, so `distinct` counts item pages actually fetched, the
 * quantity the locality guarantees are about.
 *
 * Not internally synchronized; give each concurrent task its own instance.
 */
class MeteredOracle final : public ProviderOracle {
public:
  explicit MeteredOracle(const ProviderOracle& base) : base_(base) {}

  RecList query(ItemId source) const override {
    ++meter_.total;
    const auto it = cache_.find(source);
    if (it != cache_.end()) return it->second;
    ++meter_.distinct;
    return cache_.emplace(source, base_.query(source)).first->second;
  }

  ItemId num_items() const override { return base_.num_items(); }
  int list_length() const override { return base_.list_length(); }

  const AccessMeter& meter() const { return meter_; }

private:
  const ProviderOracle& base_;
  mutable std::unordered_map<ItemId, RecList> cache_;
  mutable AccessMeter meter_;
};

}  // namespace userside

#endif  // USERSIDE_PROVIDER_HPP
