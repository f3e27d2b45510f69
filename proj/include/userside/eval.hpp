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

#ifndef USERSIDE_EVAL_HPP
#define USERSIDE_EVAL_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "userside/core.hpp"
#include "userside/csv.hpp"
#include "userside/network.hpp"
#include "userside/provider.hpp"
#include "userside/rank.hpp"
#include "userside/rng.hpp"
#include "userside/walk.hpp"

/**
 * @file eval.hpp
 * @brief Accuracy metrics, reference baselines and the tau-sweep harness
 * that produces fairness/performance trade-off tables.
 */

namespace userside {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/**
 * Mean over sources of the fraction of recommended items sharing the source
 * item's class label. `labels` maps every item to a class; a negative label
 * means unlabeled and is rejected.
 */
inline double precision_same_label(std::span<const ItemId> sources,
                                   std::span<const RecList> lists, std::span<const int> labels) {
  if (sources.size() != lists.size() || sources.empty()) {
    throw std::invalid_argument("precision needs parallel non-empty sources and lists");
  }
  const auto label_of = [&labels](ItemId item) {
    if (item < 0 || static_cast<std::size_t>(item) >= labels.size() ||
        labels[static_cast<std::size_t>(item)] < 0) {
      throw ConstraintError("item " + std::to_string(item) + " has no class label");
    }
    return labels[static_cast<std::size_t>(item)];
  };
  double sum = 0.0;
  for (std::size_t u = 0; u < sources.size(); ++u) {
    const int want = label_of(sources[u]);
    if (lists[u].empty()) continue;
    int same = 0;
    for (ItemId j : lists[u]) {
      if (label_of(j) == want) ++same;
    }
    sum += static_cast<double>(same) / static_cast<double>(lists[u].size());
  }
  return sum / static_cast<double>(sources.size());
}

/** 1 iff the held-out positive appears anywhere in the list. */
inline int recall_at_k(const RecList& list, ItemId positive) {
  return std::find(list.begin(), list.end(), positive) != list.end() ? 1 : 0;
}

/**
 * nDCG with a single positive: the rank discount of the positive's 1-based
 * position, 0 if absent. The ideal DCG is 1, so rank 1 scores 1.0 and rank
 * 2 scores about 0.6309.
 */
inline double ndcg_at_k(const RecList& list, ItemId positive) {
  const auto it = std::find(list.begin(), list.end(), positive);
  if (it == list.end()) return 0.0;
  return rank_discount(static_cast<int>(it - list.begin()) + 1);
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/**
 * A seeded random permutation of the universe passed through the fair
 * greedy filter: the floor every reasonable method should beat.
 */
inline RecList random_fair_recommend(ItemId num_items, ItemId source, const AttributeTable& attrs,
                                     const FairnessParams& params, std::uint64_t seed,
                                     const std::vector<ItemId>& history = {}) {
  params.validate(attrs);
  std::vector<ItemId> order(static_cast<std::size_t>(num_items));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<bool> banned(static_cast<std::size_t>(num_items), false);
  banned[static_cast<std::size_t>(source)] = true;
  for (ItemId h : history) banned[static_cast<std::size_t>(h)] = true;
  return fair_greedy_select(std::span<const ItemId>(order), attrs, params,
                            [&banned](ItemId j) { return banned[static_cast<std::size_t>(j)]; });
}

/**
 * Post-hoc fair re-ranking straight from the provider's internal scores, a
 * privilege no consumer-side method has. Serves as the accuracy ceiling.
 */
inline RecList oracle_fair_recommend(const ScoreProvider& provider, ItemId source,
                                     const AttributeTable& attrs, const FairnessParams& params,
                                     const std::vector<ItemId>& history = {}) {
  params.validate(attrs);
  const std::vector<double> scores = provider.scores(source);
  const std::vector<ItemId> order = argsort_desc(scores);
  std::vector<bool> banned(static_cast<std::size_t>(provider.num_items()), false);
  banned[static_cast<std::size_t>(source)] = true;
  for (ItemId h : history) banned[static_cast<std::size_t>(h)] = true;
  return fair_greedy_select(std::span<const ItemId>(order), attrs, params,
                            [&banned](ItemId j) { return banned[static_cast<std::size_t>(j)]; });
}

// ---------------------------------------------------------------------------
// Sweep harness
// ---------------------------------------------------------------------------

enum class Method { kProvider, kRandomFair, kOracleFair, kPrivateRank, kPrivateWalk, kConsul };

inline const std::vector<std::pair<Method, std::string>>& method_names() {
  static const std::vector<std::pair<Method, std::string>> names = {
      {Method::kProvider, "provider"},       {Method::kRandomFair, "random"},
      {Method::kOracleFair, "oracle"},       {Method::kPrivateRank, "privaterank"},
      {Method::kPrivateWalk, "privatewalk"}, {Method::kConsul, "consul"},
  };
  return names;
}

inline std::string method_name(Method m) {
  for (const auto& [method, name] : method_names()) {
    if (method == m) return name;
  }
  throw std::invalid_argument("unknown method");
}

inline Method method_from_name(const std::string& name) {
  for (const auto& [method, n] : method_names()) {
    if (n == name) return method;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

/**
 * One evaluation setting: a provider over a universe with attributes, the
 * users (sources) to recommend for, and optional supervision. Accuracy is
 * nDCG against `positives` when given, otherwise same-label precision when
 * `labels` are given, otherwise reported as NaN.
 */
struct SweepTask {
  const ProviderOracle* provider = nullptr;  ///< required
  const ScoreProvider* scores = nullptr;     ///< enables the oracle baseline
  const AttributeTable* attrs = nullptr;     ///< required
  int k = 10;                                ///< list length
  std::vector<ItemId> sources;
  std::vector<ItemId> positives;                              ///< empty or parallel to sources
  const std::vector<std::vector<ItemId>>* histories = nullptr;  ///< per source, optional
  std::vector<int> labels;                                    ///< per item, optional
};

struct SweepParams {
  std::vector<int> taus{0};
  std::vector<std::uint64_t> seeds{0};
  PprParams ppr{};
  int privatewalk_steps = kPrivateWalkDefaultSteps;
  int consul_pages = kConsulDefaultPages;
  int jobs = 1;
};

/** One aggregated report row; means are over sources x seeds runs. */
struct TradeoffRow {
  std::string method;
  int tau = 0;
  double least_ratio_mean = std::numeric_limits<double>::quiet_NaN();
  double entropy_mean = std::numeric_limits<double>::quiet_NaN();
  double accuracy_mean = std::numeric_limits<double>::quiet_NaN();
  double accesses_mean = std::numeric_limits<double>::quiet_NaN();
  int runs = 0;
  std::string error;  ///< empty on success
};

struct TradeoffReport {
  std::vector<TradeoffRow> rows;

  std::string to_csv() const {
    std::ostringstream out;
    out << "method,tau,least_ratio_mean,entropy_mean,accuracy_mean,accesses_mean,runs,error\n";
    for (const TradeoffRow& row : rows) {
      out << row.method << ',' << row.tau << ',' << csv::format_double(row.least_ratio_mean) << ','
          << csv::format_double(row.entropy_mean) << ',' << csv::format_double(row.accuracy_mean)
          << ',' << csv::format_double(row.accesses_mean, 3) << ',' << row.runs << ',' << row.error
          << '\n';
    }
    return out.str();
  }

  /** Infinities and NaNs have no JSON literal and are emitted as null. */
  std::string to_json() const {
    const auto number = [](double v) {
      return std::isfinite(v) ? csv::format_double(v) : std::string("null");
    };
    std::ostringstream out;
    out << "{\"rows\":[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const TradeoffRow& row = rows[i];
      if (i > 0) out << ',';
      out << "{\"method\":\"" << row.method << "\",\"tau\":" << row.tau
          << ",\"least_ratio_mean\":" << number(row.least_ratio_mean)
          << ",\"entropy_mean\":" << number(row.entropy_mean)
          << ",\"accuracy_mean\":" << number(row.accuracy_mean)
          << ",\"accesses_mean\":" << number(row.accesses_mean) << ",\"runs\":" << row.runs
          << ",\"error\":\"" << row.error << "\"}";
    }
    out << "]}";
    return out.str();
  }
};

namespace detail {

/** Shared per-task artifacts the expensive methods reuse across cells. */
struct SweepContext {
  // History view per source position (null when the task has no histories).
  std::vector<std::unique_ptr<ProviderOracle>> views;
  // PrivateRank: normalized network + descending PageRank order per source
  // position. With no histories every position shares index 0.
  std::vector<RowNormalizedNetwork> networks;
  std::vector<std::vector<ItemId>> rank_orders;
  // Oracle baseline: full descending score order per source position.
  std::vector<std::vector<ItemId>> score_orders;
};

inline const ProviderOracle& view_of(const SweepTask& task, const SweepContext& ctx,
                                     std::size_t position) {
  if (task.histories == nullptr) return *task.provider;
  return *ctx.views[position];
}

inline double accuracy_of(const SweepTask& task, std::size_t position, const RecList& list) {
  if (!task.positives.empty()) {
    return ndcg_at_k(list, task.positives[position]);
  }
  if (!task.labels.empty()) {
    const ItemId source = task.sources[position];
    return precision_same_label(std::span<const ItemId>(&source, 1),
                                std::span<const RecList>(&list, 1), task.labels);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/**
 * Runs the full method x tau x source x seed cross-product and aggregates
 * one report row per (method, tau) cell.
 *
 * Determinism: per-run seeds are derived from the seed list, the method,
 * the tau and the source position only, so reruns with an identical task
 * and params reproduce the report byte for byte. Access counts come from a
 * fresh memoizing meter per run for the walk methods; PrivateRank is
 * charged the full crawl (n pages) per run; the provider baseline reads one
 * page; the random baseline none; the oracle baseline has no page-access
 * model and reports infinity.
 *
 * A failing cell records its error message and leaves the means NaN; the
 * sweep continues.
 */
inline TradeoffReport sweep(const SweepTask& task, const std::vector<Method>& methods,
                            const SweepParams& params) {
  if (task.provider == nullptr || task.attrs == nullptr) {
    throw std::invalid_argument("sweep needs a provider and an attribute table");
  }
  if (task.sources.empty()) throw std::invalid_argument("sweep needs at least one source");
  if (!task.positives.empty() && task.positives.size() != task.sources.size()) {
    throw std::invalid_argument("positives must parallel sources");
  }
  if (task.histories != nullptr && task.histories->size() != task.sources.size()) {
    throw std::invalid_argument("histories must parallel sources");
  }
  if (params.taus.empty() || params.seeds.empty()) {
    throw std::invalid_argument("sweep needs at least one tau and one seed");
  }
  const ItemId n = task.attrs->num_items();
  if (task.provider->num_items() != n) {
    throw std::invalid_argument("provider and attribute table disagree on the universe");
  }

  std::vector<int> taus = params.taus;
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  const bool needs_rank = std::find(methods.begin(), methods.end(), Method::kPrivateRank) != methods.end();
  const bool needs_oracle = std::find(methods.begin(), methods.end(), Method::kOracleFair) != methods.end();
  if (needs_oracle && task.scores == nullptr) {
    throw std::invalid_argument("the oracle baseline needs a score-backed provider");
  }

  // Build shared artifacts up front so the per-cell work is read-only.
  detail::SweepContext ctx;
  const std::size_t positions = task.histories == nullptr ? 1 : task.sources.size();
  if (task.histories != nullptr) {
    ctx.views.reserve(task.sources.size());
    for (std::size_t u = 0; u < task.sources.size(); ++u) {
      ctx.views.push_back(with_history(*task.provider, (*task.histories)[u]));
    }
  }
  if (needs_rank) {
    ctx.networks.resize(positions);
    ctx.rank_orders.resize(task.sources.size());
    for (std::size_t p = 0; p < positions; ++p) {
      const ProviderOracle& view = task.histories == nullptr ? *task.provider : *ctx.views[p];
      ctx.networks[p] = row_normalize(crawl(view));
    }
    for (std::size_t u = 0; u < task.sources.size(); ++u) {
      const RowNormalizedNetwork& net = ctx.networks[task.histories == nullptr ? 0 : u];
      ctx.rank_orders[u] = argsort_desc(ppr_cpi(net, task.sources[u], params.ppr));
    }
  }
  if (needs_oracle) {
    ctx.score_orders.resize(task.sources.size());
    for (std::size_t u = 0; u < task.sources.size(); ++u) {
      ctx.score_orders[u] = argsort_desc(task.scores->scores(task.sources[u]));
    }
  }

  struct Cell {
    Method method;
    int tau;
  };
  std::vector<Cell> cells;
  for (Method m : methods) {
    for (int tau : taus) cells.push_back({m, tau});
  }
  TradeoffReport report;
  report.rows.resize(cells.size());

  const auto run_cell = [&](std::size_t cell_idx) {
    const Cell cell = cells[cell_idx];
    TradeoffRow row;
    row.method = method_name(cell.method);
    row.tau = cell.tau;
    try {
      const FairnessParams fairness(task.k, cell.tau);
      fairness.validate(*task.attrs);
      double sum_ratio = 0.0, sum_entropy = 0.0, sum_accuracy = 0.0, sum_accesses = 0.0;
      int runs = 0;
      const std::uint64_t cell_salt =
          static_cast<std::uint64_t>(cell.tau) * 16 + static_cast<std::uint64_t>(cell.method);
      for (std::uint64_t seed : params.seeds) {
        const std::uint64_t cell_seed = mix_seed(seed, cell_salt);
        for (std::size_t u = 0; u < task.sources.size(); ++u) {
          const ItemId source = task.sources[u];
          static const std::vector<ItemId> kNoHistory;
          const std::vector<ItemId>& history =
              task.histories == nullptr ? kNoHistory : (*task.histories)[u];
          const std::uint64_t run_seed = mix_seed(cell_seed, static_cast<std::uint64_t>(u));
          RecList list;
          double accesses = 0.0;
          switch (cell.method) {
            case Method::kProvider: {
              list = detail::view_of(task, ctx, u).query(source);
              accesses = 1.0;
              break;
            }
            case Method::kRandomFair: {
              list = random_fair_recommend(n, source, *task.attrs, fairness, run_seed, history);
              accesses = 0.0;
              break;
            }
            case Method::kOracleFair: {
              std::vector<bool> banned(static_cast<std::size_t>(n), false);
              banned[static_cast<std::size_t>(source)] = true;
              for (ItemId h : history) banned[static_cast<std::size_t>(h)] = true;
              list = fair_greedy_select(
                  std::span<const ItemId>(ctx.score_orders[u]), *task.attrs, fairness,
                  [&banned](ItemId j) { return banned[static_cast<std::size_t>(j)]; });
              accesses = std::numeric_limits<double>::infinity();
              break;
            }
            case Method::kPrivateRank: {
              std::vector<bool> banned(static_cast<std::size_t>(n), false);
              banned[static_cast<std::size_t>(source)] = true;
              for (ItemId h : history) banned[static_cast<std::size_t>(h)] = true;
              list = fair_greedy_select(
                  std::span<const ItemId>(ctx.rank_orders[u]), *task.attrs, fairness,
                  [&banned](ItemId j) { return banned[static_cast<std::size_t>(j)]; });
              accesses = static_cast<double>(n);  // the crawl reads every page
              break;
            }
            case Method::kPrivateWalk: {
              const MeteredOracle metered(detail::view_of(task, ctx, u));
              list = privatewalk_recommend(metered, source, *task.attrs, fairness,
                                           {params.privatewalk_steps, run_seed}, history);
              accesses = static_cast<double>(metered.meter().distinct);
              break;
            }
            case Method::kConsul: {
              const MeteredOracle metered(detail::view_of(task, ctx, u));
              list = consul_recommend(metered, source, *task.attrs, fairness,
                                      {params.consul_pages, run_seed}, history);
              accesses = static_cast<double>(metered.meter().distinct);
              break;
            }
          }
          sum_ratio += least_ratio(list, *task.attrs).value();
          sum_entropy += list_entropy(list, *task.attrs);
          sum_accuracy += detail::accuracy_of(task, u, list);
          sum_accesses += accesses;
          ++runs;
        }
      }
      row.least_ratio_mean = sum_ratio / runs;
      row.entropy_mean = sum_entropy / runs;
      row.accuracy_mean = sum_accuracy / runs;
      row.accesses_mean = sum_accesses / runs;
      row.runs = runs;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    report.rows[cell_idx] = std::move(row);
  };

  const int jobs = std::max(1, params.jobs);
  if (jobs == 1 || cells.size() < 2) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const std::size_t worker_count = std::min<std::size_t>(static_cast<std::size_t>(jobs), cells.size());
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
      workers.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          run_cell(i);
        }
      });
    }
    for (std::thread& t : workers) t.join();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Bootstrap comparison
// ---------------------------------------------------------------------------

struct BootstrapCi {
  double lo = 0.0;
  double hi = 0.0;
};

/**
 * Percentile bootstrap confidence interval for the mean of paired
 * differences a[i] - b[i]. "a is at least b within noise" holds unless the
 * whole interval sits below zero.
 */
inline BootstrapCi bootstrap_mean_diff(std::span<const double> a, std::span<const double> b,
                                       int resamples = 1000, double confidence = 0.95,
                                       std::uint64_t seed = 0) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("bootstrap needs paired non-empty samples");
  }
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  std::vector<double> means(static_cast<std::size_t>(resamples));
  Rng rng(seed);
  for (int r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
      sum += diff[static_cast<std::size_t>(rng.next_below(diff.size()))];
    }
    means[static_cast<std::size_t>(r)] = sum / static_cast<double>(diff.size());
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - confidence) / 2.0;
  const auto pick = [&means](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    return means[static_cast<std::size_t>(std::llround(pos))];
  };
  return {pick(alpha), pick(1.0 - alpha)};
}

}  // namespace userside

#endif  // USERSIDE_EVAL_HPP
