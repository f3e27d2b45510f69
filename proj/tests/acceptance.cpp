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

// Release acceptance gate. Each check prints exactly one PASS/FAIL line with
// the measured numbers and its wall time; the process exits with the number
// of failed checks. Checks run against the public headers plus the installed
// CLI binary (path injected via USERSIDE_CLI_PATH), never against internals.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "support/dense_ppr.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"
#include "userside/userside.hpp"

namespace {

using userside::AttributeTable;
using userside::FairnessParams;
using userside::ItemId;
using userside::PprParams;
using userside::Ratio;
using userside::RecList;
using userside::Rng;
using userside::RowNormalizedNetwork;
using userside::WalkParams;

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

double l1_against(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(a[i] - b(static_cast<Eigen::Index>(i)));
  }
  return sum;
}

// Soundness: randomized instances, every full-length list from every
// fairness-aware method carries at least tau of each group.
Outcome check_soundness() {
  constexpr int kRuns = 1000;
  constexpr int kLen = 10;
  Rng meta(1001);
  long long lists_checked = 0;
  for (int inst = 0; inst < kRuns; ++inst) {
    const ItemId n = 20 + static_cast<ItemId>(meta.next_below(181));
    const int groups = 2 + static_cast<int>(meta.next_below(2));
    const int tau = static_cast<int>(meta.next_below(static_cast<std::uint64_t>(kLen / groups) + 1));
    const testsup::HashScoreProvider provider(n, kLen, meta.next_u64());
    const AttributeTable attrs = testsup::round_robin_attrs(n, groups, meta.next_u64());
    const FairnessParams params(kLen, tau);
    const ItemId source = static_cast<ItemId>(meta.next_below(static_cast<std::uint64_t>(n)));

    const RowNormalizedNetwork net = row_normalize(crawl(provider));
    const RecList produced[] = {
        privaterank_recommend(net, source, attrs, params, PprParams{}),
        privatewalk_recommend(provider, source, attrs, params,
                              WalkParams{userside::kPrivateWalkDefaultSteps, meta.next_u64()}),
        consul_recommend(provider, source, attrs, params,
                         WalkParams{userside::kConsulDefaultPages, meta.next_u64()}),
        random_fair_recommend(n, source, attrs, params, meta.next_u64()),
        oracle_fair_recommend(provider, source, attrs, params),
    };
    for (const RecList& list : produced) {
      if (static_cast<int>(list.size()) != kLen) {
        return {false, "instance " + std::to_string(inst) + " produced a short list (" +
                           std::to_string(list.size()) + " items) with n=" + std::to_string(n)};
      }
      ++lists_checked;
      if (!least_ratio(list, attrs).at_least(tau, kLen)) {
        return {false, "instance " + std::to_string(inst) + " violated tau=" +
                           std::to_string(tau) + " (n=" + std::to_string(n) +
                           ", groups=" + std::to_string(groups) + ")"};
      }
    }
  }
  return {true, std::to_string(kRuns) + " instances, " + std::to_string(lists_checked) +
                    " full lists, zero quota violations"};
}

// Consistency: with tau=0, Consul reproduces the provider page exactly, and
// so does PrivateRank once its damping sits below the consistency threshold.
Outcome check_consistency() {
  constexpr int kRuns = 100;
  constexpr int kLen = 10;
  constexpr double kDamping = 1e-4;
  const double threshold = userside::consistency_threshold(kLen);
  if (!(kDamping < threshold)) {
    return {false, "damping " + fmt(kDamping) + " is not below the threshold " + fmt(threshold)};
  }
  Rng meta(2002);
  for (int inst = 0; inst < kRuns; ++inst) {
    const ItemId n = 30 + static_cast<ItemId>(meta.next_below(171));
    const testsup::HashScoreProvider provider(n, kLen, meta.next_u64());
    const AttributeTable attrs = testsup::round_robin_attrs(n, 2, meta.next_u64());
    const FairnessParams params(kLen, 0);
    const ItemId source = static_cast<ItemId>(meta.next_below(static_cast<std::uint64_t>(n)));
    const RecList expected = provider.query(source);

    const RecList consul = consul_recommend(provider, source, attrs, params,
                                            WalkParams{userside::kConsulDefaultPages, 7});
    if (consul != expected) {
      return {false, "consul diverged from the provider on instance " + std::to_string(inst)};
    }
    const RowNormalizedNetwork net = row_normalize(crawl(provider));
    const RecList ranked =
        privaterank_recommend(net, source, attrs, params, PprParams{kDamping, 10});
    if (ranked != expected) {
      return {false, "privaterank(c=" + fmt(kDamping) + ") diverged on instance " +
                         std::to_string(inst)};
    }
  }
  return {true, std::to_string(kRuns) + "/" + std::to_string(kRuns) +
                    " exact list matches (threshold " + fmt(threshold, 3) + ")"};
}

// Inconsistency witness: on the 5-item cyclic counterexample PrivateWalk with
// tau=0 must differ from the provider page for at least one seed.
Outcome check_witness() {
  const userside::ListsProvider oracle = testsup::counterexample_provider();
  const AttributeTable attrs = AttributeTable::uniform(5);
  const FairnessParams params(2, 0);
  const ItemId source = 2;
  const RecList expected = oracle.query(source);
  long long differing = 0;
  constexpr std::uint64_t kSeeds = 10000;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    if (privatewalk_recommend(oracle, source, attrs, params, WalkParams{10, seed}) != expected) {
      ++differing;
    }
  }
  if (differing == 0) {
    return {false, "all " + std::to_string(kSeeds) + " seeds reproduced the provider page"};
  }
  return {true, std::to_string(differing) + " of " + std::to_string(kSeeds) +
                    " seeds diverged from the provider page"};
}

// Locality: on a biased catalogue Consul stays within its page budget and far
// below PrivateWalk, while the PrivateRank crawl touches every page once.
Outcome check_locality() {
  const testsup::BiasedProvider oracle(1000, 50, 10);
  const AttributeTable attrs = oracle.attributes();
  const FairnessParams params(10, 5);
  const ItemId source = 500;

  userside::MeteredOracle crawl_meter(oracle);
  crawl(crawl_meter);
  if (crawl_meter.meter().distinct != 1000) {
    return {false, "crawl touched " + std::to_string(crawl_meter.meter().distinct) +
                       " pages instead of 1000"};
  }

  double consul_sum = 0.0;
  double walk_sum = 0.0;
  constexpr int kSeeds = 100;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    userside::MeteredOracle consul_meter(oracle);
    consul_recommend(consul_meter, source, attrs, params,
                     WalkParams{userside::kConsulDefaultPages, seed});
    consul_sum += static_cast<double>(consul_meter.meter().distinct);

    userside::MeteredOracle walk_meter(oracle);
    privatewalk_recommend(walk_meter, source, attrs, params,
                          WalkParams{userside::kPrivateWalkDefaultSteps, seed});
    walk_sum += static_cast<double>(walk_meter.meter().distinct);
  }
  const double consul_mean = consul_sum / kSeeds;
  const double walk_mean = walk_sum / kSeeds;
  const std::string stats = "consul " + fmt(consul_mean) + " pages, privatewalk " +
                            fmt(walk_mean) + " pages, crawl 1000";
  if (consul_mean > userside::kConsulDefaultPages) {
    return {false, stats + "; consul exceeded its page budget"};
  }
  if (!(consul_mean <= walk_mean / 3.0)) {
    return {false, stats + "; consul is not 3x cheaper than privatewalk"};
  }
  return {true, stats};
}

// PageRank numerics: the truncated cumulative power iteration matches a dense
// linear solve, and its truncation error obeys the c^(L+1) tail bound. The
// tiny additive slack covers float rounding in both solvers.
Outcome check_ppr_numerics() {
  constexpr double kSlack = 1e-10;
  Rng meta(5005);
  double worst_solve = 0.0;
  for (int graph = 0; graph < 50; ++graph) {
    const ItemId n = 8 + static_cast<ItemId>(meta.next_below(43));
    const int k = 2 + static_cast<int>(meta.next_below(4));
    const double c = 0.05 + 0.45 * meta.next_unit();
    const testsup::HashScoreProvider provider(n, k, meta.next_u64());
    const RowNormalizedNetwork net = row_normalize(crawl(provider));
    const ItemId source = static_cast<ItemId>(meta.next_below(static_cast<std::uint64_t>(n)));
    const Eigen::VectorXd exact = testsup::ppr_dense_oracle(net, source, c);

    const double solve_err = l1_against(ppr_cpi(net, source, PprParams{c, 200}), exact);
    worst_solve = std::max(worst_solve, solve_err);
    if (solve_err > 1e-8) {
      return {false, "L=200 solve error " + fmt(solve_err) + " above 1e-8 on graph " +
                         std::to_string(graph)};
    }
    for (int iters = 0; iters <= 50; ++iters) {
      const double tail = l1_against(ppr_cpi(net, source, PprParams{c, iters}), exact);
      const double bound = std::pow(c, iters + 1) + kSlack;
      if (tail > bound) {
        return {false, "tail " + fmt(tail) + " above bound " + fmt(bound) + " at L=" +
                           std::to_string(iters) + ", c=" + fmt(c)};
      }
    }
  }
  return {true, "50 graphs, worst L=200 error " + fmt(worst_solve, 3) +
                    ", tail bound held for every L in [0,50]"};
}

// Metric fixtures with hand-computed values.
Outcome check_metric_fixtures() {
  const AttributeTable attrs({0, 0, 0, 0, 1, 0}, {"M", "W"});
  const RecList list{0, 1, 2, 3, 4, 5};
  const double entropy = list_entropy(list, attrs);
  if (std::abs(entropy - 0.650) > 0.001) {
    return {false, "entropy " + fmt(entropy, 6) + " not within 0.001 of 0.650"};
  }
  if (!(least_ratio(list, attrs) == Ratio{1, 6})) {
    return {false, "least ratio is not exactly 1/6"};
  }
  const double ndcg = userside::ndcg_at_k({10, 11, 12}, 11);
  if (std::abs(ndcg - 0.6309) > 1e-4) {
    return {false, "rank-2 ndcg " + fmt(ndcg, 6) + " not within 1e-4 of 0.6309"};
  }
  return {true, "entropy " + fmt(entropy, 4) + ", least ratio 1/6, rank-2 ndcg " + fmt(ndcg, 4)};
}

// Embedding recovery: a k-NN oracle over a planar cloud is enough to win back
// the geometry up to a similarity transform.
Outcome check_recovery() {
  constexpr ItemId kPoints = 200;
  Rng rng(777);
  Eigen::MatrixXd truth(kPoints, 2);
  for (ItemId i = 0; i < kPoints; ++i) {
    truth(i, 0) = rng.next_unit();
    truth(i, 1) = rng.next_unit();
  }
  const userside::KnnProvider oracle(userside::to_table(truth), 10);
  const userside::EtpResult result = userside::etp_pipeline(oracle, 2, &truth);
  const std::vector<double> true_dists =
      userside::upper_triangle(userside::pairwise_distances(truth));
  const double diameter = *std::max_element(true_dists.begin(), true_dists.end());
  const double rmse_cap = 0.05 * diameter;
  std::string stats = "spearman " + fmt(result.spearman_to_truth) + " (>=0.9), rmse " +
                      fmt(result.procrustes_rmse) + " (<=" + fmt(rmse_cap) + ")";
  if (result.dist.disconnected) stats += ", graph disconnected";
  const bool ok = result.spearman_to_truth >= 0.9 && result.procrustes_rmse <= rmse_cap;
  return {ok, stats};
}

// Trade-off monotonicity on the biased benchmark: fairness never drops as tau
// grows, tops out at exactly 0.5 under the tightest quota, and the raw
// provider stays below that line throughout.
Outcome check_tradeoff() {
  const testsup::BiasedProvider provider(1000, 50, 10);
  const AttributeTable attrs = provider.attributes();
  userside::SweepTask task;
  task.provider = &provider;
  task.scores = &provider;
  task.attrs = &attrs;
  task.k = 10;
  for (ItemId s = 60; s < 1000; s += 95) task.sources.push_back(s);

  userside::SweepParams params;
  params.taus = {0, 1, 2, 3, 4, 5};
  params.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<userside::Method> methods = {
      userside::Method::kProvider,    userside::Method::kRandomFair,
      userside::Method::kOracleFair,  userside::Method::kPrivateRank,
      userside::Method::kPrivateWalk, userside::Method::kConsul,
  };
  const userside::TradeoffReport report = sweep(task, methods, params);

  const auto rows_of = [&report](const std::string& name) {
    std::vector<userside::TradeoffRow> rows;
    for (const userside::TradeoffRow& row : report.rows) {
      if (row.method == name) rows.push_back(row);
    }
    return rows;
  };
  for (const userside::TradeoffRow& row : report.rows) {
    if (!row.error.empty()) {
      return {false, row.method + " tau=" + std::to_string(row.tau) + " errored: " + row.error};
    }
  }
  for (const std::string name : {"random", "oracle", "privaterank", "privatewalk", "consul"}) {
    const std::vector<userside::TradeoffRow> rows = rows_of(name);
    if (rows.size() != params.taus.size()) {
      return {false, name + " is missing sweep rows"};
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].least_ratio_mean < rows[i - 1].least_ratio_mean) {
        return {false, name + " dipped from " + fmt(rows[i - 1].least_ratio_mean) + " to " +
                           fmt(rows[i].least_ratio_mean) + " at tau=" +
                           std::to_string(rows[i].tau)};
      }
    }
    if (rows.back().least_ratio_mean != 0.5) {
      return {false, name + " reached " + fmt(rows.back().least_ratio_mean, 10) +
                         " at tau=5 instead of exactly 0.5"};
    }
  }
  double provider_worst = 0.0;
  for (const userside::TradeoffRow& row : rows_of("provider")) {
    provider_worst = std::max(provider_worst, row.least_ratio_mean);
  }
  if (!(provider_worst < 0.5)) {
    return {false, "provider baseline reached " + fmt(provider_worst) + ", expected < 0.5"};
  }
  return {true, "5 constrained methods non-decreasing and exactly 0.5 at tau=5; provider peaks at " +
                    fmt(provider_worst)};
}

// CLI determinism: the same sweep invocation, repeated (and once more with a
// thread pool), writes byte-identical reports.
Outcome check_cli_determinism() {
  const testsup::TempDir dir;
  Rng rng(4242);
  userside::VectorTable features;
  features.dim = 2;
  for (int i = 0; i < 60; ++i) features.rows.push_back({rng.next_unit(), rng.next_unit()});
  const std::string features_path = (dir.path() / "features.csv").string();
  userside::save_vectors(features_path, features);

  std::vector<int> group_of(60);
  for (int i = 0; i < 60; ++i) group_of[static_cast<std::size_t>(i)] = i % 3;
  const std::string attrs_path = (dir.path() / "attrs.csv").string();
  userside::save_attributes(attrs_path, AttributeTable(group_of, {"a", "b", "c"}));

  const std::string cli = USERSIDE_CLI_PATH;
  const auto run = [&](const std::string& tag, const std::string& extra) {
    const std::string csv_path = (dir.path() / (tag + ".csv")).string();
    const std::string json_path = (dir.path() / (tag + ".json")).string();
    const std::string cmd = cli + " sweep --provider knn --features " + features_path +
                            " --attributes " + attrs_path +
                            " -K 6 --methods provider,random,oracle,privaterank,privatewalk,consul"
                            " --taus 0,1,2 --seeds 11,12 --sources 0,5,10,15,20,25" +
                            extra + " --report " + csv_path + " --report-json " + json_path +
                            " > " + (dir.path() / (tag + ".out")).string() + " 2> " +
                            (dir.path() / (tag + ".err")).string();
    const int raw = std::system(cmd.c_str());
    return (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
  };
  for (const auto& [tag, extra] : std::vector<std::pair<std::string, std::string>>{
           {"r1", ""}, {"r2", ""}, {"r3", " --jobs 4"}}) {
    const int code = run(tag, extra);
    if (code != 0) {
      return {false, "sweep run " + tag + " exited with code " + std::to_string(code)};
    }
  }
  const std::string csv1 = testsup::TempDir::slurp(dir.path() / "r1.csv");
  if (csv1.empty()) return {false, "first sweep wrote an empty report"};
  for (const std::string tag : {"r2", "r3"}) {
    if (testsup::TempDir::slurp(dir.path() / (tag + ".csv")) != csv1) {
      return {false, "CSV report from " + tag + " differs from the first run"};
    }
    if (testsup::TempDir::slurp(dir.path() / (tag + ".json")) !=
        testsup::TempDir::slurp(dir.path() / "r1.json")) {
      return {false, "JSON report from " + tag + " differs from the first run"};
    }
  }
  return {true, "3 identical runs (one with --jobs 4), reports byte-identical"};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    double budget_s;  // zero means no time limit
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "soundness", 60.0, &check_soundness},
      {2, "consistency", 30.0, &check_consistency},
      {3, "walk witness", 10.0, &check_witness},
      {4, "locality", 120.0, &check_locality},
      {5, "pagerank numerics", 30.0, &check_ppr_numerics},
      {6, "metric fixtures", 5.0, &check_metric_fixtures},
      {7, "embedding recovery", 60.0, &check_recovery},
      {8, "tradeoff sweep", 120.0, &check_tradeoff},
      {9, "cli determinism", 0.0, &check_cli_determinism},
  };
  int failures = 0;
  for (const Entry& entry : entries) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = entry.fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("unexpected exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.ok && entry.budget_s > 0.0 && secs > entry.budget_s) {
      outcome.ok = false;
      outcome.detail += "; exceeded the " + fmt(entry.budget_s, 3) + "s budget";
    }
    std::printf("%s %d %-18s %s  [%.2fs]\n", outcome.ok ? "PASS" : "FAIL", entry.id, entry.name,
                outcome.detail.c_str(), secs);
    if (!outcome.ok) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance checks passed\n", std::size(entries));
  } else {
    std::printf("%d acceptance check(s) FAILED\n", failures);
  }
  return failures;
}
