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

// Command-line entry point. Subcommands: ingest, crawl, recommend, recover,
// sweep. Exit codes: 0 success, 1 I/O or data error, 2 usage error,
// 3 fairness-constraint violation.

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "userside/userside.hpp"

namespace {

using namespace userside;

constexpr const char* kVersion = "userside 0.1.0";

// Report and file schemas, printed by --schema for downstream tooling.
constexpr const char* kSchemaJson = R"schema({
  "interactions_csv": "user,item[,timestamp]",
  "attributes_csv": "item,label",
  "vectors_csv": "item,v0,...,v{d-1}",
  "network_csv": "src,dst,rank",
  "split_csv": "user,source,positive,history(;-separated)",
  "remap_csv": "user|item,original",
  "recommend_csv": "rank,item",
  "report_csv": "method,tau,least_ratio_mean,entropy_mean,accuracy_mean,accesses_mean,runs,error",
  "report_json": {"rows": [{"method": "str", "tau": "int", "least_ratio_mean": "num|null", "entropy_mean": "num|null", "accuracy_mean": "num|null", "accesses_mean": "num|null (null also encodes infinity)", "runs": "int", "error": "str"}]}
})schema";

// ---------------------------------------------------------------------------
// Provider selection shared by crawl / recommend / recover / sweep
// ---------------------------------------------------------------------------

struct ProviderOpts {
  std::string kind = "cosine";
  std::string features_path;
  std::string interactions_path;
  std::string embeddings_path;
  std::string network_path;
  int k = 10;
};

void add_provider_opts(CLI::App* cmd, ProviderOpts& opts) {
  cmd->add_option("--provider", opts.kind, "provider oracle kind")
      ->check(CLI::IsMember({"knn", "cosine", "dot", "lists"}))
      ->capture_default_str();
  cmd->add_option("--features", opts.features_path, "feature CSV for --provider knn");
  cmd->add_option("--interactions", opts.interactions_path,
                  "interactions CSV for --provider cosine (and splits)");
  cmd->add_option("--embeddings", opts.embeddings_path, "embedding CSV for --provider dot");
  cmd->add_option("--network", opts.network_path, "network CSV replayed by --provider lists");
  cmd->add_option("-K,--K", opts.k, "provider list length")->capture_default_str();
}

struct BuiltProvider {
  std::unique_ptr<ProviderOracle> oracle;
  const ScoreProvider* scores = nullptr;  // non-null for score-backed kinds
  std::unique_ptr<InteractionLog> log;    // kept when interactions were loaded
};

[[noreturn]] void usage_error(const std::string& message) {
  throw CLI::ValidationError("usage", message);
}

InteractionLog load_log_or_fail(const std::string& path) {
  return load_interactions(path).log;
}

BuiltProvider build_provider(const ProviderOpts& opts) {
  BuiltProvider built;
  if (opts.kind == "knn") {
    if (opts.features_path.empty()) usage_error("--provider knn needs --features");
    auto provider = std::make_unique<KnnProvider>(load_vectors(opts.features_path), opts.k);
    built.scores = provider.get();
    built.oracle = std::move(provider);
  } else if (opts.kind == "cosine") {
    if (opts.interactions_path.empty()) usage_error("--provider cosine needs --interactions");
    built.log = std::make_unique<InteractionLog>(load_log_or_fail(opts.interactions_path));
    auto provider = std::make_unique<CosineProvider>(*built.log, opts.k);
    built.scores = provider.get();
    built.oracle = std::move(provider);
  } else if (opts.kind == "dot") {
    if (opts.embeddings_path.empty()) usage_error("--provider dot needs --embeddings");
    auto provider = std::make_unique<DotProvider>(load_vectors(opts.embeddings_path), opts.k);
    built.scores = provider.get();
    built.oracle = std::move(provider);
  } else {
    if (opts.network_path.empty()) usage_error("--provider lists needs --network");
    const RecNetwork net = load_network(opts.network_path);
    std::vector<RecList> lists(static_cast<std::size_t>(net.n));
    for (ItemId i = 0; i < net.n; ++i) lists[static_cast<std::size_t>(i)] = net.list_of(i);
    built.oracle = std::make_unique<ListsProvider>(std::move(lists), std::max(net.k, opts.k));
  }
  return built;
}

// ---------------------------------------------------------------------------
// Attribute selection shared by recommend / sweep
// ---------------------------------------------------------------------------

struct AttrOpts {
  std::string attributes_path;
  int popularity_threshold = 0;
};

void add_attr_opts(CLI::App* cmd, AttrOpts& opts) {
  cmd->add_option("--attributes", opts.attributes_path, "attribute CSV (item,label)");
  cmd->add_option("--popularity-threshold", opts.popularity_threshold,
                  "derive attributes: items with fewer interactions are protected");
}

AttributeTable build_attributes(const AttrOpts& opts, ItemId n_items,
                                const InteractionLog* log) {
  if (!opts.attributes_path.empty()) {
    return load_attributes(opts.attributes_path, n_items);
  }
  if (opts.popularity_threshold > 0) {
    if (log == nullptr) {
      usage_error("--popularity-threshold needs --interactions");
    }
    return popularity_attributes(*log, opts.popularity_threshold);
  }
  return AttributeTable::uniform(n_items);
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

struct IngestOpts {
  std::string interactions_path;
  std::string out_dir;
  int k_core_threshold = 0;
  int popularity_threshold = 0;
  bool write_split = false;
  std::uint64_t seed = 0;
};

void run_ingest(const IngestOpts& opts) {
  const std::filesystem::path dir(opts.out_dir);
  std::filesystem::create_directories(dir);

  LoadedLog loaded = load_interactions(opts.interactions_path);
  std::vector<long long> user_ids = loaded.user_ids;
  std::vector<long long> item_ids = loaded.item_ids;
  InteractionLog log = std::move(loaded.log);

  if (opts.k_core_threshold > 0) {
    KCoreResult core = k_core(log, opts.k_core_threshold);
    std::vector<long long> new_users, new_items;
    for (int u : core.kept_users) new_users.push_back(user_ids[static_cast<std::size_t>(u)]);
    for (ItemId i : core.kept_items) new_items.push_back(item_ids[static_cast<std::size_t>(i)]);
    user_ids = std::move(new_users);
    item_ids = std::move(new_items);
    log = std::move(core.log);
    if (log.empty()) {
      std::cerr << "warning: k-core filter with k=" << opts.k_core_threshold
                << " left no interactions\n";
    }
  }

  save_interactions(dir / "interactions.csv", log);
  save_remap(dir / "user_remap.csv", "user", user_ids);
  save_remap(dir / "item_remap.csv", "item", item_ids);
  if (opts.popularity_threshold > 0) {
    save_attributes(dir / "attributes.csv", popularity_attributes(log, opts.popularity_threshold));
  }
  if (opts.write_split) {
    save_split(dir / "split.csv", leave_one_out(log, opts.seed));
  }
  std::cout << "users=" << log.n_users << " items=" << log.n_items
            << " interactions=" << log.triples.size() << '\n';
}

struct CrawlOpts {
  ProviderOpts provider;
  std::string out_path;
};

void run_crawl(const CrawlOpts& opts) {
  const BuiltProvider built = build_provider(opts.provider);
  const RecNetwork net = crawl(*built.oracle);
  save_network(opts.out_path, net);
  if (net.short_lists) {
    std::cerr << "warning: some pages returned fewer than K=" << net.k << " items\n";
  }
  std::cout << "items=" << net.n << " edges=" << net.num_edges() << '\n';
}

struct RecommendOpts {
  ProviderOpts provider;
  AttrOpts attrs;
  std::string method = "consul";
  ItemId source = 0;
  int tau = 0;
  std::vector<ItemId> history;
  double damping = 0.01;
  int iterations = 10;
  int l_max = -1;  // negative: per-method default
  std::uint64_t seed = 0;
  std::string out_path;
};

void run_recommend(const RecommendOpts& opts) {
  const BuiltProvider built = build_provider(opts.provider);
  const ItemId n = built.oracle->num_items();
  const AttributeTable attrs = build_attributes(opts.attrs, n, built.log.get());
  const FairnessParams fairness(opts.provider.k, opts.tau);
  fairness.validate(attrs);
  if (opts.source < 0 || opts.source >= n) {
    throw std::runtime_error("source item out of range [0, " + std::to_string(n) + ")");
  }

  std::unique_ptr<ProviderOracle> view;
  const ProviderOracle* oracle = built.oracle.get();
  if (!opts.history.empty()) {
    view = with_history(*built.oracle, opts.history);
    oracle = view.get();
  }

  const Method method = method_from_name(opts.method);
  RecList list;
  switch (method) {
    case Method::kProvider:
      list = oracle->query(opts.source);
      break;
    case Method::kRandomFair:
      list = random_fair_recommend(n, opts.source, attrs, fairness, opts.seed, opts.history);
      break;
    case Method::kOracleFair:
      if (built.scores == nullptr) {
        usage_error("--method oracle needs a score-backed provider (knn, cosine or dot)");
      }
      list = oracle_fair_recommend(*built.scores, opts.source, attrs, fairness, opts.history);
      break;
    case Method::kPrivateRank: {
      const RowNormalizedNetwork net = row_normalize(crawl(*oracle));
      list = privaterank_recommend(net, opts.source, attrs, fairness,
                                   {opts.damping, opts.iterations}, opts.history);
      break;
    }
    case Method::kPrivateWalk: {
      const WalkParams walk{opts.l_max > 0 ? opts.l_max : kPrivateWalkDefaultSteps, opts.seed};
      list = privatewalk_recommend(*oracle, opts.source, attrs, fairness, walk, opts.history);
      break;
    }
    case Method::kConsul: {
      const WalkParams walk{opts.l_max > 0 ? opts.l_max : kConsulDefaultPages, opts.seed};
      list = consul_recommend(*oracle, opts.source, attrs, fairness, walk, opts.history);
      break;
    }
  }

  if (static_cast<int>(list.size()) < fairness.k) {
    std::cerr << "warning: only " << list.size() << " of " << fairness.k
              << " slots could be filled\n";
  }
  if (!opts.out_path.empty()) {
    std::ostringstream out;
    out << "rank,item\n";
    for (std::size_t r = 0; r < list.size(); ++r) out << r + 1 << ',' << list[r] << '\n';
    csv::atomic_write(opts.out_path, out.str());
  }
  for (std::size_t r = 0; r < list.size(); ++r) {
    if (r > 0) std::cout << ' ';
    std::cout << list[r];
  }
  std::cout << '\n';
}

struct RecoverOpts {
  ProviderOpts provider;
  int dim = 2;
  std::string out_path;
  std::string truth_path;
};

void run_recover(const RecoverOpts& opts) {
  const BuiltProvider built = build_provider(opts.provider);
  Eigen::MatrixXd truth;
  const Eigen::MatrixXd* truth_ptr = nullptr;
  if (!opts.truth_path.empty()) {
    truth = to_matrix(load_vectors(opts.truth_path));
    truth_ptr = &truth;
  }
  const EtpResult result = etp_pipeline(*built.oracle, opts.dim, truth_ptr);
  if (result.dist.disconnected) {
    std::cerr << "warning: recommendation graph is disconnected; distances capped at n\n";
  }
  if (result.embedding.deficient) {
    std::cerr << "warning: fewer than " << opts.dim
              << " positive eigenvalues; trailing coordinates are zero\n";
  }
  save_vectors(opts.out_path, to_table(result.embedding.coords));
  if (truth_ptr != nullptr) {
    std::cout << "spearman=" << csv::format_double(result.spearman_to_truth, 6) << '\n'
              << "procrustes_rmse=" << csv::format_double(result.procrustes_rmse, 6) << '\n';
  }
}

struct SweepCliOpts {
  ProviderOpts provider;
  AttrOpts attrs;
  std::string methods = "provider,random,privaterank,privatewalk,consul";
  std::vector<int> taus{0, 1, 2, 3, 4, 5};
  std::vector<std::uint64_t> seeds{0};
  std::vector<ItemId> sources;
  std::string class_labels_path;
  double damping = 0.01;
  int iterations = 10;
  int walk_steps = kPrivateWalkDefaultSteps;
  int consul_pages = kConsulDefaultPages;
  int jobs = 1;
  std::uint64_t split_seed = 0;
  std::string report_path;
  std::string report_json_path;
};

void run_sweep(const SweepCliOpts& opts) {
  const BuiltProvider built = build_provider(opts.provider);
  const ItemId n = built.oracle->num_items();
  const AttributeTable attrs = build_attributes(opts.attrs, n, built.log.get());

  SweepTask task;
  task.provider = built.oracle.get();
  task.scores = built.scores;
  task.attrs = &attrs;
  task.k = opts.provider.k;

  std::vector<std::vector<ItemId>> histories;
  if (!opts.sources.empty()) {
    task.sources = opts.sources;
  } else if (built.log != nullptr) {
    const LeaveOneOutSplit split = leave_one_out(*built.log, opts.split_seed);
    task.sources = split.source;
    task.positives = split.positive;
    histories = split.history;
    task.histories = &histories;
  } else {
    usage_error("sweep needs --interactions (leave-one-out) or an explicit --sources list");
  }
  if (!opts.class_labels_path.empty()) {
    const AttributeTable classes = load_attributes(opts.class_labels_path, n);
    task.labels.resize(static_cast<std::size_t>(n));
    for (ItemId i = 0; i < n; ++i) task.labels[static_cast<std::size_t>(i)] = classes.group(i);
  }

  std::vector<Method> methods;
  for (const std::string& name : csv::split(opts.methods)) {
    methods.push_back(method_from_name(name));
  }

  SweepParams params;
  params.taus = opts.taus;
  params.seeds = opts.seeds;
  params.ppr = {opts.damping, opts.iterations};
  params.privatewalk_steps = opts.walk_steps;
  params.consul_pages = opts.consul_pages;
  params.jobs = opts.jobs;

  const TradeoffReport report = sweep(task, methods, params);
  csv::atomic_write(opts.report_path, report.to_csv());
  if (!opts.report_json_path.empty()) {
    csv::atomic_write(opts.report_json_path, report.to_json());
  }
  for (const TradeoffRow& row : report.rows) {
    if (!row.error.empty()) {
      std::cerr << "warning: cell (" << row.method << ", tau=" << row.tau
                << ") failed: " << row.error << '\n';
    }
  }
  std::cout << "rows=" << report.rows.size() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"consumer-side fair recommendation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML config file; one flat section per subcommand");
  app.add_flag_callback(
      "--schema",
      [] {
        std::cout << kSchemaJson << '\n';
        throw CLI::Success();
      },
      "print machine-readable file and report schemas, then exit");
  app.require_subcommand(0, 1);

  IngestOpts ingest_opts;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "load, filter and split an interaction log");
  ingest_cmd->add_option("--interactions", ingest_opts.interactions_path, "input CSV")->required();
  ingest_cmd->add_option("--out-dir", ingest_opts.out_dir, "output directory")->required();
  ingest_cmd->add_option("--k-core", ingest_opts.k_core_threshold,
                         "iterated k-core threshold (0 = off)");
  ingest_cmd->add_option("--popularity-threshold", ingest_opts.popularity_threshold,
                         "also write attributes.csv with this protected-group threshold");
  ingest_cmd->add_flag("--split", ingest_opts.write_split, "also write the leave-one-out split");
  ingest_cmd->add_option("--seed", ingest_opts.seed, "seed for timestamp-free splits");
  ingest_cmd->callback([&ingest_opts] { run_ingest(ingest_opts); });

  CrawlOpts crawl_opts;
  CLI::App* crawl_cmd = app.add_subcommand("crawl", "crawl the provider into a network CSV");
  add_provider_opts(crawl_cmd, crawl_opts.provider);
  crawl_cmd->add_option("--out", crawl_opts.out_path, "network CSV output")->required();
  crawl_cmd->callback([&crawl_opts] { run_crawl(crawl_opts); });

  RecommendOpts rec_opts;
  CLI::App* rec_cmd = app.add_subcommand("recommend", "produce one fair recommendation list");
  add_provider_opts(rec_cmd, rec_opts.provider);
  add_attr_opts(rec_cmd, rec_opts.attrs);
  rec_cmd->add_option("--method", rec_opts.method, "recommendation method")
      ->check(CLI::IsMember({"provider", "random", "oracle", "privaterank", "privatewalk", "consul"}))
      ->capture_default_str();
  rec_cmd->add_option("--source", rec_opts.source, "source item page")->required();
  rec_cmd->add_option("--tau", rec_opts.tau, "per-group minimum")->capture_default_str();
  rec_cmd->add_option("--history", rec_opts.history, "items already consumed")->delimiter(',');
  rec_cmd->add_option("--damping", rec_opts.damping, "PageRank damping factor c")
      ->capture_default_str();
  rec_cmd->add_option("--iterations", rec_opts.iterations, "PageRank iteration count L")
      ->capture_default_str();
  rec_cmd->add_option("--l-max", rec_opts.l_max,
                      "walk/search budget (default: 100 for privatewalk, 10 for consul)");
  rec_cmd->add_option("--seed", rec_opts.seed, "seed for randomized methods");
  rec_cmd->add_option("--out", rec_opts.out_path, "also write the list as rank,item CSV");
  rec_cmd->callback([&rec_opts] { run_recommend(rec_opts); });

  RecoverOpts recover_opts;
  CLI::App* recover_cmd =
      app.add_subcommand("recover", "reconstruct item coordinates from the network");
  add_provider_opts(recover_cmd, recover_opts.provider);
  recover_cmd->add_option("--dim", recover_opts.dim, "target dimension")->capture_default_str();
  recover_cmd->add_option("--out", recover_opts.out_path, "coordinates CSV output")->required();
  recover_cmd->add_option("--truth", recover_opts.truth_path,
                          "ground-truth coordinates for diagnostics");
  recover_cmd->callback([&recover_opts] { run_recover(recover_opts); });

  SweepCliOpts sweep_opts;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "fairness/performance trade-off table");
  add_provider_opts(sweep_cmd, sweep_opts.provider);
  add_attr_opts(sweep_cmd, sweep_opts.attrs);
  sweep_cmd->add_option("--methods", sweep_opts.methods, "comma-separated method list")
      ->capture_default_str();
  sweep_cmd->add_option("--taus", sweep_opts.taus, "per-group minimums to sweep")->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep_opts.seeds, "seeds to average over")->delimiter(',');
  sweep_cmd->add_option("--sources", sweep_opts.sources,
                        "explicit source items (instead of a leave-one-out split)")
      ->delimiter(',');
  sweep_cmd->add_option("--class-labels", sweep_opts.class_labels_path,
                        "item,label CSV scoring same-label precision");
  sweep_cmd->add_option("--damping", sweep_opts.damping, "PageRank damping factor c")
      ->capture_default_str();
  sweep_cmd->add_option("--iterations", sweep_opts.iterations, "PageRank iteration count L")
      ->capture_default_str();
  sweep_cmd->add_option("--walk-steps", sweep_opts.walk_steps, "PrivateWalk budget per slot")
      ->capture_default_str();
  sweep_cmd->add_option("--consul-pages", sweep_opts.consul_pages, "Consul page budget")
      ->capture_default_str();
  sweep_cmd->add_option("--jobs", sweep_opts.jobs, "parallel sweep cells")->capture_default_str();
  sweep_cmd->add_option("--split-seed", sweep_opts.split_seed, "seed for timestamp-free splits");
  sweep_cmd->add_option("--report", sweep_opts.report_path, "report CSV output")->required();
  sweep_cmd->add_option("--report-json", sweep_opts.report_json_path, "report JSON output");
  sweep_cmd->callback([&sweep_opts] { run_sweep(sweep_opts); });

  try {
    app.parse(argc, argv);
    if (app.get_subcommands().empty()) {
      std::cerr << app.help() << '\n';
      return 2;
    }
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const userside::ConstraintError& e) {
    std::cerr << "constraint error: " << e.what() << '\n';
    return 3;
  } catch (const userside::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
