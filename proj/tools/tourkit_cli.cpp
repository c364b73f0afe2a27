// tourkit command-line harness: dataset generation and ingestion, model
// training, route recommendation, LOOCV evaluation and alpha tuning.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "tourkit/bundle.hpp"
#include "tourkit/eval.hpp"

namespace {

using nlohmann::json;
using namespace tourkit;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitTimeout = 4;

struct DatasetArgs {
  std::string pois_path;
  std::string trajectories_path;
};

void add_dataset_flags(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--pois", args.pois_path, "POI CSV file")->required();
  cmd->add_option("--trajectories", args.trajectories_path, "visit CSV file")->required();
}

std::pair<PoiTable, std::vector<Trajectory>> load_dataset(const DatasetArgs& args) {
  PoiTable pois = load_pois(args.pois_path);
  std::vector<Trajectory> trajectories = load_trajectories(args.trajectories_path, pois);
  return {std::move(pois), std::move(trajectories)};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << text;
}

json route_json(const RouteResult& result, const EdgeScoreTable* table) {
  json doc;
  doc["sequence"] = result.sequence;
  if (std::isfinite(result.objective)) doc["objective"] = result.objective;
  doc["solver"] = {{"nodes_expanded", result.nodes_expanded},
                   {"seconds", result.wall_seconds}};
  if (table != nullptr) {
    json steps = json::array();
    for (std::size_t k = 0; k + 1 < result.sequence.size(); ++k) {
      const int from = static_cast<int>(table->index_of(result.sequence[k]));
      const int to = static_cast<int>(table->index_of(result.sequence[k + 1]));
      steps.push_back({{"from", result.sequence[k]},
                       {"to", result.sequence[k + 1]},
                       {"node_log", table->node_log(to)},
                       {"edge_log", table->edge_log(from, to)},
                       {"score", table->step_score(from, to)}});
    }
    doc["steps"] = std::move(steps);
  }
  return doc;
}

int cmd_synth(std::uint64_t seed, int n_pois, int n_traj, int max_len,
              const std::string& out_pois, const std::string& out_traj) {
  const SynthDataset data = synth_dataset(seed, n_pois, n_traj, max_len);
  save_pois_csv(out_pois, data.pois);
  save_trajectories_csv(out_traj, data.trajectories);
  log_info("wrote " + std::to_string(data.pois.size()) + " POIs and " +
           std::to_string(data.trajectories.size()) + " trajectories");
  return kExitOk;
}

int cmd_ingest(const DatasetArgs& dataset, const std::string& photos_path, double map_radius_m,
               std::int64_t time_gap_s, const std::string& out_path,
               const std::string& out_trajectories) {
  PoiTable pois = load_pois(dataset.pois_path);
  std::vector<Trajectory> trajectories;
  std::size_t n_photos = 0;
  if (!photos_path.empty()) {
    const std::vector<PhotoRecord> photos = load_photos(photos_path);
    n_photos = photos.size();
    trajectories = build_trajectories(photos, pois, map_radius_m, time_gap_s);
    if (!out_trajectories.empty()) save_trajectories_csv(out_trajectories, trajectories);
  } else {
    trajectories = load_trajectories(dataset.trajectories_path, pois);
  }

  std::size_t n_visits = 0;
  std::set<std::string> users;
  for (const auto& t : trajectories) {
    n_visits += t.visits.size();
    users.insert(t.user);
  }
  json stats;
  stats["pois"] = pois.size();
  if (!photos_path.empty()) stats["photos"] = n_photos;
  stats["visits"] = n_visits;
  stats["trajectories"] = trajectories.size();
  stats["users"] = users.size();
  write_text(out_path, stats.dump(2) + "\n");
  return kExitOk;
}

int cmd_train(const DatasetArgs& dataset, const TrainOptions& options, const std::string& out) {
  const auto [pois, trajectories] = load_dataset(dataset);
  TrainDiagnostics diagnostics;
  const ModelBundle bundle = train_bundle(pois, trajectories, options, &diagnostics);
  save_bundle(out, bundle);
  std::cout << "trained on " << trajectories.size() << " trajectories, " << pois.size()
            << " POIs\n"
            << "ranking objective " << diagnostics.objective << " after "
            << diagnostics.iterations << " iterations (|grad| " << diagnostics.gradient_norm
            << ")\n"
            << "bundle written to " << out << "\n";
  return kExitOk;
}

int cmd_recommend(const std::string& bundle_path, const DatasetArgs& dataset, bool force,
                  int start, int end, int length, const std::string& algorithm_name_arg,
                  double alpha, std::uint64_t seed, double timeout_secs,
                  const std::string& out) {
  const ModelBundle bundle = load_bundle(bundle_path);
  if (!dataset.pois_path.empty() && !dataset.trajectories_path.empty() && !force) {
    const auto [pois, trajectories] = load_dataset(dataset);
    const std::string fingerprint = dataset_fingerprint(pois, trajectories);
    if (fingerprint != bundle.dataset_fingerprint) {
      throw ValidationError("bundle was trained on a different dataset (fingerprint " +
                            bundle.dataset_fingerprint + " vs " + fingerprint +
                            "); pass --force to override");
    }
  }
  const Algorithm algorithm = parse_algorithm(algorithm_name_arg);
  const Query q{start, end, length};
  validate_query(q, bundle.pois);

  RouteConfig config;
  config.alpha = alpha;
  config.rng_seed = seed;
  config.timeout_secs = timeout_secs;

  json doc;
  doc["algorithm"] = algorithm_name(algorithm);
  doc["query"] = {{"start", q.start}, {"end", q.end}, {"length", q.length}};
  doc["alpha"] = alpha;

  const bool uses_scores = algorithm == Algorithm::kMarkov || algorithm == Algorithm::kMarkovPath ||
                           algorithm == Algorithm::kRankMarkov ||
                           algorithm == Algorithm::kRankMarkovPath;
  std::optional<EdgeScoreTable> table;
  if (uses_scores) {
    const bool uses_rank =
        algorithm == Algorithm::kRankMarkov || algorithm == Algorithm::kRankMarkovPath;
    table = make_edge_scores(bundle.pois, bundle.stats, bundle.clusters,
                             uses_rank ? &bundle.rank : nullptr, bundle.transition, q,
                             uses_rank ? alpha : 0.0);
  }

  try {
    const RouteResult result = recommend(algorithm, bundle.model_set(), q, config);
    doc["status"] = "ok";
    doc["route"] = route_json(result, table ? &*table : nullptr);
    write_text(out, doc.dump(2) + "\n");
    return kExitOk;
  } catch (const RouteTimeoutError& e) {
    doc["status"] = "timeout";
    if (e.incumbent) doc["incumbent"] = route_json(*e.incumbent, table ? &*table : nullptr);
    write_text(out, doc.dump(2) + "\n");
    return kExitTimeout;
  } catch (const InfeasibleError& e) {
    doc["status"] = "infeasible";
    doc["error"] = e.what();
    write_text(out, doc.dump(2) + "\n");
    return kExitInfeasible;
  }
}

int cmd_evaluate(const DatasetArgs& dataset, const std::string& algorithms_arg,
                 const EvalOptions& base_options, const std::string& out_csv,
                 const std::string& out_json) {
  const auto [pois, trajectories] = load_dataset(dataset);

  std::vector<Algorithm> algorithms;
  if (algorithms_arg == "all") {
    algorithms = all_algorithms();
  } else {
    std::stringstream ss(algorithms_arg);
    std::string name;
    while (std::getline(ss, name, ',')) algorithms.push_back(parse_algorithm(name));
  }

  std::ostringstream csv;
  std::vector<Summary> summaries;
  bool first = true;
  for (Algorithm algorithm : algorithms) {
    EvalOptions options = base_options;
    options.algorithm = algorithm;
    const auto [records, summary] = loocv(pois, trajectories, options);
    std::ostringstream block;
    write_records_csv(block, algorithm_name(algorithm), records);
    std::string text = block.str();
    if (!first) text.erase(0, text.find('\n') + 1);  // keep a single header
    csv << text;
    first = false;
    summaries.push_back(summary);
    log_info(algorithm_name(algorithm) + ": mean F1 " + std::to_string(summary.mean_f1) +
             ", mean pairs-F1 " + std::to_string(summary.mean_pairs_f1) + ", " +
             std::to_string(summary.failures) + " failures");
  }
  write_text(out_csv, csv.str());
  std::ostringstream summary_json;
  write_summary_json(summary_json, summaries);
  write_text(out_json, summary_json.str());
  return kExitOk;
}

int cmd_tune(const DatasetArgs& dataset, const std::string& grid_arg,
             const EvalOptions& base_options, const std::string& out) {
  const auto [pois, trajectories] = load_dataset(dataset);

  std::vector<double> grid;
  std::stringstream ss(grid_arg);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));

  const TuneResult result = tune_alpha(pois, trajectories, grid, base_options);
  json doc;
  auto curve_json = [](const AlphaCurve& curve) {
    json c;
    c["alpha"] = curve.best_alpha;
    json points = json::array();
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      points.push_back({{"alpha", curve.grid[i]}, {"mean_pairs_f1", curve.mean_pairs_f1[i]}});
    }
    c["curve"] = std::move(points);
    return c;
  };
  doc["fold1"] = curve_json(result.fold1);
  doc["fold2"] = curve_json(result.fold2);
  write_text(out, doc.dump(2) + "\n");
  std::cout << "fold1 alpha " << result.fold1.best_alpha << ", fold2 alpha "
            << result.fold2.best_alpha << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tourkit: POI trajectory recommendation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
  std::uint64_t synth_seed = 1;
  int synth_pois = 20, synth_traj = 200, synth_max_len = 6;
  std::string synth_out_pois = "pois.csv", synth_out_traj = "trajectories.csv";
  synth->add_option("--seed", synth_seed, "RNG seed");
  synth->add_option("--n-pois", synth_pois, "number of POIs");
  synth->add_option("--n-traj", synth_traj, "number of trajectories");
  synth->add_option("--max-len", synth_max_len, "maximum trajectory length");
  synth->add_option("--out-pois", synth_out_pois, "output POI CSV");
  synth->add_option("--out-trajectories", synth_out_traj, "output visit CSV");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate dataset files and report statistics");
  DatasetArgs ingest_dataset;
  std::string ingest_photos, ingest_out = "-", ingest_out_traj;
  double ingest_radius = 200.0;
  std::int64_t ingest_gap = 28800;
  ingest->add_option("--pois", ingest_dataset.pois_path, "POI CSV file")->required();
  ingest->add_option("--trajectories", ingest_dataset.trajectories_path, "visit CSV file");
  ingest->add_option("--photos", ingest_photos, "photo CSV file (builds trajectories)");
  ingest->add_option("--map-radius-m", ingest_radius, "photo-to-POI mapping radius in metres");
  ingest->add_option("--time-gap-s", ingest_gap, "trajectory splitting gap in seconds");
  ingest->add_option("--out", ingest_out, "stats JSON output ('-' for stdout)");
  ingest->add_option("--out-trajectories", ingest_out_traj,
                     "write trajectories built from photos to this CSV");

  // train
  auto* train = app.add_subcommand("train", "fit models and write a bundle");
  DatasetArgs train_dataset;
  TrainOptions train_options;
  std::string train_out = "bundle.json";
  add_dataset_flags(train, train_dataset);
  train->add_option("--out", train_out, "bundle output path");
  train->add_option("--C", train_options.C, "ranking regularization constant");
  train->add_option("--epsilon", train_options.epsilon, "transition smoothing constant");
  train->add_option("--k-clusters", train_options.k_clusters, "number of POI clusters");
  train->add_option("--seed", train_options.seed, "RNG seed");

  // recommend
  auto* rec = app.add_subcommand("recommend", "recommend a trajectory for a query");
  std::string rec_bundle, rec_algorithm = "Rank+MarkovPath", rec_out = "-";
  DatasetArgs rec_dataset;
  bool rec_force = false;
  int rec_start = 0, rec_end = 0, rec_length = 0;
  double rec_alpha = 0.5, rec_timeout = 120.0;
  std::uint64_t rec_seed = 0;
  rec->add_option("--bundle", rec_bundle, "trained bundle path")->required();
  rec->add_option("--pois", rec_dataset.pois_path,
                  "POI CSV to verify against the bundle fingerprint");
  rec->add_option("--trajectories", rec_dataset.trajectories_path,
                  "visit CSV to verify against the bundle fingerprint");
  rec->add_flag("--force", rec_force, "skip the dataset fingerprint check");
  rec->add_option("--start", rec_start, "start POI id")->required();
  rec->add_option("--end", rec_end, "end POI id")->required();
  rec->add_option("--length", rec_length, "number of POIs to recommend")->required();
  rec->add_option("--algorithm", rec_algorithm, "recommendation algorithm");
  rec->add_option("--alpha", rec_alpha, "ranking/transition trade-off in [0,1]");
  rec->add_option("--seed", rec_seed, "RNG seed (Random baseline)");
  rec->add_option("--timeout-secs", rec_timeout, "path solver budget in seconds");
  rec->add_option("--out", rec_out, "route JSON output ('-' for stdout)");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "leave-one-out cross-validation");
  DatasetArgs eval_dataset;
  EvalOptions eval_options;
  std::string eval_algorithms = "all", eval_csv = "results.csv", eval_json = "summary.json";
  add_dataset_flags(eval, eval_dataset);
  eval->add_option("--algorithms", eval_algorithms, "comma-separated algorithm names or 'all'");
  eval->add_option("--alpha", eval_options.alpha, "trade-off for Rank+Markov variants");
  eval->add_option("--C", eval_options.C, "ranking regularization constant");
  eval->add_option("--epsilon", eval_options.epsilon, "transition smoothing constant");
  eval->add_option("--k-clusters", eval_options.k_clusters, "number of POI clusters");
  eval->add_option("--seed", eval_options.seed, "RNG seed");
  eval->add_option("--jobs", eval_options.jobs, "parallel LOOCV instances");
  eval->add_option("--timeout-secs", eval_options.timeout_secs, "per-instance solver budget");
  eval->add_option("--out-csv", eval_csv, "per-instance results CSV");
  eval->add_option("--out-json", eval_json, "summary JSON");

  // tune
  auto* tune = app.add_subcommand("tune", "tune alpha by two-fold cross-validation");
  DatasetArgs tune_dataset;
  EvalOptions tune_options;
  std::string tune_grid = "0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
  std::string tune_out = "-";
  add_dataset_flags(tune, tune_dataset);
  tune->add_option("--grid", tune_grid, "comma-separated alpha grid");
  tune->add_option("--C", tune_options.C, "ranking regularization constant");
  tune->add_option("--epsilon", tune_options.epsilon, "transition smoothing constant");
  tune->add_option("--k-clusters", tune_options.k_clusters, "number of POI clusters");
  tune->add_option("--seed", tune_options.seed, "RNG seed");
  tune->add_option("--jobs", tune_options.jobs, "parallel LOOCV instances");
  tune->add_option("--timeout-secs", tune_options.timeout_secs, "per-instance solver budget");
  tune->add_option("--out", tune_out, "tuning report JSON ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_seed, synth_pois, synth_traj, synth_max_len, synth_out_pois,
                       synth_out_traj);
    }
    if (ingest->parsed()) {
      if (ingest_photos.empty() && ingest_dataset.trajectories_path.empty()) {
        std::cerr << "ingest: either --trajectories or --photos is required\n";
        return kExitUsage;
      }
      return cmd_ingest(ingest_dataset, ingest_photos, ingest_radius, ingest_gap, ingest_out,
                        ingest_out_traj);
    }
    if (train->parsed()) return cmd_train(train_dataset, train_options, train_out);
    if (rec->parsed()) {
      return cmd_recommend(rec_bundle, rec_dataset, rec_force, rec_start, rec_end, rec_length,
                           rec_algorithm, rec_alpha, rec_seed, rec_timeout, rec_out);
    }
    if (eval->parsed()) {
      return cmd_evaluate(eval_dataset, eval_algorithms, eval_options, eval_csv, eval_json);
    }
    if (tune->parsed()) return cmd_tune(tune_dataset, tune_grid, tune_options, tune_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ReferentialError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DuplicateKeyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
