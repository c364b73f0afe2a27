#include "tourkit/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace tourkit {

namespace {

// First-occurrence position of every distinct id; defines the visit order
// used by the pair-agreement predicate when a sequence contains revisits.
std::unordered_map<int, std::size_t> first_positions(const std::vector<int>& seq) {
  std::unordered_map<int, std::size_t> pos;
  for (std::size_t i = 0; i < seq.size(); ++i) pos.emplace(seq[i], i);
  return pos;
}

}  // namespace

double f1_points(const std::vector<int>& truth, const std::vector<int>& rec) {
  if (truth.empty() || rec.empty()) throw ValidationError("f1_points: empty sequence");
  const std::set<int> truth_set(truth.begin(), truth.end());
  const std::set<int> rec_set(rec.begin(), rec.end());
  std::size_t common = 0;
  for (int id : rec_set) common += truth_set.count(id);
  const double precision = static_cast<double>(common) / static_cast<double>(rec.size());
  const double recall = static_cast<double>(common) / static_cast<double>(truth.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double pairs_f1(const std::vector<int>& truth, const std::vector<int>& rec) {
  if (truth.size() < 2 || rec.size() < 2) {
    throw ValidationError("pairs_f1: sequences must have at least 2 POIs");
  }
  const auto truth_pos = first_positions(truth);
  const auto rec_pos = first_positions(rec);

  std::vector<int> common;
  for (const auto& [id, pos] : truth_pos) {
    if (rec_pos.count(id)) common.push_back(id);
  }
  std::sort(common.begin(), common.end());

  std::size_t agreeing = 0;
  for (std::size_t i = 0; i < common.size(); ++i) {
    for (std::size_t j = i + 1; j < common.size(); ++j) {
      const bool before_truth = truth_pos.at(common[i]) < truth_pos.at(common[j]);
      const bool before_rec = rec_pos.at(common[i]) < rec_pos.at(common[j]);
      if (before_truth == before_rec) ++agreeing;
    }
  }
  if (agreeing == 0) return 0.0;

  const double n_rec = static_cast<double>(rec.size());
  const double n_truth = static_cast<double>(truth.size());
  const double precision = static_cast<double>(agreeing) / (n_rec * (n_rec - 1.0) / 2.0);
  const double recall = static_cast<double>(agreeing) / (n_truth * (n_truth - 1.0) / 2.0);
  return 2.0 * precision * recall / (precision + recall);
}

std::string eval_status_name(EvalStatus status) {
  switch (status) {
    case EvalStatus::kOk: return "ok";
    case EvalStatus::kInfeasible: return "infeasible";
    case EvalStatus::kTimeout: return "timeout";
  }
  return "unknown";
}

std::uint64_t training_set_fingerprint(const std::vector<const Trajectory*>& training) {
  std::vector<std::pair<std::string, int>> keys;
  keys.reserve(training.size());
  for (const Trajectory* t : training) keys.emplace_back(t->user, t->traj_id);
  std::sort(keys.begin(), keys.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [user, id] : keys) {
    h = fnv1a64(user, h);
    h = fnv1a64(std::to_string(id) + ";", h);
  }
  return h;
}

namespace {

struct InstanceModels {
  PoiStatsMap stats;
  std::optional<RankModel> rank;
  std::optional<TransitionModel> transition;
};

bool needs_rank(Algorithm a) {
  return a == Algorithm::kPoiRank || a == Algorithm::kRankMarkov ||
         a == Algorithm::kRankMarkovPath;
}

bool needs_transition(Algorithm a) {
  return a == Algorithm::kMarkov || a == Algorithm::kMarkovPath ||
         a == Algorithm::kRankMarkov || a == Algorithm::kRankMarkovPath;
}

}  // namespace

std::pair<std::vector<EvalRecord>, Summary> loocv(const PoiTable& pois,
                                                  const std::vector<Trajectory>& trajectories,
                                                  const EvalOptions& options) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].length() >= 3) eligible.push_back(i);
  }
  if (eligible.size() < 2) {
    throw ValidationError("loocv: need at least 2 trajectories with 3 or more POIs");
  }

  // Clusters depend only on the POI table, not on the held-out trajectory.
  const int k = std::min<int>(options.k_clusters, static_cast<int>(pois.size()));
  const ClusterAssignment clusters = kmeans(pois, k, substream_seed(options.seed, "kmeans"));

  std::vector<EvalRecord> records(eligible.size());
  std::atomic<std::size_t> cursor{0};

  auto run_instance = [&](std::size_t slot) {
    const std::size_t held_out = eligible[slot];
    const Trajectory& truth = trajectories[held_out];

    std::vector<const Trajectory*> training;
    std::vector<Trajectory> training_copy;
    training.reserve(trajectories.size() - 1);
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      if (i != held_out) training.push_back(&trajectories[i]);
    }
    training_copy.reserve(training.size());
    for (const Trajectory* t : training) training_copy.push_back(*t);

    EvalRecord rec;
    rec.user = truth.user;
    rec.traj_id = truth.traj_id;
    rec.truth = truth.poi_sequence();
    rec.train_fingerprint = training_set_fingerprint(training);
    rec.query.start = rec.truth.front();
    rec.query.end = rec.truth.back();
    rec.query.length = static_cast<int>(rec.truth.size());

    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (rec.query.start == rec.query.end) {
        throw InfeasibleError("held-out trajectory starts and ends at the same POI");
      }
      InstanceModels models;
      models.stats = compute_stats(training_copy);
      if (needs_rank(options.algorithm)) {
        models.rank = train_rank_model(pois, training_copy, models.stats, clusters, options.C);
      }
      if (needs_transition(options.algorithm)) {
        const TransitionDiscretizers discretizers =
            fit_transition_discretizers(pois, models.stats);
        models.transition = build_transition_model(training_copy, pois, models.stats, clusters,
                                                   discretizers, options.epsilon);
      }
      ModelSet set;
      set.pois = &pois;
      set.stats = &models.stats;
      set.clusters = &clusters;
      set.rank = models.rank ? &*models.rank : nullptr;
      set.transition = models.transition ? &*models.transition : nullptr;

      RouteConfig config;
      config.alpha = options.alpha;
      config.timeout_secs = options.timeout_secs;
      config.rng_seed = substream_seed(options.seed, "loocv/" + truth.user + "/" +
                                                         std::to_string(truth.traj_id));
      RouteResult result = recommend(options.algorithm, set, rec.query, config);
      rec.f1 = f1_points(rec.truth, result.sequence);
      rec.pairs_f1 = pairs_f1(rec.truth, result.sequence);
      rec.recommendation = std::move(result);
      rec.status = EvalStatus::kOk;
    } catch (const RouteTimeoutError& e) {
      rec.status = EvalStatus::kTimeout;
      rec.recommendation = e.incumbent;
    } catch (const InfeasibleError&) {
      rec.status = EvalStatus::kInfeasible;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records[slot] = std::move(rec);
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (std::size_t slot = 0; slot < eligible.size(); ++slot) run_instance(slot);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&] {
        while (true) {
          const std::size_t slot = cursor.fetch_add(1);
          if (slot >= eligible.size()) break;
          run_instance(slot);
        }
      });
    }
    for (auto& w : workers) w.join();
  }

  Summary summary;
  summary.algorithm = algorithm_name(options.algorithm);
  double sum_f1 = 0.0, sum_pf1 = 0.0;
  for (const auto& rec : records) {
    if (rec.status == EvalStatus::kOk) {
      ++summary.count;
      sum_f1 += rec.f1;
      sum_pf1 += rec.pairs_f1;
    } else {
      ++summary.failures;
    }
  }
  if (summary.count > 0) {
    summary.mean_f1 = sum_f1 / summary.count;
    summary.mean_pairs_f1 = sum_pf1 / summary.count;
    double ss_f1 = 0.0, ss_pf1 = 0.0;
    for (const auto& rec : records) {
      if (rec.status != EvalStatus::kOk) continue;
      ss_f1 += (rec.f1 - summary.mean_f1) * (rec.f1 - summary.mean_f1);
      ss_pf1 += (rec.pairs_f1 - summary.mean_pairs_f1) * (rec.pairs_f1 - summary.mean_pairs_f1);
    }
    if (summary.count > 1) {
      summary.std_f1 = std::sqrt(ss_f1 / (summary.count - 1));
      summary.std_pairs_f1 = std::sqrt(ss_pf1 / (summary.count - 1));
    }
  }
  return {std::move(records), std::move(summary)};
}

TuneResult tune_alpha(const PoiTable& pois, const std::vector<Trajectory>& trajectories,
                      const std::vector<double>& grid, const EvalOptions& options) {
  if (grid.empty()) throw ValidationError("tune_alpha: empty grid");
  for (double a : grid) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("tune_alpha: grid values must be in [0, 1]");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].length() >= 3) eligible.push_back(i);
  }
  if (eligible.size() < 4) {
    throw ValidationError("tune_alpha: need at least 4 trajectories with 3 or more POIs");
  }
  std::sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
    const auto& ta = trajectories[a];
    const auto& tb = trajectories[b];
    return std::tie(ta.user, ta.traj_id) < std::tie(tb.user, tb.traj_id);
  });

  std::vector<Trajectory> folds[2];
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    folds[i % 2].push_back(trajectories[eligible[i]]);
  }

  TuneResult result;
  for (int f = 0; f < 2; ++f) {
    AlphaCurve& curve = f == 0 ? result.fold1 : result.fold2;
    curve.grid = grid;
    double best_alpha = grid.front();
    double best_score = -1.0;
    for (double alpha : grid) {
      EvalOptions fold_options = options;
      fold_options.algorithm = Algorithm::kRankMarkov;
      fold_options.alpha = alpha;
      const auto [records, summary] = loocv(pois, folds[f], fold_options);
      curve.mean_pairs_f1.push_back(summary.mean_pairs_f1);
      if (summary.mean_pairs_f1 > best_score) {
        best_score = summary.mean_pairs_f1;
        best_alpha = alpha;
      }
    }
    curve.best_alpha = best_alpha;
  }
  return result;
}

void write_records_csv(std::ostream& out, const std::string& algorithm,
                       const std::vector<EvalRecord>& records) {
  out << "algorithm,user,trajID,L,f1,pairsF1,status,objective,seconds\n";
  for (const auto& rec : records) {
    out << algorithm << ',' << rec.user << ',' << rec.traj_id << ',' << rec.query.length << ',';
    if (rec.status == EvalStatus::kOk) {
      out << rec.f1 << ',' << rec.pairs_f1;
    } else {
      out << ',';
    }
    out << ',' << eval_status_name(rec.status) << ',';
    if (rec.recommendation && std::isfinite(rec.recommendation->objective)) {
      out << rec.recommendation->objective;
    }
    out << ',' << rec.seconds << '\n';
  }
}

void write_summary_json(std::ostream& out, const std::vector<Summary>& summaries) {
  nlohmann::json doc;
  doc["metrics"] = {"f1", "pairsF1"};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : summaries) {
    rows.push_back({{"algorithm", s.algorithm},
                    {"count", s.count},
                    {"failures", s.failures},
                    {"f1", {{"mean", s.mean_f1}, {"std", s.std_f1}}},
                    {"pairsF1", {{"mean", s.mean_pairs_f1}, {"std", s.std_pairs_f1}}}});
  }
  doc["algorithms"] = std::move(rows);
  out << doc.dump(2) << '\n';
}

}  // namespace tourkit
