#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tourkit/route.hpp"

namespace tourkit {

/// F1 on points: precision and recall of the distinct POIs shared by the two
/// sequences, with denominators counting visits (repeats included).
double f1_points(const std::vector<int>& truth, const std::vector<int>& rec);

/// F1 over POI pairs: counts the unordered pairs of shared POIs whose
/// relative visit order agrees in both sequences. Equals 1 exactly when the
/// sequences are identical (for duplicate-free sequences), and is defined as
/// 0 when no pair agrees.
double pairs_f1(const std::vector<int>& truth, const std::vector<int>& rec);

enum class EvalStatus { kOk, kInfeasible, kTimeout };

std::string eval_status_name(EvalStatus status);

struct EvalRecord {
  std::string user;
  int traj_id = 0;
  Query query;
  std::vector<int> truth;
  std::optional<RouteResult> recommendation;
  double f1 = 0.0;
  double pairs_f1 = 0.0;
  EvalStatus status = EvalStatus::kOk;
  double seconds = 0.0;
  /// Hash of the training set used for this instance (for leakage checks).
  std::uint64_t train_fingerprint = 0;
};

struct Summary {
  std::string algorithm;
  int count = 0;  // successful instances
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  double mean_pairs_f1 = 0.0;
  double std_pairs_f1 = 0.0;
  int failures = 0;
};

struct EvalOptions {
  Algorithm algorithm = Algorithm::kRandom;
  double alpha = 0.5;
  double C = 10.0;
  double epsilon = 1.0;
  int k_clusters = 5;
  std::uint64_t seed = 0;
  double timeout_secs = 120.0;
  int jobs = 1;
};

/// Order-stable fingerprint of a training set, for asserting that an instance
/// never trained on its held-out trajectory.
std::uint64_t training_set_fingerprint(const std::vector<const Trajectory*>& training);

/// Leave-one-out cross-validation: every trajectory with at least 3 visits is
/// held out once, the models the algorithm needs are retrained on all other
/// trajectories, and the recommendation for the held-out query is scored with
/// both metrics. Instances are independent and may run on `jobs` threads; the
/// result is identical regardless of scheduling.
std::pair<std::vector<EvalRecord>, Summary> loocv(const PoiTable& pois,
                                                  const std::vector<Trajectory>& trajectories,
                                                  const EvalOptions& options);

struct AlphaCurve {
  std::vector<double> grid;
  std::vector<double> mean_pairs_f1;  // aligned with grid
  double best_alpha = 0.0;
};

struct TuneResult {
  AlphaCurve fold1;
  AlphaCurve fold2;
};

/// Tunes the ranking/transition trade-off per Rank+Markov: trajectories with
/// more than 2 POIs are split into two folds by even/odd index after sorting
/// by (user, traj id); within each fold the grid value maximizing the LOOCV
/// mean pairs-F1 is selected (ties to the smaller alpha). Each fold's alpha
/// is meant to evaluate the other fold.
TuneResult tune_alpha(const PoiTable& pois, const std::vector<Trajectory>& trajectories,
                      const std::vector<double>& grid, const EvalOptions& options);

void write_records_csv(std::ostream& out, const std::string& algorithm,
                       const std::vector<EvalRecord>& records);
void write_summary_json(std::ostream& out, const std::vector<Summary>& summaries);

}  // namespace tourkit
