#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "tourkit/features.hpp"

namespace tourkit {

/// Per-query occurrence labels: for each training query, how many of the
/// group's trajectories contain a POI as an intermediate. POIs absent from a
/// label map carry an implicit 0.
struct RankLabelSet {
  std::vector<Query> queries;
  std::vector<std::map<int, int>> labels;  // aligned with queries

  int label_of(std::size_t query_index, int poi_id) const {
    const auto& m = labels.at(query_index);
    auto it = m.find(poi_id);
    return it == m.end() ? 0 : it->second;
  }
};

/// Groups trajectories by (start, end, length) and counts, per group, the
/// trajectories containing each POI strictly between the endpoints.
RankLabelSet build_labels(const std::vector<Trajectory>& trajectories);

struct RankModel {
  VectorXd w;
  double C = 10.0;
  Scaler scaler;
  FeatureSchema schema;
};

// Pairwise squared-hinge ranking objective over difference rows
// d = phi_hi - phi_lo (the first element of each pair ranks strictly higher):
//
//   f(w) = 1/2 w'w + C sum_i max(0, 1 - w'd_i)^2
//
// The squared hinge is continuously differentiable, so the gradient is exact.
double rank_objective(const VectorXd& w, const MatrixXd& pair_diffs, double C);
VectorXd rank_gradient(const VectorXd& w, const MatrixXd& pair_diffs, double C);

struct TrainDiagnostics {
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
};

/// Deterministic Newton descent from w = 0 until the gradient norm drops to
/// `tol` or `max_iter` iterations pass.
VectorXd minimize_rank_objective(const MatrixXd& pair_diffs, double C, double tol = 1e-6,
                                 int max_iter = 10000, TrainDiagnostics* diagnostics = nullptr);

/// Fits the ranking model: fits the scaler on every (query, POI) feature row,
/// forms all preference pairs with strictly ordered labels within each query,
/// and minimizes the objective above. `features[qi]` holds one raw feature
/// row per POI, aligned with `poi_ids`.
RankModel train_rank_model(const RankLabelSet& labels, const std::vector<MatrixXd>& features,
                           const std::vector<int>& poi_ids, const FeatureSchema& schema, double C,
                           TrainDiagnostics* diagnostics = nullptr);

/// Convenience wrapper building labels and features from a dataset.
RankModel train_rank_model(const PoiTable& pois, const std::vector<Trajectory>& trajectories,
                           const PoiStatsMap& stats, const ClusterAssignment& clusters, double C,
                           TrainDiagnostics* diagnostics = nullptr);

/// Ranking score R = w' scale(phi).
double score(const RankModel& model, const VectorXd& raw_features);

/// Softmax over scores, computed with max-subtraction. Preserves the exact
/// order of the scores and sums to 1 within 1e-12.
std::map<int, double> rank_probabilities(const std::map<int, double>& scores);

/// log softmax of a score vector, max-subtracted.
VectorXd log_softmax(const VectorXd& scores);

}  // namespace tourkit
