#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tourkit/features.hpp"

namespace tourkit {

/// Row-stochastic transition matrix over the states of one POI feature,
/// estimated by epsilon-smoothed maximum likelihood.
struct FeatureTransition {
  std::string name;
  std::vector<std::string> states;
  MatrixXd matrix;  // square, rows sum to 1, all entries > 0
};

/// Counts state(p_k) -> state(p_{k+1}) over all consecutive visit pairs, adds
/// `epsilon` to every cell, and normalizes rows.
FeatureTransition fit_feature_transition(const std::vector<Trajectory>& trajectories,
                                         const std::function<int(int)>& state_of, int n_states,
                                         double epsilon, std::string name = {},
                                         std::vector<std::string> state_names = {});

/// Kronecker product of two dense matrices.
template <typename DerivedA, typename DerivedB>
MatrixXd kronecker(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.derived();
    }
  }
  return out;
}

/// Left-associated Kronecker product of a non-empty list of square matrices.
MatrixXd kronecker(const std::vector<MatrixXd>& matrices);

constexpr int kTransitionFeatures = 5;

/// Kronecker-factorized POI-to-POI transition model: five per-feature
/// transition matrices combined over the occupied feature-combination states,
/// expanded to POIs with uniform in-group sharing, self-loops removed, and
/// rows renormalized. Stored as log-probabilities with the forbidden diagonal
/// carried by the sentinel of common.hpp.
struct TransitionModel {
  std::array<FeatureTransition, kTransitionFeatures> features;
  std::map<int, std::array<int, kTransitionFeatures>> poi_state;
  std::vector<int> poi_ids;  // ascending
  MatrixXd log_p;            // |P| x |P|, indexed by position in poi_ids
  double epsilon = 1.0;

  std::size_t index_of(int poi_id) const;
};

struct TransitionDiscretizers {
  Discretizer popularity;
  Discretizer n_visit;
  Discretizer avg_duration;
};

/// Fits the discretizers on training-set POI statistics (one value per POI in
/// the table, zeros for unvisited POIs).
TransitionDiscretizers fit_transition_discretizers(const PoiTable& pois, const PoiStatsMap& stats);

TransitionModel build_transition_model(const std::vector<Trajectory>& trajectories,
                                       const PoiTable& pois, const PoiStatsMap& stats,
                                       const ClusterAssignment& clusters,
                                       const TransitionDiscretizers& discretizers,
                                       double epsilon = 1.0);

/// log P(to | from); `from == to` yields the forbidden sentinel.
double log_transition(const TransitionModel& model, int from, int to);

}  // namespace tourkit
