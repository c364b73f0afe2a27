#include "tourkit/transition.hpp"

#include <algorithm>
#include <cmath>

namespace tourkit {

FeatureTransition fit_feature_transition(const std::vector<Trajectory>& trajectories,
                                         const std::function<int(int)>& state_of, int n_states,
                                         double epsilon, std::string name,
                                         std::vector<std::string> state_names) {
  if (n_states < 1) throw ValidationError("fit_feature_transition: n_states must be positive");
  if (epsilon <= 0.0) throw ValidationError("fit_feature_transition: epsilon must be positive");

  MatrixXd counts = MatrixXd::Constant(n_states, n_states, epsilon);
  for (const auto& traj : trajectories) {
    for (std::size_t k = 0; k + 1 < traj.visits.size(); ++k) {
      const int from = state_of(traj.visits[k].poi_id);
      const int to = state_of(traj.visits[k + 1].poi_id);
      if (from < 0 || from >= n_states || to < 0 || to >= n_states) {
        throw ValidationError("fit_feature_transition: state out of range");
      }
      counts(from, to) += 1.0;
    }
  }
  FeatureTransition out;
  out.name = std::move(name);
  out.states = std::move(state_names);
  out.matrix = counts.array().colwise() / counts.rowwise().sum().array();
  return out;
}

MatrixXd kronecker(const std::vector<MatrixXd>& matrices) {
  if (matrices.empty()) throw ValidationError("kronecker: empty matrix list");
  MatrixXd acc = matrices.front();
  for (std::size_t i = 1; i < matrices.size(); ++i) acc = kronecker(acc, matrices[i]);
  return acc;
}

std::size_t TransitionModel::index_of(int poi_id) const {
  auto it = std::lower_bound(poi_ids.begin(), poi_ids.end(), poi_id);
  if (it == poi_ids.end() || *it != poi_id) {
    throw ReferentialError("unknown poi id " + std::to_string(poi_id));
  }
  return static_cast<std::size_t>(it - poi_ids.begin());
}

TransitionDiscretizers fit_transition_discretizers(const PoiTable& pois,
                                                   const PoiStatsMap& stats) {
  std::vector<double> pop, nv, dur;
  for (const auto& p : pois.pois()) {
    const PoiStats s = stats_for(stats, p.id);
    pop.push_back(s.popularity);
    nv.push_back(s.n_visit);
    dur.push_back(s.avg_duration);
  }
  return TransitionDiscretizers{Discretizer::fit(pop), Discretizer::fit(nv),
                                Discretizer::fit(dur)};
}

TransitionModel build_transition_model(const std::vector<Trajectory>& trajectories,
                                       const PoiTable& pois, const PoiStatsMap& stats,
                                       const ClusterAssignment& clusters,
                                       const TransitionDiscretizers& discretizers,
                                       double epsilon) {
  if (pois.size() < 2) throw ValidationError("no transitions possible: need at least 2 POIs");

  TransitionModel model;
  model.epsilon = epsilon;
  model.poi_ids = pois.sorted_ids();
  const int n = static_cast<int>(model.poi_ids.size());

  const int n_categories = static_cast<int>(pois.categories().size());
  const std::array<int, kTransitionFeatures> n_states = {
      n_categories, clusters.k, discretizers.popularity.n_bins(), discretizers.n_visit.n_bins(),
      discretizers.avg_duration.n_bins()};

  auto state_tuple = [&](int poi_id) {
    const Poi& p = pois.at(poi_id);
    const PoiStats s = stats_for(stats, poi_id);
    return std::array<int, kTransitionFeatures>{
        pois.category_index(p.category), clusters.at(poi_id),
        discretizers.popularity.bin(s.popularity), discretizers.n_visit.bin(s.n_visit),
        discretizers.avg_duration.bin(s.avg_duration)};
  };
  for (int poi_id : model.poi_ids) model.poi_state[poi_id] = state_tuple(poi_id);

  std::vector<std::string> category_names = pois.categories();
  std::vector<std::string> cluster_names, bin_names;
  for (int i = 0; i < clusters.k; ++i) cluster_names.push_back("cluster" + std::to_string(i));
  for (int i = 0; i < Discretizer::kBins; ++i) bin_names.push_back("bin" + std::to_string(i));
  auto bins_of = [&](const Discretizer& d) {
    return std::vector<std::string>(bin_names.begin(), bin_names.begin() + d.n_bins());
  };

  const std::array<std::string, kTransitionFeatures> feature_names = {
      "category", "neighbourhood", "popularity", "nVisit", "avgDuration"};
  const std::array<std::vector<std::string>, kTransitionFeatures> state_labels = {
      category_names, cluster_names, bins_of(discretizers.popularity),
      bins_of(discretizers.n_visit), bins_of(discretizers.avg_duration)};
  for (int f = 0; f < kTransitionFeatures; ++f) {
    auto state_of = [&, f](int poi_id) { return model.poi_state.at(poi_id)[f]; };
    model.features[f] = fit_feature_transition(trajectories, state_of, n_states[f], epsilon,
                                               feature_names[f], state_labels[f]);
  }

  // Occupied feature combinations and their member POIs. The joint transition
  // probability between two occupied states is the product of the per-feature
  // entries, which equals the corresponding entry of the full Kronecker
  // product restricted to occupied rows and columns.
  std::map<std::array<int, kTransitionFeatures>, std::vector<int>> groups;
  for (int poi_id : model.poi_ids) groups[model.poi_state.at(poi_id)].push_back(poi_id);

  std::vector<std::array<int, kTransitionFeatures>> occupied;
  std::vector<std::vector<int>> members;
  std::map<int, int> group_of_poi;
  for (auto& [state, ids] : groups) {
    for (int id : ids) group_of_poi[id] = static_cast<int>(occupied.size());
    occupied.push_back(state);
    members.push_back(ids);
  }
  const int n_groups = static_cast<int>(occupied.size());

  MatrixXd joint(n_groups, n_groups);
  for (int s = 0; s < n_groups; ++s) {
    for (int t = 0; t < n_groups; ++t) {
      double prob = 1.0;
      for (int f = 0; f < kTransitionFeatures; ++f) {
        prob *= model.features[f].matrix(occupied[s][f], occupied[t][f]);
      }
      joint(s, t) = prob;
    }
  }

  // Expand states to POIs: incoming mass of a group is split uniformly among
  // its members, outgoing mass of each member equals the group's, and a
  // group's self-loop mass spreads over transitions to the other members.
  MatrixXd unnormalized = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int gi = group_of_poi.at(model.poi_ids[i]);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int gj = group_of_poi.at(model.poi_ids[j]);
      if (gi != gj) {
        unnormalized(i, j) = joint(gi, gj) / static_cast<double>(members[gj].size());
      } else {
        unnormalized(i, j) = joint(gi, gi) / static_cast<double>(members[gi].size() - 1);
      }
    }
  }

  model.log_p = MatrixXd::Constant(n, n, kForbiddenLog);
  for (int i = 0; i < n; ++i) {
    const double row_sum = unnormalized.row(i).sum();
    if (row_sum <= 0.0) throw ValidationError("transition row with no mass");
    for (int j = 0; j < n; ++j) {
      if (i != j) model.log_p(i, j) = std::log(unnormalized(i, j) / row_sum);
    }
  }
  return model;
}

double log_transition(const TransitionModel& model, int from, int to) {
  const std::size_t i = model.index_of(from);
  const std::size_t j = model.index_of(to);
  return model.log_p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

}  // namespace tourkit
