#pragma once

#include <string>

#include "tourkit/route.hpp"

namespace tourkit {

/// Everything a recommendation needs, persisted as one versioned JSON
/// document: the POI table and its training statistics, the fitted clusters,
/// discretizers, ranking and transition models, and a fingerprint of the
/// dataset the bundle was trained on.
struct ModelBundle {
  static constexpr const char* kVersion = "tourkit-bundle-v1";

  std::string version = kVersion;
  std::string dataset_fingerprint;
  double C = 10.0;
  double epsilon = 1.0;
  std::uint64_t seed = 0;

  PoiTable pois;
  PoiStatsMap stats;
  ClusterAssignment clusters;
  TransitionDiscretizers discretizers;
  RankModel rank;
  TransitionModel transition;

  ModelSet model_set() const {
    ModelSet set;
    set.pois = &pois;
    set.stats = &stats;
    set.clusters = &clusters;
    set.rank = &rank;
    set.transition = &transition;
    return set;
  }
};

/// Content hash of a dataset (POIs plus trajectories), stable across runs.
std::string dataset_fingerprint(const PoiTable& pois,
                                const std::vector<Trajectory>& trajectories);

struct TrainOptions {
  double C = 10.0;
  double epsilon = 1.0;
  int k_clusters = 5;
  std::uint64_t seed = 0;
};

ModelBundle train_bundle(const PoiTable& pois, const std::vector<Trajectory>& trajectories,
                         const TrainOptions& options, TrainDiagnostics* diagnostics = nullptr);

std::string bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const std::string& text);

void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

}  // namespace tourkit
