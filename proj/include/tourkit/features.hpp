#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "tourkit/data.hpp"

namespace tourkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct PoiStats {
  double popularity = 0.0;    // distinct users who visited
  double n_visit = 0.0;       // total visit count
  double avg_duration = 0.0;  // mean visit duration in seconds
};

using PoiStatsMap = std::map<int, PoiStats>;

/// Per-POI visit statistics over a set of trajectories. POIs never visited
/// are absent from the map; `stats_for` treats them as all-zero.
PoiStatsMap compute_stats(const std::vector<Trajectory>& trajectories);

inline PoiStats stats_for(const PoiStatsMap& stats, int poi_id) {
  auto it = stats.find(poi_id);
  return it == stats.end() ? PoiStats{} : it->second;
}

// ---------------------------------------------------------------------------
// K-means neighbourhoods
// ---------------------------------------------------------------------------

struct ClusterAssignment {
  int k = 0;
  std::map<int, int> cluster_of;  // poi id -> cluster index in [0, k)
  MatrixXd centroids;             // k x 2, (lat, lon)
  std::vector<double> objective_history;

  int at(int poi_id) const;
};

/// Lloyd's algorithm with k-means++ seeding on raw (lat, lon) coordinates.
/// Converges when assignments stop changing or after 200 iterations;
/// deterministic given the seed.
ClusterAssignment kmeans(const PoiTable& pois, int k = 5, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Log-scale discretizer
// ---------------------------------------------------------------------------

/// Bins a non-negative statistic into 5 intervals, uniform in log(1+x) space
/// between the training minimum and maximum. Out-of-range values clamp to the
/// edge bins. Fitting on all-equal values yields a degenerate single-bin
/// discretizer that maps everything to bin 0.
class Discretizer {
 public:
  static Discretizer fit(const std::vector<double>& values);

  int bin(double value) const;
  int n_bins() const { return degenerate_ ? 1 : kBins; }
  bool degenerate() const { return degenerate_; }
  /// Bin edges in log(1+x) space, strictly increasing, size n_bins()+1.
  const std::vector<double>& edges() const { return edges_; }

  static Discretizer from_edges(std::vector<double> edges);

  static constexpr int kBins = 5;

 private:
  std::vector<double> edges_;
  bool degenerate_ = false;
};

// ---------------------------------------------------------------------------
// Query-conditioned feature vectors
// ---------------------------------------------------------------------------

/// Names every dimension of a feature vector: category one-hot, neighbourhood
/// one-hot, log-scale unary statistics, trajectory length, same-category /
/// same-neighbourhood indicators against the endpoints, endpoint distances,
/// and raw statistic differences against the endpoints.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  FeatureSchema(std::vector<std::string> categories, int n_clusters);

  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& categories() const { return categories_; }
  int n_clusters() const { return n_clusters_; }

  bool operator==(const FeatureSchema& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> categories_;
  int n_clusters_ = 0;
  std::vector<std::string> names_;
};

/// Raw (unscaled) feature vector of POI `p` for query `q`.
VectorXd query_features(int p, const Query& q, const PoiTable& pois, const PoiStatsMap& stats,
                        const ClusterAssignment& clusters, const FeatureSchema& schema);

// ---------------------------------------------------------------------------
// [-1, 1] linear scaler
// ---------------------------------------------------------------------------

/// Per-dimension affine map f(x) = a x + b fitted so the training minimum
/// maps to -1 and the maximum to +1; constant dimensions map to 0. Apply
/// never clamps, so unseen values may land outside [-1, 1].
struct Scaler {
  VectorXd a;
  VectorXd b;

  VectorXd apply(const VectorXd& v) const;
  static Scaler fit(const std::vector<VectorXd>& rows);
  static Scaler identity(int dim);
};

}  // namespace tourkit
