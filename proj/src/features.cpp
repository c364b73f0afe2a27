#include "tourkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "tourkit/geo.hpp"

namespace tourkit {

PoiStatsMap compute_stats(const std::vector<Trajectory>& trajectories) {
  std::map<int, std::set<std::string>> users;
  std::map<int, double> visits;
  std::map<int, double> total_duration;
  for (const auto& traj : trajectories) {
    for (const auto& visit : traj.visits) {
      users[visit.poi_id].insert(traj.user);
      visits[visit.poi_id] += 1.0;
      total_duration[visit.poi_id] += static_cast<double>(visit.departure - visit.arrival);
    }
  }
  PoiStatsMap out;
  for (const auto& [poi_id, n] : visits) {
    PoiStats s;
    s.popularity = static_cast<double>(users[poi_id].size());
    s.n_visit = n;
    s.avg_duration = total_duration[poi_id] / n;
    out[poi_id] = s;
  }
  return out;
}

int ClusterAssignment::at(int poi_id) const {
  auto it = cluster_of.find(poi_id);
  if (it == cluster_of.end()) {
    throw ReferentialError("poi " + std::to_string(poi_id) + " has no cluster assignment");
  }
  return it->second;
}

ClusterAssignment kmeans(const PoiTable& pois, int k, std::uint64_t seed) {
  const int n = static_cast<int>(pois.size());
  if (k < 1) throw ValidationError("kmeans: k must be positive");
  if (k > n) throw ValidationError("kmeans: k exceeds number of POIs");

  MatrixXd points(n, 2);
  for (int i = 0; i < n; ++i) {
    points(i, 0) = pois.pois()[i].lat;
    points(i, 1) = pois.pois()[i].lon;
  }

  // k-means++ seeding.
  Rng rng(seed);
  MatrixXd centroids(k, 2);
  std::vector<bool> chosen(n, false);
  int first = static_cast<int>(rng.next_below(n));
  centroids.row(0) = points.row(first);
  chosen[first] = true;
  VectorXd d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    int pick = -1;
    if (total > 0.0) {
      double r = rng.next_unit() * total;
      for (int i = 0; i < n; ++i) {
        r -= d2(i);
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // All remaining points coincide with chosen centroids; take the first
      // unchosen index.
      for (int i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = 0;
    }
    chosen[pick] = true;
    centroids.row(c) = points.row(pick);
    d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assignment(n, -1);
  std::vector<double> history;
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      objective += best_d;
      if (assignment[i] != best) {
        assignment[i] = best;
        changed = true;
      }
    }
    history.push_back(objective);
    if (!changed) break;

    MatrixXd sums = MatrixXd::Zero(k, 2);
    VectorXd counts = VectorXd::Zero(k);
    for (int i = 0; i < n; ++i) {
      sums.row(assignment[i]) += points.row(i);
      counts(assignment[i]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0.0) centroids.row(c) = sums.row(c) / counts(c);
    }
  }

  ClusterAssignment out;
  out.k = k;
  out.centroids = centroids;
  out.objective_history = std::move(history);
  for (int i = 0; i < n; ++i) out.cluster_of[pois.pois()[i].id] = assignment[i];
  return out;
}

Discretizer Discretizer::fit(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("discretizer: no values");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    const double x = std::log1p(v);
    if (!std::isfinite(x)) throw ValidationError("discretizer: non-finite value");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  Discretizer d;
  if (hi <= lo) {
    d.degenerate_ = true;
    d.edges_ = {lo, lo};
    return d;
  }
  d.edges_.resize(kBins + 1);
  for (int i = 0; i <= kBins; ++i) {
    d.edges_[i] = lo + (hi - lo) * static_cast<double>(i) / kBins;
  }
  return d;
}

Discretizer Discretizer::from_edges(std::vector<double> edges) {
  Discretizer d;
  if (edges.size() == 2 && edges[0] == edges[1]) {
    d.degenerate_ = true;
  } else if (edges.size() != kBins + 1) {
    throw ValidationError("discretizer: expected 6 edges");
  } else {
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (edges[i] <= edges[i - 1]) throw ValidationError("discretizer: edges not increasing");
    }
  }
  d.edges_ = std::move(edges);
  return d;
}

int Discretizer::bin(double value) const {
  if (degenerate_) return 0;
  const double x = std::log1p(value);
  const double lo = edges_.front();
  const double hi = edges_.back();
  if (x <= lo) return 0;
  if (x >= hi) return kBins - 1;
  const int idx = static_cast<int>((x - lo) / (hi - lo) * kBins);
  return std::clamp(idx, 0, kBins - 1);
}

FeatureSchema::FeatureSchema(std::vector<std::string> categories, int n_clusters)
    : categories_(std::move(categories)), n_clusters_(n_clusters) {
  for (const auto& c : categories_) names_.push_back("category:" + c);
  for (int i = 0; i < n_clusters_; ++i) names_.push_back("neighbourhood:" + std::to_string(i));
  names_.insert(names_.end(), {"popularity", "nVisit", "avgDuration", "trajLen", "sameCatStart",
                               "sameCatEnd", "sameNeighbourhoodStart", "sameNeighbourhoodEnd",
                               "distStart", "distEnd", "diffPopStart", "diffPopEnd",
                               "diffNVisitStart", "diffNVisitEnd", "diffDurationStart",
                               "diffDurationEnd"});
}

VectorXd query_features(int p, const Query& q, const PoiTable& pois, const PoiStatsMap& stats,
                        const ClusterAssignment& clusters, const FeatureSchema& schema) {
  const Poi& poi = pois.at(p);
  const Poi& start = pois.at(q.start);
  const Poi& end = pois.at(q.end);
  const PoiStats sp = stats_for(stats, p);
  const PoiStats ss = stats_for(stats, q.start);
  const PoiStats se = stats_for(stats, q.end);

  VectorXd v = VectorXd::Zero(schema.dim());
  int off = 0;
  v(off + pois.category_index(poi.category)) = 1.0;
  off += static_cast<int>(schema.categories().size());
  v(off + clusters.at(p)) = 1.0;
  off += schema.n_clusters();

  v(off++) = std::log1p(sp.popularity);
  v(off++) = std::log1p(sp.n_visit);
  v(off++) = std::log1p(sp.avg_duration);
  v(off++) = static_cast<double>(q.length);
  v(off++) = poi.category == start.category ? 1.0 : -1.0;
  v(off++) = poi.category == end.category ? 1.0 : -1.0;
  v(off++) = clusters.at(p) == clusters.at(q.start) ? 1.0 : -1.0;
  v(off++) = clusters.at(p) == clusters.at(q.end) ? 1.0 : -1.0;
  v(off++) = haversine_km(poi.lat, poi.lon, start.lat, start.lon);
  v(off++) = haversine_km(poi.lat, poi.lon, end.lat, end.lon);
  v(off++) = sp.popularity - ss.popularity;
  v(off++) = sp.popularity - se.popularity;
  v(off++) = sp.n_visit - ss.n_visit;
  v(off++) = sp.n_visit - se.n_visit;
  v(off++) = sp.avg_duration - ss.avg_duration;
  v(off++) = sp.avg_duration - se.avg_duration;
  return v;
}

VectorXd Scaler::apply(const VectorXd& v) const {
  if (v.size() != a.size()) throw ValidationError("scaler: dimension mismatch");
  return a.cwiseProduct(v) + b;
}

Scaler Scaler::fit(const std::vector<VectorXd>& rows) {
  if (rows.empty()) throw ValidationError("scaler: no rows");
  const Eigen::Index dim = rows.front().size();
  VectorXd lo = rows.front();
  VectorXd hi = rows.front();
  for (const auto& r : rows) {
    if (r.size() != dim) throw ValidationError("scaler: inconsistent row dimensions");
    lo = lo.cwiseMin(r);
    hi = hi.cwiseMax(r);
  }
  Scaler s;
  s.a = VectorXd::Zero(dim);
  s.b = VectorXd::Zero(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (hi(i) > lo(i)) {
      s.a(i) = 2.0 / (hi(i) - lo(i));
      s.b(i) = -1.0 - s.a(i) * lo(i);
    }
  }
  return s;
}

Scaler Scaler::identity(int dim) {
  Scaler s;
  s.a = VectorXd::Ones(dim);
  s.b = VectorXd::Zero(dim);
  return s;
}

}  // namespace tourkit
