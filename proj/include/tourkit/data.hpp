#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tourkit/common.hpp"

namespace tourkit {

struct Poi {
  int id = 0;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  std::string category;
};

/// Ordered, non-empty collection of POIs with unique ids and a category
/// vocabulary in first-appearance order.
class PoiTable {
 public:
  static PoiTable from_rows(std::vector<Poi> rows);

  std::size_t size() const { return pois_.size(); }
  const std::vector<Poi>& pois() const { return pois_; }
  const std::vector<std::string>& categories() const { return categories_; }

  bool has(int poi_id) const { return index_by_id_.count(poi_id) != 0; }
  const Poi& at(int poi_id) const;
  /// Position of a POI within the table (file order).
  std::size_t index_of(int poi_id) const;
  int category_index(const std::string& category) const;

  /// All ids in ascending order.
  std::vector<int> sorted_ids() const;

 private:
  std::vector<Poi> pois_;
  std::vector<std::string> categories_;
  std::unordered_map<int, std::size_t> index_by_id_;
};

struct PhotoRecord {
  std::string user;
  std::int64_t timestamp = 0;  // epoch seconds, UTC
  double lat = 0.0;
  double lon = 0.0;
};

struct Visit {
  std::string user;
  int poi_id = 0;
  std::int64_t arrival = 0;
  std::int64_t departure = 0;
};

struct Trajectory {
  std::string user;
  int traj_id = 0;
  std::vector<Visit> visits;

  std::size_t length() const { return visits.size(); }
  std::vector<int> poi_sequence() const;
};

struct Query {
  int start = 0;
  int end = 0;
  int length = 0;  // total number of POIs, >= 2
};

/// Validates a query against a table: distinct existing endpoints and
/// 2 <= length <= |table|.
void validate_query(const Query& q, const PoiTable& pois);

// ---------------------------------------------------------------------------
// File loading.
//
//   POI CSV:   poiID,poiName,lat,lon,category
//   Visit CSV: userID,trajID,poiID,arrivalTime,departureTime
//   Photo CSV: userID,timestamp,lat,lon
//
// All parsers require the exact header and report offending line numbers.
// ---------------------------------------------------------------------------

PoiTable load_pois(const std::string& path);

std::vector<Trajectory> load_trajectories(const std::string& path, const PoiTable& pois);

std::vector<PhotoRecord> load_photos(const std::string& path);

void save_pois_csv(const std::string& path, const PoiTable& pois);
void save_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories);

/// Assembles trajectories from raw geo-tagged photos: each photo maps to the
/// nearest POI within `map_radius_m` metres (ties to the lower poi id),
/// consecutive photos at one POI collapse into a single visit spanning the
/// first to the last shot, and a user's visit sequence is split into separate
/// trajectories wherever the idle gap exceeds `time_gap_s` seconds.
std::vector<Trajectory> build_trajectories(const std::vector<PhotoRecord>& photos,
                                           const PoiTable& pois, double map_radius_m,
                                           std::int64_t time_gap_s);

struct SynthDataset {
  PoiTable pois;
  std::vector<Trajectory> trajectories;
};

/// Seeded synthetic dataset with recoverable structure: POI categories cycle
/// through a small vocabulary and transitions strongly favour the next
/// category in the cycle, a fixed subset of POIs is much more attractive than
/// the rest, and coordinates form a handful of spatial blobs.
SynthDataset synth_dataset(std::uint64_t seed, int n_pois, int n_traj, int max_len);

}  // namespace tourkit
