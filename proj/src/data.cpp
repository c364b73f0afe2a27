#include "tourkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "tourkit/geo.hpp"

namespace tourkit {

namespace {

// Minimal CSV field splitter. Handles double-quoted fields with embedded
// commas and doubled quotes; anything fancier is rejected upstream by the
// numeric parsers.
std::vector<std::string> split_csv_line(const std::string& line, const std::string& path,
                                        std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (in_quotes) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": unterminated quoted field");
  }
  fields.push_back(std::move(field));
  return fields;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no,
                    const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": unparseable " + what + " '" + s +
                     "'");
  }
  if (pos != s.size() || !std::isfinite(v)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": unparseable " + what + " '" + s +
                     "'");
  }
  return v;
}

std::int64_t parse_int64(const std::string& s, const std::string& path, std::size_t line_no,
                         const char* what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": unparseable " + what + " '" + s +
                     "'");
  }
  if (pos != s.size()) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": unparseable " + what + " '" + s +
                     "'");
  }
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  return in;
}

void require_header(const std::string& got, const std::string& expected, const std::string& path) {
  std::string trimmed = got;
  while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == '\n')) trimmed.pop_back();
  if (trimmed != expected) {
    throw ParseError(path + ":1: expected header '" + expected + "', got '" + trimmed + "'");
  }
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

PoiTable PoiTable::from_rows(std::vector<Poi> rows) {
  if (rows.empty()) throw ValidationError("POI table must not be empty");
  PoiTable table;
  for (auto& poi : rows) {
    if (poi.lat < -90.0 || poi.lat > 90.0) {
      throw ValidationError("poi " + std::to_string(poi.id) + ": latitude out of range");
    }
    if (poi.lon < -180.0 || poi.lon > 180.0) {
      throw ValidationError("poi " + std::to_string(poi.id) + ": longitude out of range");
    }
    if (table.index_by_id_.count(poi.id)) {
      throw DuplicateKeyError("duplicate poi id " + std::to_string(poi.id));
    }
    if (std::find(table.categories_.begin(), table.categories_.end(), poi.category) ==
        table.categories_.end()) {
      table.categories_.push_back(poi.category);
    }
    table.index_by_id_[poi.id] = table.pois_.size();
    table.pois_.push_back(std::move(poi));
  }
  return table;
}

const Poi& PoiTable::at(int poi_id) const {
  auto it = index_by_id_.find(poi_id);
  if (it == index_by_id_.end()) {
    throw ReferentialError("unknown poi id " + std::to_string(poi_id));
  }
  return pois_[it->second];
}

std::size_t PoiTable::index_of(int poi_id) const {
  auto it = index_by_id_.find(poi_id);
  if (it == index_by_id_.end()) {
    throw ReferentialError("unknown poi id " + std::to_string(poi_id));
  }
  return it->second;
}

int PoiTable::category_index(const std::string& category) const {
  auto it = std::find(categories_.begin(), categories_.end(), category);
  if (it == categories_.end()) throw ValidationError("unknown category '" + category + "'");
  return static_cast<int>(it - categories_.begin());
}

std::vector<int> PoiTable::sorted_ids() const {
  std::vector<int> ids;
  ids.reserve(pois_.size());
  for (const auto& p : pois_) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> Trajectory::poi_sequence() const {
  std::vector<int> seq;
  seq.reserve(visits.size());
  for (const auto& v : visits) seq.push_back(v.poi_id);
  return seq;
}

void validate_query(const Query& q, const PoiTable& pois) {
  if (q.start == q.end) throw ValidationError("query start and end must differ");
  if (!pois.has(q.start)) throw ReferentialError("unknown poi id " + std::to_string(q.start));
  if (!pois.has(q.end)) throw ReferentialError("unknown poi id " + std::to_string(q.end));
  if (q.length < 2) throw ValidationError("query length must be at least 2");
  if (static_cast<std::size_t>(q.length) > pois.size()) {
    throw ValidationError("query length exceeds number of POIs");
  }
}

PoiTable load_pois(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, missing header");
  require_header(line, "poiID,poiName,lat,lon,category", path);

  std::vector<Poi> rows;
  std::unordered_map<int, std::size_t> first_line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line, path, line_no);
    if (fields.size() != 5) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 5 columns, got " +
                       std::to_string(fields.size()));
    }
    Poi poi;
    poi.id = static_cast<int>(parse_int64(fields[0], path, line_no, "poiID"));
    poi.name = fields[1];
    poi.lat = parse_double(fields[2], path, line_no, "lat");
    poi.lon = parse_double(fields[3], path, line_no, "lon");
    poi.category = fields[4];
    if (poi.lat < -90.0 || poi.lat > 90.0 || poi.lon < -180.0 || poi.lon > 180.0) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": coordinate out of range");
    }
    auto it = first_line.find(poi.id);
    if (it != first_line.end()) {
      throw DuplicateKeyError(path + ":" + std::to_string(line_no) + ": duplicate poi id " +
                              std::to_string(poi.id) + " (first seen on line " +
                              std::to_string(it->second) + ")");
    }
    first_line[poi.id] = line_no;
    rows.push_back(std::move(poi));
  }
  if (rows.empty()) throw ValidationError(path + ": no POI rows");
  return PoiTable::from_rows(std::move(rows));
}

std::vector<Trajectory> load_trajectories(const std::string& path, const PoiTable& pois) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, missing header");
  require_header(line, "userID,trajID,poiID,arrivalTime,departureTime", path);

  std::map<std::pair<std::string, int>, std::vector<Visit>> groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line, path, line_no);
    if (fields.size() != 5) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 5 columns, got " +
                       std::to_string(fields.size()));
    }
    Visit v;
    v.user = fields[0];
    const int traj_id = static_cast<int>(parse_int64(fields[1], path, line_no, "trajID"));
    v.poi_id = static_cast<int>(parse_int64(fields[2], path, line_no, "poiID"));
    v.arrival = parse_int64(fields[3], path, line_no, "arrivalTime");
    v.departure = parse_int64(fields[4], path, line_no, "departureTime");
    if (!pois.has(v.poi_id)) {
      throw ReferentialError(path + ":" + std::to_string(line_no) + ": unknown poi id " +
                             std::to_string(v.poi_id));
    }
    if (v.departure < v.arrival) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": departure before arrival");
    }
    groups[{v.user, traj_id}].push_back(std::move(v));
  }

  std::vector<Trajectory> out;
  out.reserve(groups.size());
  for (auto& [key, visits] : groups) {
    std::sort(visits.begin(), visits.end(), [](const Visit& a, const Visit& b) {
      return std::tie(a.arrival, a.departure, a.poi_id) < std::tie(b.arrival, b.departure, b.poi_id);
    });
    Trajectory traj;
    traj.user = key.first;
    traj.traj_id = key.second;
    for (auto& v : visits) {
      if (!traj.visits.empty() && traj.visits.back().poi_id == v.poi_id) {
        // Consecutive same-POI visits merge into one spanning both.
        traj.visits.back().departure = std::max(traj.visits.back().departure, v.departure);
        continue;
      }
      if (!traj.visits.empty() && v.arrival < traj.visits.back().departure) {
        throw ValidationError("trajectory (" + key.first + "," + std::to_string(key.second) +
                              "): overlapping visits");
      }
      traj.visits.push_back(std::move(v));
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<PhotoRecord> load_photos(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, missing header");
  require_header(line, "userID,timestamp,lat,lon", path);

  std::vector<PhotoRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line, path, line_no);
    if (fields.size() != 4) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 columns, got " +
                       std::to_string(fields.size()));
    }
    PhotoRecord rec;
    rec.user = fields[0];
    rec.timestamp = parse_int64(fields[1], path, line_no, "timestamp");
    rec.lat = parse_double(fields[2], path, line_no, "lat");
    rec.lon = parse_double(fields[3], path, line_no, "lon");
    if (rec.timestamp < 0) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": negative timestamp");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_pois_csv(const std::string& path, const PoiTable& pois) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << "poiID,poiName,lat,lon,category\n";
  out.precision(17);
  for (const auto& p : pois.pois()) {
    out << p.id << ',' << csv_quote(p.name) << ',' << p.lat << ',' << p.lon << ','
        << csv_quote(p.category) << '\n';
  }
}

void save_trajectories_csv(const std::string& path, const std::vector<Trajectory>& trajectories) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write file: " + path);
  out << "userID,trajID,poiID,arrivalTime,departureTime\n";
  for (const auto& t : trajectories) {
    for (const auto& v : t.visits) {
      out << csv_quote(t.user) << ',' << t.traj_id << ',' << v.poi_id << ',' << v.arrival << ','
          << v.departure << '\n';
    }
  }
}

std::vector<Trajectory> build_trajectories(const std::vector<PhotoRecord>& photos,
                                           const PoiTable& pois, double map_radius_m,
                                           std::int64_t time_gap_s) {
  if (map_radius_m <= 0) throw ValidationError("map_radius must be positive");
  if (time_gap_s <= 0) throw ValidationError("time_gap must be positive");

  struct MappedPhoto {
    std::int64_t timestamp;
    int poi_id;
  };
  std::map<std::string, std::vector<MappedPhoto>> by_user;
  for (const auto& photo : photos) {
    int best_id = -1;
    double best_km = std::numeric_limits<double>::infinity();
    for (const auto& poi : pois.pois()) {
      const double km = haversine_km(photo.lat, photo.lon, poi.lat, poi.lon);
      if (km < best_km || (km == best_km && poi.id < best_id)) {
        best_km = km;
        best_id = poi.id;
      }
    }
    if (best_km * 1000.0 <= map_radius_m) {
      by_user[photo.user].push_back({photo.timestamp, best_id});
    }
  }

  std::vector<Trajectory> out;
  for (auto& [user, mapped] : by_user) {
    std::sort(mapped.begin(), mapped.end(), [](const MappedPhoto& a, const MappedPhoto& b) {
      return std::tie(a.timestamp, a.poi_id) < std::tie(b.timestamp, b.poi_id);
    });

    // Collapse consecutive photos at one POI into a visit.
    std::vector<Visit> visits;
    for (const auto& mp : mapped) {
      if (!visits.empty() && visits.back().poi_id == mp.poi_id) {
        visits.back().departure = mp.timestamp;
      } else {
        visits.push_back(Visit{user, mp.poi_id, mp.timestamp, mp.timestamp});
      }
    }

    // Split the visit sequence wherever the idle gap exceeds the threshold.
    int next_traj_id = static_cast<int>(out.size()) + 1;
    Trajectory current;
    current.user = user;
    current.traj_id = next_traj_id;
    for (const auto& v : visits) {
      if (!current.visits.empty() &&
          v.arrival - current.visits.back().departure > time_gap_s) {
        out.push_back(std::move(current));
        current = Trajectory{};
        current.user = user;
        current.traj_id = ++next_traj_id;
      }
      current.visits.push_back(v);
    }
    if (!current.visits.empty()) out.push_back(std::move(current));
  }
  return out;
}

SynthDataset synth_dataset(std::uint64_t seed, int n_pois, int n_traj, int max_len) {
  if (n_pois < 3) throw ValidationError("synth_dataset: n_pois must be at least 3");
  if (n_traj < 1) throw ValidationError("synth_dataset: n_traj must be at least 1");
  if (max_len < 2 || max_len > n_pois) {
    throw ValidationError("synth_dataset: max_len must be in [2, n_pois]");
  }

  static const std::vector<std::string> kCategories = {"Park", "Museum", "Beach", "Shopping"};
  const int n_categories = static_cast<int>(kCategories.size());
  const int n_blobs = std::min(5, std::max(2, n_pois / 4));

  Rng poi_rng(substream_seed(seed, "synth/pois"));
  std::vector<Poi> rows;
  rows.reserve(n_pois);
  for (int i = 0; i < n_pois; ++i) {
    Poi p;
    p.id = i;
    p.name = "poi-" + std::to_string(i);
    const int blob = i % n_blobs;
    p.lat = 45.0 + static_cast<double>(blob) * 1.0 + poi_rng.next_in(-0.02, 0.02);
    p.lon = 10.0 + static_cast<double>(blob) * 1.0 + poi_rng.next_in(-0.02, 0.02);
    p.category = kCategories[i % n_categories];
    rows.push_back(std::move(p));
  }
  PoiTable pois = PoiTable::from_rows(std::move(rows));

  // Planted structure: the next POI's category strongly favours the next
  // category in a fixed cycle, and a "popular" third of the POIs is several
  // times more attractive than the rest.
  const int n_popular = std::max(1, n_pois / 3);
  auto poi_weight = [&](int id) { return id < n_popular ? 6.0 : 1.0; };
  auto category_factor = [&](int from_cat, int to_cat) {
    return to_cat == (from_cat + 1) % n_categories ? 0.8 : 0.1;
  };

  const int n_users = std::max(4, n_traj / 5);
  Rng traj_rng(substream_seed(seed, "synth/trajectories"));
  std::vector<Trajectory> trajectories;
  trajectories.reserve(n_traj);
  for (int t = 0; t < n_traj; ++t) {
    const int length = 2 + static_cast<int>(traj_rng.next_below(max_len - 1));
    Trajectory traj;
    traj.user = "u" + std::to_string(traj_rng.next_below(n_users));
    traj.traj_id = t + 1;

    std::vector<int> sequence;
    sequence.push_back(static_cast<int>(traj_rng.next_below(n_pois)));
    while (static_cast<int>(sequence.size()) < length) {
      const int current = sequence.back();
      const int from_cat = current % n_categories;
      double total = 0.0;
      std::vector<std::pair<int, double>> candidates;
      for (int p = 0; p < n_pois; ++p) {
        if (std::find(sequence.begin(), sequence.end(), p) != sequence.end()) continue;
        const double w = category_factor(from_cat, p % n_categories) * poi_weight(p);
        candidates.emplace_back(p, w);
        total += w;
      }
      double r = traj_rng.next_unit() * total;
      int chosen = candidates.back().first;
      for (const auto& [p, w] : candidates) {
        r -= w;
        if (r <= 0.0) {
          chosen = p;
          break;
        }
      }
      sequence.push_back(chosen);
    }

    std::int64_t clock = 1600000000 + static_cast<std::int64_t>(t) * 100000;
    for (int poi_id : sequence) {
      const std::int64_t duration =
          600 * (1 + poi_id % 5) + static_cast<std::int64_t>(traj_rng.next_below(600));
      traj.visits.push_back(Visit{traj.user, poi_id, clock, clock + duration});
      clock += duration + 1800 + static_cast<std::int64_t>(traj_rng.next_below(1800));
    }
    trajectories.push_back(std::move(traj));
  }

  return SynthDataset{std::move(pois), std::move(trajectories)};
}

}  // namespace tourkit
