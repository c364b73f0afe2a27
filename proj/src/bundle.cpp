#include "tourkit/bundle.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tourkit {

namespace {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? 0 : static_cast<Eigen::Index>(rows.at(0).size());
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows.at(i).at(j).get<double>();
  }
  return m;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VectorXd vector_from_json(const json& arr) {
  VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = arr.at(i).get<double>();
  return v;
}

json discretizer_to_json(const Discretizer& d) {
  return json{{"edges", d.edges()}, {"degenerate", d.degenerate()}};
}

Discretizer discretizer_from_json(const json& j) {
  return Discretizer::from_edges(j.at("edges").get<std::vector<double>>());
}

}  // namespace

std::string dataset_fingerprint(const PoiTable& pois,
                                const std::vector<Trajectory>& trajectories) {
  std::ostringstream canon;
  canon.precision(17);
  for (const auto& p : pois.pois()) {
    canon << p.id << '|' << p.name << '|' << p.lat << '|' << p.lon << '|' << p.category << '\n';
  }
  for (const auto& t : trajectories) {
    for (const auto& v : t.visits) {
      canon << t.user << '|' << t.traj_id << '|' << v.poi_id << '|' << v.arrival << '|'
            << v.departure << '\n';
    }
  }
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canon.str());
  return hex.str();
}

ModelBundle train_bundle(const PoiTable& pois, const std::vector<Trajectory>& trajectories,
                         const TrainOptions& options, TrainDiagnostics* diagnostics) {
  ModelBundle bundle;
  bundle.C = options.C;
  bundle.epsilon = options.epsilon;
  bundle.seed = options.seed;
  bundle.pois = pois;
  bundle.dataset_fingerprint = dataset_fingerprint(pois, trajectories);
  bundle.stats = compute_stats(trajectories);
  const int k = std::min<int>(options.k_clusters, static_cast<int>(pois.size()));
  bundle.clusters = kmeans(pois, k, substream_seed(options.seed, "kmeans"));
  bundle.discretizers = fit_transition_discretizers(pois, bundle.stats);
  bundle.rank = train_rank_model(pois, trajectories, bundle.stats, bundle.clusters, options.C,
                                 diagnostics);
  bundle.transition = build_transition_model(trajectories, pois, bundle.stats, bundle.clusters,
                                             bundle.discretizers, options.epsilon);
  return bundle;
}

std::string bundle_to_json(const ModelBundle& bundle) {
  json doc;
  doc["version"] = bundle.version;
  doc["dataset_fingerprint"] = bundle.dataset_fingerprint;
  doc["C"] = bundle.C;
  doc["epsilon"] = bundle.epsilon;
  doc["seed"] = bundle.seed;

  json pois = json::array();
  for (const auto& p : bundle.pois.pois()) {
    pois.push_back({{"id", p.id},
                    {"name", p.name},
                    {"lat", p.lat},
                    {"lon", p.lon},
                    {"category", p.category}});
  }
  doc["pois"] = std::move(pois);

  json stats = json::object();
  for (const auto& [id, s] : bundle.stats) {
    stats[std::to_string(id)] = {
        {"popularity", s.popularity}, {"nVisit", s.n_visit}, {"avgDuration", s.avg_duration}};
  }
  doc["stats"] = std::move(stats);

  json clusters;
  clusters["k"] = bundle.clusters.k;
  clusters["centroids"] = matrix_to_json(bundle.clusters.centroids);
  json assignment = json::object();
  for (const auto& [id, c] : bundle.clusters.cluster_of) assignment[std::to_string(id)] = c;
  clusters["assignment"] = std::move(assignment);
  doc["clusters"] = std::move(clusters);

  doc["discretizers"] = {{"popularity", discretizer_to_json(bundle.discretizers.popularity)},
                         {"nVisit", discretizer_to_json(bundle.discretizers.n_visit)},
                         {"avgDuration", discretizer_to_json(bundle.discretizers.avg_duration)}};

  json rank;
  rank["w"] = vector_to_json(bundle.rank.w);
  rank["C"] = bundle.rank.C;
  rank["scaler"] = {{"a", vector_to_json(bundle.rank.scaler.a)},
                    {"b", vector_to_json(bundle.rank.scaler.b)}};
  rank["schema"] = {{"categories", bundle.rank.schema.categories()},
                    {"n_clusters", bundle.rank.schema.n_clusters()}};
  doc["rank"] = std::move(rank);

  json transition;
  transition["epsilon"] = bundle.transition.epsilon;
  transition["poi_ids"] = bundle.transition.poi_ids;
  transition["log_p"] = matrix_to_json(bundle.transition.log_p);
  json features = json::array();
  for (const auto& f : bundle.transition.features) {
    features.push_back(
        {{"name", f.name}, {"states", f.states}, {"matrix", matrix_to_json(f.matrix)}});
  }
  transition["features"] = std::move(features);
  json poi_state = json::object();
  for (const auto& [id, state] : bundle.transition.poi_state) {
    poi_state[std::to_string(id)] = state;
  }
  transition["poi_state"] = std::move(poi_state);
  doc["transition"] = std::move(transition);

  return doc.dump(2) + "\n";
}

ModelBundle bundle_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bundle: invalid JSON: ") + e.what());
  }
  try {
    ModelBundle bundle;
    bundle.version = doc.at("version").get<std::string>();
    if (bundle.version != ModelBundle::kVersion) {
      throw ValidationError("bundle: unrecognized version '" + bundle.version + "'");
    }
    bundle.dataset_fingerprint = doc.at("dataset_fingerprint").get<std::string>();
    bundle.C = doc.at("C").get<double>();
    bundle.epsilon = doc.at("epsilon").get<double>();
    bundle.seed = doc.at("seed").get<std::uint64_t>();

    std::vector<Poi> rows;
    for (const auto& p : doc.at("pois")) {
      rows.push_back(Poi{p.at("id").get<int>(), p.at("name").get<std::string>(),
                         p.at("lat").get<double>(), p.at("lon").get<double>(),
                         p.at("category").get<std::string>()});
    }
    bundle.pois = PoiTable::from_rows(std::move(rows));

    for (const auto& [key, s] : doc.at("stats").items()) {
      PoiStats st;
      st.popularity = s.at("popularity").get<double>();
      st.n_visit = s.at("nVisit").get<double>();
      st.avg_duration = s.at("avgDuration").get<double>();
      bundle.stats[std::stoi(key)] = st;
    }

    const auto& clusters = doc.at("clusters");
    bundle.clusters.k = clusters.at("k").get<int>();
    bundle.clusters.centroids = matrix_from_json(clusters.at("centroids"));
    for (const auto& [key, c] : clusters.at("assignment").items()) {
      bundle.clusters.cluster_of[std::stoi(key)] = c.get<int>();
    }

    const auto& disc = doc.at("discretizers");
    bundle.discretizers.popularity = discretizer_from_json(disc.at("popularity"));
    bundle.discretizers.n_visit = discretizer_from_json(disc.at("nVisit"));
    bundle.discretizers.avg_duration = discretizer_from_json(disc.at("avgDuration"));

    const auto& rank = doc.at("rank");
    bundle.rank.w = vector_from_json(rank.at("w"));
    bundle.rank.C = rank.at("C").get<double>();
    bundle.rank.scaler.a = vector_from_json(rank.at("scaler").at("a"));
    bundle.rank.scaler.b = vector_from_json(rank.at("scaler").at("b"));
    bundle.rank.schema = FeatureSchema(
        rank.at("schema").at("categories").get<std::vector<std::string>>(),
        rank.at("schema").at("n_clusters").get<int>());

    const auto& transition = doc.at("transition");
    bundle.transition.epsilon = transition.at("epsilon").get<double>();
    bundle.transition.poi_ids = transition.at("poi_ids").get<std::vector<int>>();
    bundle.transition.log_p = matrix_from_json(transition.at("log_p"));
    const auto& features = transition.at("features");
    if (features.size() != kTransitionFeatures) {
      throw ValidationError("bundle: expected 5 feature transition matrices");
    }
    for (std::size_t f = 0; f < kTransitionFeatures; ++f) {
      bundle.transition.features[f].name = features.at(f).at("name").get<std::string>();
      bundle.transition.features[f].states =
          features.at(f).at("states").get<std::vector<std::string>>();
      bundle.transition.features[f].matrix = matrix_from_json(features.at(f).at("matrix"));
    }
    for (const auto& [key, state] : transition.at("poi_state").items()) {
      bundle.transition.poi_state[std::stoi(key)] =
          state.get<std::array<int, kTransitionFeatures>>();
    }
    return bundle;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bundle: malformed document: ") + e.what());
  }
}

void save_bundle(const std::string& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << bundle_to_json(bundle);
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return bundle_from_json(buffer.str());
}

}  // namespace tourkit
