#include "tourkit/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace tourkit {

RankLabelSet build_labels(const std::vector<Trajectory>& trajectories) {
  std::map<std::tuple<int, int, int>, std::map<int, int>> groups;
  for (const auto& traj : trajectories) {
    const auto seq = traj.poi_sequence();
    if (seq.size() < 2) continue;
    const auto key = std::make_tuple(seq.front(), seq.back(), static_cast<int>(seq.size()));
    auto& counts = groups[key];
    std::set<int> intermediates(seq.begin() + 1, seq.end() - 1);
    for (int poi_id : intermediates) counts[poi_id] += 1;
  }
  RankLabelSet out;
  for (auto& [key, counts] : groups) {
    Query q;
    q.start = std::get<0>(key);
    q.end = std::get<1>(key);
    q.length = std::get<2>(key);
    out.queries.push_back(q);
    out.labels.push_back(std::move(counts));
  }
  return out;
}

double rank_objective(const VectorXd& w, const MatrixXd& pair_diffs, double C) {
  if (w.size() != pair_diffs.cols()) throw ValidationError("rank_objective: dimension mismatch");
  const VectorXd margins = VectorXd::Ones(pair_diffs.rows()) - pair_diffs * w;
  const VectorXd hinge = margins.cwiseMax(0.0);
  return 0.5 * w.squaredNorm() + C * hinge.squaredNorm();
}

VectorXd rank_gradient(const VectorXd& w, const MatrixXd& pair_diffs, double C) {
  if (w.size() != pair_diffs.cols()) throw ValidationError("rank_gradient: dimension mismatch");
  const VectorXd margins = VectorXd::Ones(pair_diffs.rows()) - pair_diffs * w;
  const VectorXd hinge = margins.cwiseMax(0.0);
  return w - 2.0 * C * pair_diffs.transpose() * hinge;
}

VectorXd minimize_rank_objective(const MatrixXd& pair_diffs, double C, double tol, int max_iter,
                                 TrainDiagnostics* diagnostics) {
  if (C <= 0.0) throw ValidationError("minimize_rank_objective: C must be positive");
  if (pair_diffs.rows() == 0) throw TrainingError("no preference pairs");
  const Eigen::Index dim = pair_diffs.cols();
  VectorXd w = VectorXd::Zero(dim);
  double objective = rank_objective(w, pair_diffs, C);
  VectorXd grad = rank_gradient(w, pair_diffs, C);

  int iter = 0;
  for (; iter < max_iter && grad.norm() > tol; ++iter) {
    // Generalized Newton step: the Hessian restricted to active pairs is
    // I + 2C D_a' D_a, positive definite by the identity term.
    const VectorXd margins = VectorXd::Ones(pair_diffs.rows()) - pair_diffs * w;
    MatrixXd hessian = MatrixXd::Identity(dim, dim);
    for (Eigen::Index r = 0; r < pair_diffs.rows(); ++r) {
      if (margins(r) > 0.0) {
        hessian.noalias() += 2.0 * C * pair_diffs.row(r).transpose() * pair_diffs.row(r);
      }
    }
    const VectorXd step = hessian.ldlt().solve(-grad);

    // Backtracking line search on the exact objective.
    double t = 1.0;
    const double slope = grad.dot(step);
    VectorXd candidate = w + t * step;
    double candidate_obj = rank_objective(candidate, pair_diffs, C);
    while (candidate_obj > objective + 1e-4 * t * slope && t > 1e-12) {
      t *= 0.5;
      candidate = w + t * step;
      candidate_obj = rank_objective(candidate, pair_diffs, C);
    }
    if (candidate_obj >= objective) break;  // stalled at numerical precision
    w = candidate;
    objective = candidate_obj;
    grad = rank_gradient(w, pair_diffs, C);
  }

  if (diagnostics != nullptr) {
    diagnostics->iterations = iter;
    diagnostics->objective = objective;
    diagnostics->gradient_norm = grad.norm();
  }
  return w;
}

RankModel train_rank_model(const RankLabelSet& labels, const std::vector<MatrixXd>& features,
                           const std::vector<int>& poi_ids, const FeatureSchema& schema, double C,
                           TrainDiagnostics* diagnostics) {
  if (C <= 0.0) throw ValidationError("train: C must be positive");
  if (labels.queries.size() != features.size()) {
    throw ValidationError("train: labels and feature blocks misaligned");
  }

  std::vector<VectorXd> rows;
  for (const auto& block : features) {
    if (block.cols() != schema.dim() || block.rows() != static_cast<Eigen::Index>(poi_ids.size())) {
      throw ValidationError("train: feature block does not match schema");
    }
    for (Eigen::Index r = 0; r < block.rows(); ++r) rows.push_back(block.row(r));
  }
  if (rows.empty()) throw TrainingError("no preference pairs");
  const Scaler scaler = Scaler::fit(rows);

  std::vector<VectorXd> diffs;
  for (std::size_t qi = 0; qi < labels.queries.size(); ++qi) {
    const MatrixXd& block = features[qi];
    std::vector<int> lab(poi_ids.size());
    for (std::size_t i = 0; i < poi_ids.size(); ++i) {
      lab[i] = labels.label_of(qi, poi_ids[i]);
    }
    for (std::size_t i = 0; i < poi_ids.size(); ++i) {
      for (std::size_t j = 0; j < poi_ids.size(); ++j) {
        if (lab[i] > lab[j]) {
          diffs.push_back(scaler.apply(block.row(i)) - scaler.apply(block.row(j)));
        }
      }
    }
  }
  if (diffs.empty()) throw TrainingError("no preference pairs");

  MatrixXd pair_diffs(static_cast<Eigen::Index>(diffs.size()), schema.dim());
  for (std::size_t i = 0; i < diffs.size(); ++i) pair_diffs.row(static_cast<Eigen::Index>(i)) = diffs[i];

  RankModel model;
  model.C = C;
  model.scaler = scaler;
  model.schema = schema;
  model.w = minimize_rank_objective(pair_diffs, C, 1e-6, 10000, diagnostics);
  return model;
}

RankModel train_rank_model(const PoiTable& pois, const std::vector<Trajectory>& trajectories,
                           const PoiStatsMap& stats, const ClusterAssignment& clusters, double C,
                           TrainDiagnostics* diagnostics) {
  const FeatureSchema schema(pois.categories(), clusters.k);
  const RankLabelSet labels = build_labels(trajectories);
  const std::vector<int> poi_ids = pois.sorted_ids();

  std::vector<MatrixXd> features;
  features.reserve(labels.queries.size());
  for (const auto& q : labels.queries) {
    MatrixXd block(static_cast<Eigen::Index>(poi_ids.size()), schema.dim());
    for (std::size_t i = 0; i < poi_ids.size(); ++i) {
      block.row(static_cast<Eigen::Index>(i)) =
          query_features(poi_ids[i], q, pois, stats, clusters, schema);
    }
    features.push_back(std::move(block));
  }
  return train_rank_model(labels, features, poi_ids, schema, C, diagnostics);
}

double score(const RankModel& model, const VectorXd& raw_features) {
  if (raw_features.size() != model.schema.dim()) {
    throw ValidationError("score: feature dimension does not match schema");
  }
  return model.w.dot(model.scaler.apply(raw_features));
}

std::map<int, double> rank_probabilities(const std::map<int, double>& scores) {
  if (scores.empty()) throw ValidationError("rank_probabilities: empty score map");
  double max_score = -std::numeric_limits<double>::infinity();
  for (const auto& [id, s] : scores) {
    if (!std::isfinite(s)) throw ValidationError("rank_probabilities: non-finite score");
    max_score = std::max(max_score, s);
  }
  double total = 0.0;
  std::map<int, double> out;
  for (const auto& [id, s] : scores) {
    const double e = std::exp(s - max_score);
    out[id] = e;
    total += e;
  }
  for (auto& [id, p] : out) p /= total;
  return out;
}

VectorXd log_softmax(const VectorXd& scores) {
  if (scores.size() == 0) throw ValidationError("log_softmax: empty vector");
  const double m = scores.maxCoeff();
  const double lse = std::log((scores.array() - m).exp().sum());
  return scores.array() - m - lse;
}

}  // namespace tourkit
