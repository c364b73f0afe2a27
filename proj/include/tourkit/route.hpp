#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "tourkit/ranking.hpp"
#include "tourkit/transition.hpp"

namespace tourkit {

enum class Algorithm {
  kRandom,
  kPoiPopularity,
  kPoiRank,
  kMarkov,
  kMarkovPath,
  kRankMarkov,
  kRankMarkovPath,
};

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm algorithm);
const std::vector<Algorithm>& all_algorithms();

struct RouteConfig {
  double alpha = 0.5;  // trade-off between point ranking and transitions
  std::uint64_t rng_seed = 0;
  double timeout_secs = 120.0;
};

struct RouteResult {
  std::vector<int> sequence;  // poi ids, sequence.front() == start, back() == end
  double objective = 0.0;
  std::uint64_t nodes_expanded = 0;
  double wall_seconds = 0.0;
};

/// Raised by solve_path when the wall-clock budget runs out; carries the best
/// feasible route found so far, if any.
struct RouteTimeoutError : Error {
  explicit RouteTimeoutError(std::optional<RouteResult> best)
      : Error("path search timed out"), incumbent(std::move(best)) {}
  std::optional<RouteResult> incumbent;
};

/// Per-query decoding scores: a node term log P_R(p | q) for every POI and an
/// edge term log P(p | p') for every ordered pair, combined as
///
///   S(p; p', q) = alpha * log P_R(p | q) + (1 - alpha) * log P(p | p').
///
/// Forbidden transitions (sentinel edge entries) stay forbidden at any alpha.
class EdgeScoreTable {
 public:
  EdgeScoreTable(std::vector<int> poi_ids, VectorXd node_log, MatrixXd edge_log, double alpha);

  int size() const { return static_cast<int>(poi_ids_.size()); }
  const std::vector<int>& poi_ids() const { return poi_ids_; }
  std::size_t index_of(int poi_id) const;

  double node_log(int to_index) const { return node_log_(to_index); }
  double edge_log(int from_index, int to_index) const { return edge_log_(from_index, to_index); }
  double alpha() const { return alpha_; }

  /// Combined score for stepping from `from` to `to` (dense indices).
  double step_score(int from_index, int to_index) const {
    const double e = edge_log_(from_index, to_index);
    if (is_forbidden(e)) return kForbiddenLog;
    return alpha_ * node_log_(to_index) + (1.0 - alpha_) * e;
  }

 private:
  std::vector<int> poi_ids_;  // ascending
  VectorXd node_log_;
  MatrixXd edge_log_;
  double alpha_;
};

EdgeScoreTable make_edge_scores(const PoiTable& pois, const PoiStatsMap& stats,
                                const ClusterAssignment& clusters, const RankModel* rank,
                                const TransitionModel& transition, const Query& q, double alpha);

// ---------------------------------------------------------------------------
// Decoders. All four break objective ties toward the sequence whose POI ids
// are smallest read from the end backwards, which is exactly the walk the
// Viterbi recursion reconstructs when each argmax prefers the smaller
// predecessor id.
// ---------------------------------------------------------------------------

/// Dynamic-programming argmax over walks of length q.length from start to
/// end. Walks may revisit POIs.
RouteResult viterbi(const EdgeScoreTable& scores, const Query& q);

/// Exhaustive walk enumeration; refuses when |P|^(L-2) exceeds 1e7.
RouteResult brute_force_walk(const EdgeScoreTable& scores, const Query& q);

/// Exact argmax over simple paths (each POI at most once, no sub-tours) with
/// the required endpoints and length, via best-first branch and bound with an
/// admissible per-step bound. Requires L <= |P|.
RouteResult solve_path(const EdgeScoreTable& scores, const Query& q, double timeout_secs = 120.0);

/// Exhaustive simple-path enumeration; refuses when the path count bound
/// exceeds 1e7.
RouteResult brute_force_path(const EdgeScoreTable& scores, const Query& q);

// ---------------------------------------------------------------------------
// Algorithm dispatch
// ---------------------------------------------------------------------------

/// Immutable views of whatever models an algorithm requires; absent models
/// are null.
struct ModelSet {
  const PoiTable* pois = nullptr;
  const PoiStatsMap* stats = nullptr;
  const ClusterAssignment* clusters = nullptr;
  const RankModel* rank = nullptr;
  const TransitionModel* transition = nullptr;
};

RouteResult recommend(Algorithm algorithm, const ModelSet& models, const Query& q,
                      const RouteConfig& config);

}  // namespace tourkit
