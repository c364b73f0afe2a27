#include "tourkit/route.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <queue>

namespace tourkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Preference shared by every decoder: higher objective wins; exact ties go to
// the sequence with the smaller poi id at the latest differing position,
// matching the walk Viterbi reconstructs when each argmax prefers the smaller
// predecessor.
bool preferred(double obj_a, const std::vector<int>& seq_a, double obj_b,
               const std::vector<int>& seq_b) {
  if (obj_a != obj_b) return obj_a > obj_b;
  for (int i = static_cast<int>(seq_a.size()) - 1; i >= 0; --i) {
    if (seq_a[i] != seq_b[i]) return seq_a[i] < seq_b[i];
  }
  return false;
}

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : all_algorithms()) {
    if (algorithm_name(a) == name) return a;
  }
  std::string valid;
  for (Algorithm a : all_algorithms()) {
    if (!valid.empty()) valid += ", ";
    valid += algorithm_name(a);
  }
  throw ValidationError("unknown algorithm '" + name + "' (valid: " + valid + ")");
}

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kRandom: return "Random";
    case Algorithm::kPoiPopularity: return "PoiPopularity";
    case Algorithm::kPoiRank: return "PoiRank";
    case Algorithm::kMarkov: return "Markov";
    case Algorithm::kMarkovPath: return "MarkovPath";
    case Algorithm::kRankMarkov: return "Rank+Markov";
    case Algorithm::kRankMarkovPath: return "Rank+MarkovPath";
  }
  throw ValidationError("unknown algorithm value");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> algorithms = {
      Algorithm::kRandom,     Algorithm::kPoiPopularity, Algorithm::kPoiRank,
      Algorithm::kMarkov,     Algorithm::kMarkovPath,    Algorithm::kRankMarkov,
      Algorithm::kRankMarkovPath};
  return algorithms;
}

EdgeScoreTable::EdgeScoreTable(std::vector<int> poi_ids, VectorXd node_log, MatrixXd edge_log,
                               double alpha)
    : poi_ids_(std::move(poi_ids)),
      node_log_(std::move(node_log)),
      edge_log_(std::move(edge_log)),
      alpha_(alpha) {
  const auto n = static_cast<Eigen::Index>(poi_ids_.size());
  if (n == 0) throw ValidationError("edge scores: empty POI list");
  if (!std::is_sorted(poi_ids_.begin(), poi_ids_.end()) ||
      std::adjacent_find(poi_ids_.begin(), poi_ids_.end()) != poi_ids_.end()) {
    throw ValidationError("edge scores: poi ids must be strictly ascending");
  }
  if (node_log_.size() != n || edge_log_.rows() != n || edge_log_.cols() != n) {
    throw ValidationError("edge scores: dimension mismatch");
  }
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw ValidationError("alpha must be in [0, 1]");
}

std::size_t EdgeScoreTable::index_of(int poi_id) const {
  auto it = std::lower_bound(poi_ids_.begin(), poi_ids_.end(), poi_id);
  if (it == poi_ids_.end() || *it != poi_id) {
    throw ReferentialError("unknown poi id " + std::to_string(poi_id));
  }
  return static_cast<std::size_t>(it - poi_ids_.begin());
}

EdgeScoreTable make_edge_scores(const PoiTable& pois, const PoiStatsMap& stats,
                                const ClusterAssignment& clusters, const RankModel* rank,
                                const TransitionModel& transition, const Query& q, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must be in [0, 1]");
  validate_query(q, pois);
  const std::vector<int> ids = transition.poi_ids;
  const auto n = static_cast<Eigen::Index>(ids.size());

  VectorXd node = VectorXd::Zero(n);
  if (alpha > 0.0) {
    if (rank == nullptr) throw ValidationError("algorithm requires a ranking model");
    VectorXd scores(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      scores(i) = score(*rank, query_features(ids[static_cast<std::size_t>(i)], q, pois, stats,
                                              clusters, rank->schema));
    }
    node = log_softmax(scores);
  }
  return EdgeScoreTable(ids, std::move(node), transition.log_p, alpha);
}

RouteResult viterbi(const EdgeScoreTable& scores, const Query& q) {
  if (q.length < 2) throw ValidationError("viterbi: length must be at least 2");
  const auto start = Clock::now();
  const int n = scores.size();
  const int s = static_cast<int>(scores.index_of(q.start));
  const int e = static_cast<int>(scores.index_of(q.end));
  if (q.start == q.end) throw ValidationError("viterbi: start and end must differ");
  const int L = q.length;

  // best[p] = max score of a partial walk with l visits ending at p;
  // back[l][p] = dense index of its predecessor.
  VectorXd best(n);
  std::vector<std::vector<int>> back(static_cast<std::size_t>(L) + 1, std::vector<int>(n, -1));
  std::uint64_t expanded = 0;
  for (int p = 0; p < n; ++p) {
    best(p) = scores.step_score(s, p);
    back[2][p] = s;
  }
  for (int l = 2; l <= L - 1; ++l) {
    VectorXd next = VectorXd::Constant(n, kForbiddenLog);
    for (int p = 0; p < n; ++p) {
      double top = kForbiddenLog;
      int arg = -1;
      for (int prev = 0; prev < n; ++prev) {
        if (is_forbidden(best(prev))) continue;
        const double step = scores.step_score(prev, p);
        if (is_forbidden(step)) continue;
        const double value = best(prev) + step;
        ++expanded;
        if (arg == -1 || value > top) {
          top = value;
          arg = prev;
        }
      }
      next(p) = arg == -1 ? kForbiddenLog : top;
      back[l + 1][p] = arg;
    }
    best = next;
  }

  if (is_forbidden(best(e))) throw InfeasibleError("viterbi: no feasible walk");

  std::vector<int> sequence(static_cast<std::size_t>(L));
  int p = e;
  for (int l = L; l >= 2; --l) {
    sequence[static_cast<std::size_t>(l - 1)] = scores.poi_ids()[p];
    p = back[l][p];
  }
  sequence[0] = scores.poi_ids()[s];

  RouteResult result;
  result.sequence = std::move(sequence);
  result.objective = best(e);
  result.nodes_expanded = expanded;
  result.wall_seconds = seconds_since(start);
  return result;
}

RouteResult brute_force_walk(const EdgeScoreTable& scores, const Query& q) {
  if (q.length < 2) throw ValidationError("brute_force_walk: length must be at least 2");
  if (q.start == q.end) throw ValidationError("brute_force_walk: start and end must differ");
  const auto start = Clock::now();
  const int n = scores.size();
  const int L = q.length;

  double combos = 1.0;
  for (int i = 0; i < L - 2; ++i) combos *= n;
  if (combos > 1e7) throw GuardError("brute_force_walk: instance exceeds enumeration guard");

  const int s = static_cast<int>(scores.index_of(q.start));
  const int e = static_cast<int>(scores.index_of(q.end));

  std::vector<int> walk(static_cast<std::size_t>(L));
  walk.front() = s;
  walk.back() = e;
  std::vector<int> mids(static_cast<std::size_t>(std::max(0, L - 2)), 0);

  bool found = false;
  double best_obj = 0.0;
  std::vector<int> best_seq;
  std::uint64_t expanded = 0;

  while (true) {
    for (int i = 0; i < L - 2; ++i) walk[static_cast<std::size_t>(i + 1)] = mids[i];
    ++expanded;
    double obj = 0.0;
    bool feasible = true;
    for (int k = 0; k + 1 < L; ++k) {
      const double step = scores.step_score(walk[k], walk[k + 1]);
      if (is_forbidden(step)) {
        feasible = false;
        break;
      }
      obj += step;
    }
    if (feasible) {
      std::vector<int> seq(static_cast<std::size_t>(L));
      for (int k = 0; k < L; ++k) seq[k] = scores.poi_ids()[walk[k]];
      if (!found || preferred(obj, seq, best_obj, best_seq)) {
        found = true;
        best_obj = obj;
        best_seq = std::move(seq);
      }
    }
    // Advance the odometer over intermediate positions.
    int d = static_cast<int>(mids.size()) - 1;
    while (d >= 0 && mids[d] == n - 1) {
      mids[d] = 0;
      --d;
    }
    if (d < 0) break;
    ++mids[d];
  }

  if (!found) throw InfeasibleError("brute_force_walk: no feasible walk");
  RouteResult result;
  result.sequence = std::move(best_seq);
  result.objective = best_obj;
  result.nodes_expanded = expanded;
  result.wall_seconds = seconds_since(start);
  return result;
}

namespace {

struct PathNode {
  double bound;
  double score;
  std::vector<int> path;  // dense indices, starts at s
};

struct PathNodeOrder {
  bool operator()(const PathNode& a, const PathNode& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
    if (a.score != b.score) return a.score < b.score;
    return a.path > b.path;
  }
};

// Admissible upper bound on the completion of a partial path: the forced
// final step into the end POI takes its best incoming score, and each of the
// other remaining slots takes the best incoming score among unvisited POIs.
// Returns the forbidden sentinel when no completion can exist.
double completion_bound(const std::vector<double>& colmax, const std::vector<bool>& visited,
                        int end_index, int remaining) {
  double bound = 0.0;
  if (is_forbidden(colmax[end_index])) return kForbiddenLog;
  bound += colmax[end_index];
  if (remaining == 1) return bound;
  std::vector<double> candidates;
  for (std::size_t p = 0; p < visited.size(); ++p) {
    if (visited[p] || static_cast<int>(p) == end_index) continue;
    if (!is_forbidden(colmax[p])) candidates.push_back(colmax[p]);
  }
  if (static_cast<int>(candidates.size()) < remaining - 1) return kForbiddenLog;
  std::nth_element(candidates.begin(), candidates.begin() + (remaining - 2), candidates.end(),
                   std::greater<double>());
  for (int i = 0; i < remaining - 1; ++i) bound += candidates[static_cast<std::size_t>(i)];
  return bound;
}

constexpr double kBoundSlack = 1e-9;

}  // namespace

RouteResult solve_path(const EdgeScoreTable& scores, const Query& q, double timeout_secs) {
  if (q.length < 2) throw ValidationError("solve_path: length must be at least 2");
  if (q.start == q.end) throw ValidationError("solve_path: start and end must differ");
  const int n = scores.size();
  if (q.length > n) throw ValidationError("solve_path: length exceeds number of POIs");
  const auto start_time = Clock::now();
  const int s = static_cast<int>(scores.index_of(q.start));
  const int e = static_cast<int>(scores.index_of(q.end));
  const int L = q.length;

  std::vector<double> colmax(static_cast<std::size_t>(n), kForbiddenLog);
  for (int p = 0; p < n; ++p) {
    double top = kForbiddenLog;
    for (int from = 0; from < n; ++from) {
      if (from == p) continue;
      const double step = scores.step_score(from, p);
      if (!is_forbidden(step) && (is_forbidden(top) || step > top)) top = step;
    }
    colmax[static_cast<std::size_t>(p)] = top;
  }

  std::uint64_t expanded = 0;
  bool found = false;
  double inc_obj = 0.0;
  std::vector<int> inc_path;  // dense indices

  auto to_sequence = [&](const std::vector<int>& path) {
    std::vector<int> seq;
    seq.reserve(path.size());
    for (int idx : path) seq.push_back(scores.poi_ids()[idx]);
    return seq;
  };

  auto offer = [&](double obj, const std::vector<int>& path) {
    if (!found || preferred(obj, to_sequence(path), inc_obj, to_sequence(inc_path))) {
      found = true;
      inc_obj = obj;
      inc_path = path;
    }
  };

  // Cheap depth-first dive to seed the incumbent before the clocked search.
  {
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    std::vector<int> path = {s};
    visited[static_cast<std::size_t>(s)] = true;
    std::uint64_t budget = 4096;
    std::function<bool(double)> dive = [&](double score_so_far) -> bool {
      if (budget == 0) return true;
      --budget;
      const int v = path.back();
      const int len = static_cast<int>(path.size());
      if (len == L - 1) {
        const double step = scores.step_score(v, e);
        if (!is_forbidden(step)) {
          path.push_back(e);
          offer(score_so_far + step, path);
          path.pop_back();
          return true;
        }
        return false;
      }
      std::vector<std::pair<double, int>> options;
      for (int p = 0; p < n; ++p) {
        if (visited[static_cast<std::size_t>(p)] || p == e) continue;
        const double step = scores.step_score(v, p);
        if (!is_forbidden(step)) options.emplace_back(step, p);
      }
      std::sort(options.begin(), options.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      for (const auto& [step, p] : options) {
        path.push_back(p);
        visited[static_cast<std::size_t>(p)] = true;
        const bool done = dive(score_so_far + step);
        visited[static_cast<std::size_t>(p)] = false;
        path.pop_back();
        if (done) return true;
      }
      return false;
    };
    dive(0.0);
  }

  std::priority_queue<PathNode, std::vector<PathNode>, PathNodeOrder> queue;
  {
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    visited[static_cast<std::size_t>(s)] = true;
    const double bound = completion_bound(colmax, visited, e, L - 1);
    if (!is_forbidden(bound)) queue.push(PathNode{bound, 0.0, {s}});
  }

  while (!queue.empty()) {
    PathNode node = queue.top();
    queue.pop();
    ++expanded;
    if (timeout_secs >= 0.0 && seconds_since(start_time) > timeout_secs) {
      std::optional<RouteResult> best;
      if (found) {
        RouteResult r;
        r.sequence = to_sequence(inc_path);
        r.objective = inc_obj;
        r.nodes_expanded = expanded;
        r.wall_seconds = seconds_since(start_time);
        best = std::move(r);
      }
      throw RouteTimeoutError(std::move(best));
    }
    if (found && node.bound < inc_obj - kBoundSlack) break;

    const int v = node.path.back();
    const int len = static_cast<int>(node.path.size());
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    for (int idx : node.path) visited[static_cast<std::size_t>(idx)] = true;

    if (len == L - 1) {
      const double step = scores.step_score(v, e);
      if (!is_forbidden(step)) {
        std::vector<int> complete = node.path;
        complete.push_back(e);
        offer(node.score + step, complete);
      }
      continue;
    }

    for (int p = 0; p < n; ++p) {
      if (visited[static_cast<std::size_t>(p)] || p == e) continue;
      const double step = scores.step_score(v, p);
      if (is_forbidden(step)) continue;
      const double child_score = node.score + step;
      visited[static_cast<std::size_t>(p)] = true;
      const double completion = completion_bound(colmax, visited, e, L - len - 1);
      visited[static_cast<std::size_t>(p)] = false;
      if (is_forbidden(completion)) continue;
      const double child_bound = child_score + completion;
      if (found && child_bound < inc_obj - kBoundSlack) continue;
      PathNode child;
      child.bound = child_bound;
      child.score = child_score;
      child.path = node.path;
      child.path.push_back(p);
      queue.push(std::move(child));
    }
  }

  if (!found) throw InfeasibleError("solve_path: no feasible simple path");
  RouteResult result;
  result.sequence = to_sequence(inc_path);
  result.objective = inc_obj;
  result.nodes_expanded = expanded;
  result.wall_seconds = seconds_since(start_time);
  return result;
}

RouteResult brute_force_path(const EdgeScoreTable& scores, const Query& q) {
  if (q.length < 2) throw ValidationError("brute_force_path: length must be at least 2");
  if (q.start == q.end) throw ValidationError("brute_force_path: start and end must differ");
  const int n = scores.size();
  if (q.length > n) throw ValidationError("brute_force_path: length exceeds number of POIs");
  const auto start_time = Clock::now();
  const int L = q.length;

  double paths_bound = 1.0;
  for (int i = 0; i < L - 2; ++i) paths_bound *= std::max(1, n - 2 - i);
  if (paths_bound > 1e7) throw GuardError("brute_force_path: instance exceeds enumeration guard");

  const int s = static_cast<int>(scores.index_of(q.start));
  const int e = static_cast<int>(scores.index_of(q.end));

  bool found = false;
  double best_obj = 0.0;
  std::vector<int> best_seq;
  std::uint64_t expanded = 0;

  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  std::vector<int> path = {s};
  visited[static_cast<std::size_t>(s)] = true;

  std::function<void(double)> dfs = [&](double score_so_far) {
    ++expanded;
    const int v = path.back();
    const int len = static_cast<int>(path.size());
    if (len == L - 1) {
      const double step = scores.step_score(v, e);
      if (is_forbidden(step)) return;
      const double obj = score_so_far + step;
      std::vector<int> seq;
      seq.reserve(path.size() + 1);
      for (int idx : path) seq.push_back(scores.poi_ids()[idx]);
      seq.push_back(scores.poi_ids()[e]);
      if (!found || preferred(obj, seq, best_obj, best_seq)) {
        found = true;
        best_obj = obj;
        best_seq = std::move(seq);
      }
      return;
    }
    for (int p = 0; p < n; ++p) {
      if (visited[static_cast<std::size_t>(p)] || p == e) continue;
      const double step = scores.step_score(v, p);
      if (is_forbidden(step)) continue;
      path.push_back(p);
      visited[static_cast<std::size_t>(p)] = true;
      dfs(score_so_far + step);
      visited[static_cast<std::size_t>(p)] = false;
      path.pop_back();
    }
  };
  dfs(0.0);

  if (!found) throw InfeasibleError("brute_force_path: no feasible simple path");
  RouteResult result;
  result.sequence = std::move(best_seq);
  result.objective = best_obj;
  result.nodes_expanded = expanded;
  result.wall_seconds = seconds_since(start_time);
  return result;
}

namespace {

RouteResult sequence_result(const Query& q, std::vector<int> intermediates) {
  RouteResult result;
  result.sequence.push_back(q.start);
  for (int id : intermediates) result.sequence.push_back(id);
  result.sequence.push_back(q.end);
  result.objective = std::numeric_limits<double>::quiet_NaN();
  return result;
}

}  // namespace

RouteResult recommend(Algorithm algorithm, const ModelSet& models, const Query& q,
                      const RouteConfig& config) {
  if (models.pois == nullptr) throw ValidationError("recommend: POI table required");
  validate_query(q, *models.pois);
  const int n_intermediate = q.length - 2;

  std::vector<int> candidates;
  for (int id : models.pois->sorted_ids()) {
    if (id != q.start && id != q.end) candidates.push_back(id);
  }

  switch (algorithm) {
    case Algorithm::kRandom: {
      Rng rng(substream_seed(config.rng_seed, "recommend/random"));
      std::vector<int> pool = candidates;
      std::vector<int> picked;
      for (int i = 0; i < n_intermediate; ++i) {
        const std::size_t j = rng.next_below(pool.size());
        picked.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      }
      return sequence_result(q, std::move(picked));
    }
    case Algorithm::kPoiPopularity: {
      if (models.stats == nullptr) throw ValidationError("PoiPopularity requires POI statistics");
      std::vector<int> order = candidates;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double pa = stats_for(*models.stats, a).popularity;
        const double pb = stats_for(*models.stats, b).popularity;
        return pa != pb ? pa > pb : a < b;
      });
      order.resize(static_cast<std::size_t>(n_intermediate));
      return sequence_result(q, std::move(order));
    }
    case Algorithm::kPoiRank: {
      if (models.rank == nullptr || models.stats == nullptr || models.clusters == nullptr) {
        throw ValidationError("PoiRank requires ranking model, statistics and clusters");
      }
      std::vector<std::pair<double, int>> scored;
      for (int id : candidates) {
        const VectorXd phi = query_features(id, q, *models.pois, *models.stats, *models.clusters,
                                            models.rank->schema);
        scored.emplace_back(score(*models.rank, phi), id);
      }
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      std::vector<int> picked;
      for (int i = 0; i < n_intermediate; ++i) picked.push_back(scored[static_cast<std::size_t>(i)].second);
      return sequence_result(q, std::move(picked));
    }
    case Algorithm::kMarkov:
    case Algorithm::kMarkovPath:
    case Algorithm::kRankMarkov:
    case Algorithm::kRankMarkovPath: {
      if (models.transition == nullptr || models.stats == nullptr || models.clusters == nullptr) {
        throw ValidationError(algorithm_name(algorithm) +
                              " requires a transition model, statistics and clusters");
      }
      const bool uses_rank =
          algorithm == Algorithm::kRankMarkov || algorithm == Algorithm::kRankMarkovPath;
      const double alpha = uses_rank ? config.alpha : 0.0;
      const EdgeScoreTable table = make_edge_scores(*models.pois, *models.stats, *models.clusters,
                                                    uses_rank ? models.rank : nullptr,
                                                    *models.transition, q, alpha);
      if (algorithm == Algorithm::kMarkov || algorithm == Algorithm::kRankMarkov) {
        return viterbi(table, q);
      }
      return solve_path(table, q, config.timeout_secs);
    }
  }
  throw ValidationError("unknown algorithm value");
}

}  // namespace tourkit
