#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "tourkit/transition.hpp"

using namespace tourkit;
using tourkit::testing::grid_pois;
using tourkit::testing::make_trajectory;

TEST_CASE("fit_feature_transition applies epsilon smoothing") {
  auto identity_state = [](int poi) { return poi; };

  SUBCASE("no trajectories: pure smoothing gives uniform rows") {
    const auto ft = fit_feature_transition({}, identity_state, 2, 1.0);
    CHECK(ft.matrix(0, 0) == doctest::Approx(0.5));
    CHECK(ft.matrix(0, 1) == doctest::Approx(0.5));
    CHECK(ft.matrix(1, 0) == doctest::Approx(0.5));
    CHECK(ft.matrix(1, 1) == doctest::Approx(0.5));
  }

  SUBCASE("category sequence (X, Y, X) with two states") {
    // Counts: X->Y once, Y->X once; epsilon 1 in every cell.
    const auto ft =
        fit_feature_transition({make_trajectory("u", 1, {0, 1, 0})}, identity_state, 2, 1.0);
    CHECK(ft.matrix(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(ft.matrix(0, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(ft.matrix(1, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(ft.matrix(1, 1) == doctest::Approx(1.0 / 3.0));
  }

  SUBCASE("rows sum to one on random inputs") {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
      const int n_states = 2 + static_cast<int>(rng.next_below(5));
      std::vector<Trajectory> trajs;
      for (int t = 0; t < 5; ++t) {
        std::vector<int> seq;
        const int len = 2 + static_cast<int>(rng.next_below(6));
        int prev = -1;
        for (int k = 0; k < len; ++k) {
          int next = static_cast<int>(rng.next_below(n_states));
          if (next == prev) next = (next + 1) % n_states;
          seq.push_back(next);
          prev = next;
        }
        trajs.push_back(make_trajectory("u", t, seq));
      }
      const auto ft = fit_feature_transition(trajs, identity_state, n_states,
                                             rng.next_in(0.1, 2.0));
      for (Eigen::Index r = 0; r < ft.matrix.rows(); ++r) {
        CHECK(ft.matrix.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
        for (Eigen::Index c = 0; c < ft.matrix.cols(); ++c) CHECK(ft.matrix(r, c) > 0.0);
      }
    }
  }

  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(fit_feature_transition({}, identity_state, 0, 1.0), ValidationError);
    CHECK_THROWS_AS(fit_feature_transition({}, identity_state, 2, 0.0), ValidationError);
  }
}

TEST_CASE("kronecker product") {
  SUBCASE("identity times identity") {
    const MatrixXd i2 = MatrixXd::Identity(2, 2);
    CHECK(kronecker(i2, i2) == MatrixXd::Identity(4, 4));
  }

  SUBCASE("scalar matrix scales the other operand") {
    MatrixXd a(1, 1);
    a(0, 0) = 3.5;
    MatrixXd m(2, 2);
    m << 1, 2, 3, 4;
    CHECK(kronecker(a, m) == (3.5 * m).eval());
  }

  SUBCASE("block structure of I2 (x) M") {
    MatrixXd m(2, 2);
    m << 0.2, 0.8, 0.6, 0.4;
    const MatrixXd k = kronecker(MatrixXd::Identity(2, 2), m);
    REQUIRE(k.rows() == 4);
    CHECK(k.block(0, 0, 2, 2) == m);
    CHECK(k.block(2, 2, 2, 2) == m);
    CHECK(k.block(0, 2, 2, 2).isZero(0.0));
    CHECK(k.block(2, 0, 2, 2).isZero(0.0));
  }

  SUBCASE("list form is left-associated") {
    MatrixXd a(2, 2), b(2, 2), c(2, 2);
    a << 1, 2, 3, 4;
    b << 0, 1, 1, 0;
    c << 2, 0, 0, 2;
    CHECK(kronecker({a, b, c}) == kronecker(kronecker(a, b), c));
    CHECK_THROWS_AS(kronecker(std::vector<MatrixXd>{}), ValidationError);
  }
}

namespace {

// Dataset where every POI occupies its own feature combination: 4 POIs with
// distinct categories, far enough apart that k=4 clustering isolates them.
struct DistinctStateFixture {
  PoiTable pois;
  std::vector<Trajectory> trajectories;
  PoiStatsMap stats;
  ClusterAssignment clusters;
  TransitionDiscretizers discretizers;

  DistinctStateFixture()
      : pois(PoiTable::from_rows({{0, "", 10.0, 10.0, "a"},
                                  {1, "", 20.0, 20.0, "b"},
                                  {2, "", 30.0, 30.0, "c"},
                                  {3, "", 40.0, 40.0, "d"}})) {
    trajectories = {make_trajectory("u1", 1, {0, 1, 2}), make_trajectory("u2", 2, {1, 3}),
                    make_trajectory("u3", 3, {2, 0, 3})};
    stats = compute_stats(trajectories);
    clusters = kmeans(pois, 4, 3);
    discretizers = fit_transition_discretizers(pois, stats);
  }
};

}  // namespace

TEST_CASE("build_transition_model with all POIs in distinct states") {
  DistinctStateFixture fx;
  const TransitionModel model =
      build_transition_model(fx.trajectories, fx.pois, fx.stats, fx.clusters, fx.discretizers, 1.0);

  SUBCASE("rows are stochastic and the diagonal is forbidden") {
    for (Eigen::Index i = 0; i < model.log_p.rows(); ++i) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < model.log_p.cols(); ++j) {
        if (i == j) {
          CHECK(is_forbidden(model.log_p(i, j)));
        } else {
          sum += std::exp(model.log_p(i, j));
        }
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("matches the explicit kronecker route") {
    // With every POI in its own state, the POI matrix is the Kronecker joint,
    // restricted to occupied states, diagonal zeroed, rows renormalized.
    std::vector<MatrixXd> mats;
    for (const auto& f : model.features) mats.push_back(f.matrix);
    const MatrixXd joint = kronecker(mats);

    const int n = static_cast<int>(fx.pois.size());
    std::vector<int> radices;
    for (const auto& f : model.features) radices.push_back(static_cast<int>(f.matrix.rows()));
    auto joint_index = [&](int poi_id) {
      const auto& state = model.poi_state.at(poi_id);
      int idx = 0;
      for (int f = 0; f < kTransitionFeatures; ++f) idx = idx * radices[f] + state[f];
      return idx;
    };

    for (int i = 0; i < n; ++i) {
      VectorXd row = VectorXd::Zero(n);
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        row(j) = joint(joint_index(model.poi_ids[i]), joint_index(model.poi_ids[j]));
      }
      row /= row.sum();
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        CHECK(std::exp(model.log_p(i, j)) == doctest::Approx(row(j)).epsilon(1e-12));
      }
    }
  }

  SUBCASE("log_transition accessors") {
    CHECK(is_forbidden(log_transition(model, 2, 2)));
    CHECK_THROWS_AS(log_transition(model, 99, 0), ReferentialError);
    // logsumexp over each row is 0.
    for (int from : model.poi_ids) {
      double sum = 0.0;
      for (int to : model.poi_ids) {
        if (to != from) sum += std::exp(log_transition(model, from, to));
      }
      CHECK(std::log(sum) == doctest::Approx(0.0).epsilon(1e-9));
    }
  }

  SUBCASE("deterministic given identical inputs") {
    const TransitionModel again = build_transition_model(fx.trajectories, fx.pois, fx.stats,
                                                         fx.clusters, fx.discretizers, 1.0);
    CHECK(model.log_p == again.log_p);
  }
}

TEST_CASE("build_transition_model shares mass inside a state group") {
  // Two POIs with identical features (same category, same location, same
  // statistics) and one distinct POI. Categories are the only informative
  // feature: clusters use k=1 and all statistics are equal so every bin
  // discretizer is degenerate.
  const PoiTable pois = PoiTable::from_rows(
      {{0, "", 10.0, 10.0, "a"}, {1, "", 10.0, 10.0, "a"}, {2, "", 30.0, 30.0, "b"}});
  // Every POI visited once by the same user with equal durations.
  std::vector<Trajectory> trajs = {make_trajectory("u", 1, {0, 2, 1})};
  const auto stats = compute_stats(trajs);
  const auto clusters = kmeans(pois, 1, 0);
  const auto discretizers = fit_transition_discretizers(pois, stats);
  REQUIRE(discretizers.popularity.degenerate());
  REQUIRE(discretizers.n_visit.degenerate());
  REQUIRE(discretizers.avg_duration.degenerate());

  const TransitionModel model =
      build_transition_model(trajs, pois, stats, clusters, discretizers, 1.0);

  // Category transitions (2 states, counts a->b: 1, b->a: 1, epsilon 1):
  //   row a = (1/3, 2/3), row b = (2/3, 1/3).
  // All other features are single-state with probability 1, so the joint over
  // occupied states {a, b} equals the category matrix. Group {0, 1} holds two
  // POIs: the self-loop mass 1/3 moves wholly to the other member (M-1 = 1),
  // while 0 -> 2 keeps the full outgoing 2/3 (group {2} has M = 1).
  const auto& cat = model.features[0].matrix;
  CHECK(cat(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(cat(0, 1) == doctest::Approx(2.0 / 3.0));

  const double p01 = std::exp(log_transition(model, 0, 1));
  const double p02 = std::exp(log_transition(model, 0, 2));
  CHECK(p01 == doctest::Approx((1.0 / 3.0) / (1.0 / 3.0 + 2.0 / 3.0)).epsilon(1e-12));
  CHECK(p02 == doctest::Approx((2.0 / 3.0) / (1.0 / 3.0 + 2.0 / 3.0)).epsilon(1e-12));

  // Incoming mass into the group splits between its members: from POI 2 the
  // unnormalized mass to each of {0, 1} is (2/3) / 2, and the group self-loop
  // of state b is dropped because the group is a singleton.
  const double p20 = std::exp(log_transition(model, 2, 0));
  const double p21 = std::exp(log_transition(model, 2, 1));
  CHECK(p20 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p21 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("two-POI dataset forces probability one") {
  const PoiTable pois =
      PoiTable::from_rows({{0, "", 10.0, 10.0, "a"}, {1, "", 20.0, 20.0, "b"}});
  std::vector<Trajectory> trajs = {make_trajectory("u", 1, {0, 1})};
  const auto stats = compute_stats(trajs);
  const auto clusters = kmeans(pois, 2, 0);
  const auto discretizers = fit_transition_discretizers(pois, stats);
  const TransitionModel model =
      build_transition_model(trajs, pois, stats, clusters, discretizers, 1.0);
  CHECK(log_transition(model, 0, 1) == doctest::Approx(0.0));
  CHECK(log_transition(model, 1, 0) == doctest::Approx(0.0));
  CHECK(is_forbidden(log_transition(model, 0, 0)));
}

TEST_CASE("single POI cannot form a transition model") {
  const PoiTable pois = PoiTable::from_rows({{0, "", 10.0, 10.0, "a"}});
  const auto stats = compute_stats({});
  const auto clusters = kmeans(pois, 1, 0);
  const auto discretizers = fit_transition_discretizers(pois, stats);
  CHECK_THROWS_AS(build_transition_model({}, pois, stats, clusters, discretizers, 1.0),
                  ValidationError);
}

TEST_CASE("huge smoothing drives the POI matrix to uniform off-diagonal") {
  DistinctStateFixture fx;
  const TransitionModel model = build_transition_model(fx.trajectories, fx.pois, fx.stats,
                                                       fx.clusters, fx.discretizers, 1e9);
  const int n = static_cast<int>(fx.pois.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      CHECK(std::exp(model.log_p(i, j)) ==
            doctest::Approx(1.0 / (n - 1)).epsilon(1e-6));
    }
  }
}

TEST_CASE("transition model validity on random synthetic datasets") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SynthDataset data = synth_dataset(seed, 8 + static_cast<int>(seed % 5), 40, 4);
    const auto stats = compute_stats(data.trajectories);
    const auto clusters = kmeans(data.pois, std::min<int>(5, data.pois.size()),
                                 substream_seed(seed, "kmeans"));
    const auto discretizers = fit_transition_discretizers(data.pois, stats);
    const TransitionModel model = build_transition_model(data.trajectories, data.pois, stats,
                                                         clusters, discretizers, 1.0);
    for (Eigen::Index i = 0; i < model.log_p.rows(); ++i) {
      double sum = 0.0;
      for (Eigen::Index j = 0; j < model.log_p.cols(); ++j) {
        if (i == j) {
          CHECK(is_forbidden(model.log_p(i, j)));
        } else {
          CHECK(model.log_p(i, j) < 0.0);
          sum += std::exp(model.log_p(i, j));
        }
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}
