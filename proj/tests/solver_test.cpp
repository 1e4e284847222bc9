#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mvitcc/oracle.hpp"
#include "mvitcc/solver.hpp"
#include "support/random_instances.hpp"

namespace mvitcc {
namespace {

using testing::random_joint;
using testing::random_simplex;
using testing::uniform_size;

// Two 2x2 diagonal blocks of equal mass.
ViewJoint two_blocks() {
  return normalize(ViewMatrix::from_dense({{1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}}));
}

SolverConfig config_for(std::size_t k, std::vector<std::size_t> l, double lambda = 1.0) {
  SolverConfig c;
  c.k = k;
  c.l = std::move(l);
  c.lambda = lambda;
  return c;
}

TEST(SolverConfigTest, Validation) {
  EXPECT_NO_THROW(config_for(2, {2}).validate());
  EXPECT_THROW(config_for(0, {2}).validate(), Error);
  EXPECT_THROW(config_for(2, {0}).validate(), Error);
  EXPECT_THROW(config_for(2, {2}, 0.0).validate(), Error);
  auto c = config_for(2, {2});
  c.restarts = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(InitializeTest, FirstKRuleForcesIdentity) {
  const std::vector<ViewJoint> views{normalize(ViewMatrix::from_dense({{1, 2}, {3, 4}, {5, 6}}))};
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    auto c = config_for(3, {2});
    c.seed = seed;
    const auto s = initialize(c, views, 0);
    EXPECT_EQ(s.rows, RowAssignment::identity(3));
    EXPECT_EQ(s.cols.front(), ColumnAssignment::identity(2));
  }
}

TEST(InitializeTest, UniformWeightsAndDeterminism) {
  std::mt19937_64 gen(5);
  const std::vector<ViewJoint> views{random_joint(10, 8, gen), random_joint(10, 6, gen)};
  const auto c = config_for(3, {2, 3});
  const auto a = initialize(c, views, 4);
  const auto b = initialize(c, views, 4);
  EXPECT_EQ(a.weights, WeightVector(std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.cols, b.cols);
  EXPECT_EQ(a.trace, b.trace);
  for (std::size_t i = 0; i < views.size(); ++i) {
    EXPECT_EQ(a.losses[i], view_loss(views[i], a.summaries[i]));
  }
}

TEST(InitializeTest, InfeasibleConfiguration) {
  const std::vector<ViewJoint> views{two_blocks()};
  try {
    initialize(config_for(5, {2}), views, 0);
    FAIL() << "k > n accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasible);
  }
  EXPECT_THROW(initialize(config_for(2, {5}), views, 0), Error);
}

TEST(RowStepTest, PerturbedRowsReturnToTheirBlocks) {
  const std::vector<ViewJoint> views{two_blocks()};
  auto s = initialize_from(config_for(2, {2}), views, RowAssignment({0, 0, 0, 1}, 2),
                           {ColumnAssignment({0, 0, 1, 1}, 2)});
  // Sample 2 costs p(x) ln 3 in cluster 0 and 0 in cluster 1; the rest stay.
  const auto report = row_step(s, views);
  EXPECT_EQ(s.rows, RowAssignment({0, 0, 1, 1}, 2));
  EXPECT_EQ(report.changed, 1u);
  EXPECT_NEAR(s.losses[0], 0.0, 1e-15);
}

TEST(RowStepTest, ZeroMassSampleKeepsCluster) {
  const std::vector<ViewJoint> views{
      normalize(ViewMatrix::from_dense({{1, 0}, {0, 0}, {0, 1}, {1, 0}}))};
  auto s = initialize_from(config_for(2, {2}), views, RowAssignment({0, 1, 1, 0}, 2),
                           {ColumnAssignment({0, 1}, 2)});
  row_step(s, views);
  EXPECT_EQ(s.rows[1], 1u);
}

TEST(RowStepTest, IdenticalViewsMatchSingleView) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = random_joint(12, 9, gen);
    const std::vector<ViewJoint> one{v};
    const std::vector<ViewJoint> two{v, v};
    auto c1 = config_for(3, {3});
    c1.seed = static_cast<std::uint64_t>(trial);
    auto c2 = config_for(3, {3, 3});
    auto s1 = initialize(c1, one, 0);
    auto s2 = initialize_from(c2, two, s1.rows, {s1.cols[0], s1.cols[0]});
    row_step(s1, one);
    row_step(s2, two);
    EXPECT_EQ(s1.rows, s2.rows);
  }
}

TEST(ColumnStepTest, PerturbedColumnsReturnToTheirBlocks) {
  const std::vector<ViewJoint> views{two_blocks()};
  auto s = initialize_from(config_for(2, {2}), views, RowAssignment({0, 0, 1, 1}, 2),
                           {ColumnAssignment({0, 1, 1, 1}, 2)});
  column_step(s, views);
  EXPECT_EQ(s.cols[0], ColumnAssignment({0, 0, 1, 1}, 2));
  EXPECT_NEAR(s.losses[0], 0.0, 1e-15);
}

TEST(ColumnStepTest, ZeroColumnKeepsCluster) {
  const std::vector<ViewJoint> views{
      normalize(ViewMatrix::from_dense({{1, 0, 0}, {0, 0, 1}, {1, 0, 0}}))};
  auto s = initialize_from(config_for(2, {2}), views, RowAssignment({0, 1, 0}, 2),
                           {ColumnAssignment({0, 1, 1}, 2)});
  column_step(s, views);
  EXPECT_EQ(s.cols[0][1], 1u);
}

TEST(ColumnStepTest, ViewsAreIndependent) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_joint(10, 8, gen);
    const auto b = random_joint(10, 7, gen);
    const std::vector<ViewJoint> ab{a, b};
    const std::vector<ViewJoint> ba{b, a};
    auto cfg = config_for(3, {3, 2});
    cfg.seed = static_cast<std::uint64_t>(trial);
    auto s_ab = initialize(cfg, ab, 0);
    auto s_ba = initialize_from(config_for(3, {2, 3}), ba, s_ab.rows, {s_ab.cols[1], s_ab.cols[0]});
    column_step(s_ab, ab);
    column_step(s_ba, ba);
    EXPECT_EQ(s_ab.cols[0], s_ba.cols[1]);
    EXPECT_EQ(s_ab.cols[1], s_ba.cols[0]);
  }
}

TEST(WeightStepTest, Examples) {
  const auto equal = weight_step(std::vector<double>{1.0, 1.0}, 3.0);
  EXPECT_DOUBLE_EQ(equal[0], 0.5);
  EXPECT_DOUBLE_EQ(equal[1], 0.5);

  // e^-1 / (e^-1 + e^-2)
  const auto w = weight_step(std::vector<double>{1.0, 2.0}, 1.0);
  EXPECT_NEAR(w[0], 0.731059, 1e-6);
  EXPECT_NEAR(w[1], 0.268941, 1e-6);
  EXPECT_NEAR(w[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);

  const auto flat = weight_step(std::vector<double>{1.0, 2.0}, std::ldexp(1.0, 20));
  EXPECT_NEAR(flat[0], 0.5, 1e-3);
  EXPECT_NEAR(flat[1], 0.5, 1e-3);
}

TEST(WeightStepTest, HardLimitAndErrors) {
  const auto hard = weight_step(std::vector<double>{0.3, 0.1, 0.1}, 1e-13);
  EXPECT_EQ(hard[0], 0.0);
  EXPECT_EQ(hard[1], 0.5);
  EXPECT_EQ(hard[2], 0.5);
  try {
    weight_step(std::vector<double>{0.1, kInfinity}, 1.0);
    FAIL() << "infinite loss accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvariant);
  }
}

TEST(ObjectiveTest, Examples) {
  EXPECT_NEAR(objective(std::vector<double>{0.0, 0.0}, WeightVector::uniform(2), 1.0),
              -std::log(2.0), 1e-15);
  EXPECT_EQ(objective(std::vector<double>{0.7}, WeightVector::uniform(1), 5.0), 0.7);
  const std::vector<ViewJoint> views{two_blocks(), two_blocks()};
  auto s = initialize_from(config_for(2, {2, 2}, 1e-9), views, RowAssignment({0, 0, 1, 1}, 2),
                           {ColumnAssignment({0, 0, 1, 1}, 2), ColumnAssignment({0, 0, 1, 1}, 2)});
  EXPECT_NEAR(objective(s, 1e-9), 0.0, 1e-8);
}

TEST(IterateTest, FixedPointIsStable) {
  const std::vector<ViewJoint> views{two_blocks()};
  const auto c = config_for(2, {2});
  auto s = initialize_from(c, views, RowAssignment({0, 0, 1, 1}, 2), {ColumnAssignment({0, 0, 1, 1}, 2)});
  iterate_once(s, views, c);
  const auto rows = s.rows;
  const auto cols = s.cols;
  const double before = s.trace.back().objective;
  iterate_once(s, views, c);
  EXPECT_EQ(s.rows, rows);
  EXPECT_EQ(s.cols, cols);
  EXPECT_EQ(s.trace.back().objective, before);
}

TEST(IterateTest, TwoViewDiagonalReachesZeroLoss) {
  const auto w1 = normalize(ViewMatrix::from_dense({{2, 0}, {0, 2}}));
  const std::vector<ViewJoint> views{w1, w1};
  const auto c = config_for(2, {2, 2});
  for (std::uint32_t r = 0; r < 4; ++r) {
    for (std::uint32_t a = 0; a < 4; ++a) {
      for (std::uint32_t b = 0; b < 4; ++b) {
        const auto bits = [](std::uint32_t v) { return std::vector<std::uint32_t>{v & 1u, v >> 1}; };
        auto s = initialize_from(c, views, RowAssignment(bits(r), 2),
                                 {ColumnAssignment(bits(a), 2), ColumnAssignment(bits(b), 2)});
        run_trajectory(s, views, c);
        EXPECT_NEAR(s.losses[0], 0.0, 1e-12);
        EXPECT_NEAR(s.losses[1], 0.0, 1e-12);
        EXPECT_NEAR(objective(s, c.lambda), -std::log(2.0), 1e-12);
      }
    }
  }
  const auto r = fit(c, std::span<const ViewJoint>(views));
  EXPECT_NEAR(r.objective, -std::log(2.0), 1e-12);
}

TEST(FitTest, LoopBoundAndDefaults) {
  EXPECT_EQ(SolverConfig{}.max_iter, 20);
  EXPECT_EQ(SolverConfig{}.epsilon, 1e-6);
  EXPECT_EQ(SolverConfig{}.lambda, 1.0);
  std::mt19937_64 gen(4);
  const std::vector<ViewJoint> views{random_joint(15, 10, gen)};
  auto c = config_for(3, {2});
  c.max_iter = 1;
  c.epsilon = 0.0;
  const auto r = fit(c, std::span<const ViewJoint>(views));
  EXPECT_EQ(r.iterations, 1);
  ASSERT_EQ(r.state.trace.size(), 2u);
  EXPECT_EQ(r.state.trace[1].iteration, 1);
}

TEST(FitTest, SingleViewMatchesItccEntryPoint) {
  std::mt19937_64 gen(6);
  const auto v = random_joint(20, 12, gen);
  auto c = config_for(3, {4});
  c.seed = 17;
  c.restarts = 2;
  const auto a = fit(c, std::span<const ViewJoint>(&v, 1));
  const auto b = fit_itcc(v, 3, 4, c);
  EXPECT_EQ(a.state.rows, b.state.rows);
  EXPECT_EQ(a.state.cols, b.state.cols);
  EXPECT_EQ(a.state.trace, b.state.trace);
}

TEST(FitTest, LabelsProduceMetrics) {
  const std::vector<ViewJoint> views{normalize(ViewMatrix::from_dense({{2, 0}, {0, 2}}))};
  const std::vector<std::uint32_t> labels{1, 0};
  const auto r = fit(config_for(2, {2}), std::span<const ViewJoint>(views),
                     std::span<const std::uint32_t>(labels));
  ASSERT_TRUE(r.metrics.has_value());
  EXPECT_EQ(r.metrics->nmi, 1.0);
  const std::vector<std::uint32_t> short_labels{0, 1, 1};
  EXPECT_THROW(fit(config_for(2, {2}), std::span<const ViewJoint>(views),
                   std::span<const std::uint32_t>(short_labels)),
               Error);
}

TEST(FitTest, ObjectiveMatchesSnapshot) {
  std::mt19937_64 gen(10);
  const std::vector<ViewJoint> views{random_joint(20, 10, gen), random_joint(20, 14, gen)};
  auto c = config_for(3, {3, 4}, 0.5);
  c.restarts = 3;
  const auto r = fit(c, std::span<const ViewJoint>(views));
  std::vector<double> q;
  for (std::size_t i = 0; i < views.size(); ++i) {
    q.push_back(view_loss(views[i], build_summary(views[i], r.state.rows, r.state.cols[i])));
  }
  EXPECT_NEAR(r.objective, objective(q, r.state.weights, c.lambda), 1e-12);
}

// Properties.

TEST(SolverPropertyTest, MonotoneDescentIncludingSubsteps) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t views_count = uniform_size(1, 3, gen);
    const std::size_t n = uniform_size(6, 25, gen);
    std::vector<ViewJoint> views;
    std::vector<std::size_t> l;
    for (std::size_t i = 0; i < views_count; ++i) {
      const std::size_t m = uniform_size(4, 20, gen);
      views.push_back(random_joint(n, m, gen, 0.6));
      l.push_back(uniform_size(1, 4, gen));
    }
    for (const double lambda : {0.05, 1.0, 20.0}) {
      auto c = config_for(uniform_size(1, 5, gen), l, lambda);
      c.seed = static_cast<std::uint64_t>(trial);
      auto s = initialize(c, views, 0);
      double last = s.trace.back().objective;
      for (int t = 0; t < 10; ++t) {
        const double tol = 1e-12 * std::max(1.0, std::abs(last));
        row_step(s, views);
        const double after_rows = objective(s, lambda);
        EXPECT_LE(after_rows, last + tol);
        column_step(s, views);
        const double after_cols = objective(s, lambda);
        EXPECT_LE(after_cols, after_rows + tol);
        s.weights = weight_step(s.losses, lambda);
        const double after_weights = objective(s, lambda);
        EXPECT_LE(after_weights, after_cols + tol);
        last = after_weights;
      }
    }
  }
}

TEST(SolverPropertyTest, WeightStepMinimizesOverSimplex) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = uniform_size(2, 5, gen);
    std::vector<double> q(k);
    for (auto& v : q) v = std::uniform_real_distribution<double>(0.0, 2.0)(gen);
    const double lambda = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 2.0)(gen));
    const double best = objective(q, weight_step(q, lambda), lambda);
    for (int s = 0; s < 200; ++s) {
      const WeightVector w(random_simplex(k, gen));
      EXPECT_GE(objective(q, w, lambda) - best, -1e-12);
    }
  }
}

TEST(SolverPropertyTest, LambdaLimits) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = uniform_size(2, 5, gen);
    std::vector<double> q(k);
    for (auto& v : q) v = std::uniform_real_distribution<double>(0.0, 3.0)(gen);
    const auto flat = weight_step(q, std::ldexp(1.0, 20));
    for (std::size_t i = 0; i < k; ++i) EXPECT_LT(std::abs(flat[i] - 1.0 / k), 1e-3);
    const auto sharp = weight_step(q, std::ldexp(1.0, -20));
    const auto argmin = static_cast<std::size_t>(std::min_element(q.begin(), q.end()) - q.begin());
    const auto argmax = static_cast<std::size_t>(
        std::max_element(sharp.values().begin(), sharp.values().end()) - sharp.values().begin());
    EXPECT_EQ(argmax, argmin);
  }
}

TEST(SolverPropertyTest, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 gen(15);
  const std::vector<ViewJoint> views{random_joint(60, 40, gen, 0.7), random_joint(60, 30, gen, 0.7)};
  auto c = config_for(4, {3, 5});
  c.restarts = 2;
  c.threads = 1;
  const auto a = fit(c, std::span<const ViewJoint>(views));
  c.threads = 4;
  const auto b = fit(c, std::span<const ViewJoint>(views));
  EXPECT_EQ(a.state.rows, b.state.rows);
  EXPECT_EQ(a.state.cols, b.state.cols);
  EXPECT_EQ(a.state.trace, b.state.trace);
}

TEST(SolverPropertyTest, StepsAreBlockwiseOptimal) {
  std::mt19937_64 gen(16);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = uniform_size(3, 8, gen);
    const std::size_t views_count = uniform_size(1, 2, gen);
    std::vector<ViewJoint> views;
    std::vector<std::size_t> l;
    for (std::size_t i = 0; i < views_count; ++i) {
      const std::size_t m = uniform_size(2, 8, gen);
      views.push_back(random_joint(n, m, gen));
      l.push_back(uniform_size(1, std::min<std::size_t>(3, m), gen));
    }
    auto c = config_for(uniform_size(1, std::min<std::size_t>(3, n), gen), l, 0.7);
    c.seed = static_cast<std::uint64_t>(trial);
    auto s = initialize(c, views, 0);
    for (int t = 0; t < 5; ++t) {
      auto before = s;
      const auto rr = row_step(s, views);
      const auto rv = check_blockwise(before, s, views, StepKind::kRow, rr);
      EXPECT_TRUE(rv.pass) << rv.message;
      before = s;
      const auto cr = column_step(s, views);
      const auto cv = check_blockwise(before, s, views, StepKind::kColumn, cr);
      EXPECT_TRUE(cv.pass) << cv.message;
      s.weights = weight_step(s.losses, c.lambda);
    }
  }
}

TEST(SolverPropertyTest, RepairKeepsEveryClusterPopulated) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = uniform_size(5, 20, gen);
    const std::vector<ViewJoint> views{random_joint(n, uniform_size(5, 15, gen), gen, 0.7)};
    auto c = config_for(uniform_size(2, 5, gen), {uniform_size(2, 5, gen)});
    c.seed = static_cast<std::uint64_t>(trial);
    auto s = initialize(c, views, 0);
    for (int t = 0; t < 5; ++t) {
      iterate_once(s, views, c);
      for (const auto size : s.rows.cluster_sizes()) EXPECT_GT(size, 0u);
      for (const auto size : s.cols[0].cluster_sizes()) EXPECT_GT(size, 0u);
    }
  }
}

}  // namespace
}  // namespace mvitcc
