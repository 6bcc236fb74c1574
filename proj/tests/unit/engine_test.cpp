#include "subgrad/engine.hpp"

#include <gtest/gtest.h>

#include "subgrad/absolute_probability.hpp"
#include "support/fixtures.hpp"

using namespace subgrad;

namespace {

StochasticMatrix uniform_mixer(int n, Stochasticity kind = Stochasticity::doubly) {
  const double q = 1.0 / n;
  return validate(std::vector<std::vector<double>>(static_cast<std::size_t>(n),
                                                   std::vector<double>(static_cast<std::size_t>(n), q)),
                  kind);
}

StochasticMatrix transpose_as_column(const StochasticMatrix& p) {
  const int n = p.n();
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = p(i, j);
  return validate(rows, Stochasticity::column);
}

RunOptions every_step(long steps, bool skip = false) {
  return RunOptions{steps, {SnapshotPlan::Kind::every, 1, {}}, skip};
}

std::vector<double> seeded_x0(int n, int d, std::uint64_t seed) {
  std::vector<double> x0(static_cast<std::size_t>(n) * d);
  auto rng = seeded_engine(seed, 0);
  for (double& v : x0) v = uniform(rng, -1.0, 1.0);
  return x0;
}

double max_abs(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST(UnifiedStep, IdentityMixWithZeroStepIsANoop) {
  AgentStates s{3, 2, 2, {1.0, -2.0, 0.5, 4.0}};
  const std::vector<double> delta{0.0, 0.0};
  const std::vector<double> g{9.0, 9.0, 9.0, 9.0};
  const auto next = unified_step(s, StochasticMatrix::identity(2), delta, g);
  EXPECT_EQ(next.t, 4);
  EXPECT_EQ(next.x, s.x);
}

TEST(UnifiedStep, MatchesHandComputedUpdate) {
  // Two agents, one coordinate: x = (1, 2), uniform mixing, g = (1, -1),
  // delta = (0.1, 0.1). Mixed value is 1.5 for both; the update lands at
  // (1.4, 1.6).
  AgentStates s{0, 2, 1, {1.0, 2.0}};
  const std::vector<double> delta{0.1, 0.1};
  const std::vector<double> g{1.0, -1.0};
  const auto next = unified_step(s, uniform_mixer(2), delta, g);
  EXPECT_DOUBLE_EQ(next.x[0], 1.4);
  EXPECT_DOUBLE_EQ(next.x[1], 1.6);
}

TEST(UnifiedStep, AveragesRowsUnderRankOneMixing) {
  AgentStates s{0, 3, 2, {0.0, 1.0, 3.0, 5.0, 6.0, 0.0}};
  const std::vector<double> delta{0.0, 0.0, 0.0};
  const std::vector<double> g(6, 0.0);
  const auto next = unified_step(s, uniform_mixer(3), delta, g);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(next.x[static_cast<std::size_t>(i) * 2], 3.0);
    EXPECT_DOUBLE_EQ(next.x[static_cast<std::size_t>(i) * 2 + 1], 2.0);
  }
}

TEST(UnifiedStep, RejectsColumnMatricesAndBadSizes) {
  AgentStates s{0, 2, 1, {1.0, 2.0}};
  const std::vector<double> delta{0.1, 0.1};
  const std::vector<double> g{1.0, -1.0};
  const auto col = validate({{0.2, 0.7}, {0.8, 0.3}}, Stochasticity::column);
  EXPECT_THROW(unified_step(s, col, delta, g), Error);
  EXPECT_THROW(unified_step(s, StochasticMatrix::identity(3), delta, g), Error);
  EXPECT_THROW(unified_step(s, StochasticMatrix::identity(2), {delta.data(), 1}, g), Error);
}

TEST(UnifiedStep, FlagsNonFiniteStates) {
  AgentStates s{0, 2, 1, {1.0, 2.0}};
  const std::vector<double> delta{std::numeric_limits<double>::infinity(), 0.0};
  const std::vector<double> g{1.0, 0.0};
  try {
    unified_step(s, StochasticMatrix::identity(2), delta, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite_state);
  }
}

TEST(RunUnified, ZeroStepsReturnsInitialSnapshotOnly) {
  const L1MedianInstance problem({{0.0}, {1.0}});
  const auto x0 = std::vector<double>{4.0, -2.0};
  const auto traj = run_unified(problem, MatrixSequence::constant(uniform_mixer(2)),
                                StepSchedule::common_power(2, 1.0, -0.75), x0, every_step(0));
  ASSERT_EQ(traj.snapshots.size(), 1u);
  EXPECT_EQ(traj.snapshots[0].t, 0);
  EXPECT_EQ(traj.snapshots[0].state, x0);
  EXPECT_EQ(traj.snapshots[0].cum_delta_sq, 0.0);
}

TEST(RunUnified, PureConsensusContractsToAbsoluteProbabilityAverage) {
  const auto p = fixtures::zero_diagonal_primitive4();
  const L1MedianInstance problem(
      std::vector<std::vector<double>>(4, std::vector<double>{0.0}));
  const auto x0 = std::vector<double>{1.0, 2.0, 3.0, 4.0};
  const auto seq = MatrixSequence::constant(p);
  const auto traj = run_unified(problem, seq, StepSchedule::common_power(4, 0.0, -0.75), x0,
                                RunOptions{200, {SnapshotPlan::Kind::geometric, 1, {}}, false});
  const auto pi = compute_abs_prob(seq, 0, check_A1(seq, 16, 4));
  double target = 0.0;
  for (int i = 0; i < 4; ++i) target += pi.at(0)[static_cast<std::size_t>(i)] * x0[static_cast<std::size_t>(i)];
  const auto& last = traj.snapshots.back();
  EXPECT_EQ(last.t, 200);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(last.state[static_cast<std::size_t>(i)], target, 1e-8);
}

TEST(RunUnified, IdenticalAgentsFollowCentralizedDescent) {
  const L1MedianInstance problem(
      std::vector<std::vector<double>>(3, std::vector<double>{1.0, -1.0}));
  std::vector<double> x0(6);
  for (int i = 0; i < 3; ++i) {
    x0[static_cast<std::size_t>(i) * 2] = 4.0;
    x0[static_cast<std::size_t>(i) * 2 + 1] = -3.0;
  }
  const auto traj = run_unified(problem, MatrixSequence::constant(uniform_mixer(3)),
                                StepSchedule::common_power(3, 0.5, -0.75), x0, every_step(50));
  std::vector<double> z{4.0, -3.0};
  std::vector<double> g(2);
  const L1MedianInstance single({{1.0, -1.0}});
  for (long t = 0; t < 50; ++t) {
    single.subgradient(0, z, g);
    const double d = 0.5 * std::pow(static_cast<double>(t) + 1.0, -0.75);
    for (int k = 0; k < 2; ++k) z[static_cast<std::size_t>(k)] -= d * g[static_cast<std::size_t>(k)];
  }
  const auto& last = traj.snapshots.back().state;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 2; ++k)
      EXPECT_NEAR(last[static_cast<std::size_t>(i) * 2 + k], z[static_cast<std::size_t>(k)], 1e-12);
}

TEST(RunUnified, StaysInsideTheConvexHullEnvelope) {
  // With zero steps every iterate is a convex combination of the previous
  // rows, so coordinates never escape the initial range.
  const L1MedianInstance problem(
      std::vector<std::vector<double>>(4, std::vector<double>{0.0}));
  RandomMatrixFamily fam;
  fam.n = 4;
  fam.kind = Stochasticity::row;
  fam.density = 0.7;
  const auto seq = MatrixSequence::seeded_random(fam, 3);
  const auto x0 = std::vector<double>{-2.0, 0.5, 1.0, 7.0};
  const auto traj = run_unified(problem, seq, StepSchedule::common_power(4, 0.0, -0.5), x0,
                                every_step(100));
  for (const auto& snap : traj.snapshots)
    for (double v : snap.state) {
      EXPECT_GE(v, -2.0 - 1e-12);
      EXPECT_LE(v, 7.0 + 1e-12);
    }
}

TEST(RunDgd, RequiresDoublyStochasticMixingAndCommonSteps) {
  const L1MedianInstance problem({{0.0}, {1.0}, {2.0}, {3.0}});
  const auto x0 = std::vector<double>(4, 0.0);
  const auto row_seq = MatrixSequence::constant(fixtures::zero_diagonal_primitive4());
  EXPECT_THROW(
      run_dgd(problem, row_seq, StepSchedule::common_power(4, 1.0, -0.75), x0, every_step(3)),
      Error);
  const auto doubly = MatrixSequence::constant(uniform_mixer(4));
  const auto table = StepSchedule::per_agent_explicit(
      std::vector<std::vector<double>>(3, std::vector<double>(4, 0.1)));
  EXPECT_THROW(run_dgd(problem, doubly, table, x0, every_step(3)), Error);
  EXPECT_NO_THROW(
      run_dgd(problem, doubly, StepSchedule::common_power(4, 1.0, -0.75), x0, every_step(3)));
}

TEST(RunDgdPost, DescendsBeforeMixing) {
  // One step, identity mixing: both orders coincide. Uniform mixing: the
  // post-descent state is averaged, including the descent contributions.
  const L1MedianInstance problem({{0.0}, {10.0}});
  const auto x0 = std::vector<double>{1.0, 2.0};
  const auto schedule = StepSchedule::common_power(2, 0.5, 0.0);
  const auto traj = run_dgd_post(problem, MatrixSequence::constant(uniform_mixer(2)), schedule,
                                 x0, every_step(1));
  // Descended values: 1 - 0.5*1 = 0.5 and 2 - 0.5*(-1) = 2.5; averaged: 1.5.
  const auto& last = traj.snapshots.back().state;
  EXPECT_DOUBLE_EQ(last[0], 1.5);
  EXPECT_DOUBLE_EQ(last[1], 1.5);
  const auto pre = run_unified(problem, MatrixSequence::constant(uniform_mixer(2)), schedule, x0,
                               every_step(1));
  // Mixing first gives 1.5 for both, then the agents descend apart.
  EXPECT_DOUBLE_EQ(pre.snapshots.back().state[0], 1.0);
  EXPECT_DOUBLE_EQ(pre.snapshots.back().state[1], 2.0);
}

TEST(RunRowStochastic, UniformMatrixScalesStepsByDiagonal) {
  const L1MedianInstance problem({{0.0}, {1.0}, {2.0}, {3.0}});
  const auto p = uniform_mixer(4, Stochasticity::row);
  const auto traj =
      run_row_stochastic(problem, p, 1.0, -0.75, std::vector<double>(4, 0.0), every_step(3));
  // Z(0) = I so delta(0) = c; Z(t) has diagonal 1/4 afterwards.
  EXPECT_DOUBLE_EQ(traj.snapshots[0].delta[0], 1.0);
  const double base1 = std::pow(2.0, -0.75);
  EXPECT_DOUBLE_EQ(traj.snapshots[1].delta[0], 4.0 * base1);
  const double base2 = std::pow(3.0, -0.75);
  EXPECT_DOUBLE_EQ(traj.snapshots[2].delta[2], 4.0 * base2);
  EXPECT_TRUE(traj.skipped_descents.empty());
}

TEST(RunRowStochastic, ZeroDiagonalFailsClosedWithoutSkipMode) {
  const L1MedianInstance problem(
      std::vector<std::vector<double>>(4, std::vector<double>{0.0}));
  const auto p = fixtures::zero_diagonal_primitive4();
  try {
    run_row_stochastic(problem, p, 1.0, -0.75, std::vector<double>(4, 1.0), every_step(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::zero_diagonal_divisor);
    EXPECT_NE(std::string(e.what()).find("z_0,0(1)"), std::string::npos);
  }
}

TEST(RunRowStochastic, SkipModeRecordsEarlySkipsThenDescends) {
  const L1MedianInstance problem(
      std::vector<std::vector<double>>(4, std::vector<double>{0.0}));
  const auto p = fixtures::zero_diagonal_primitive4();
  const auto traj = run_row_stochastic(problem, p, 1.0, -0.75, std::vector<double>(4, 1.0),
                                       every_step(12, true));
  EXPECT_FALSE(traj.skipped_descents.empty());
  int skips_at_1 = 0;
  for (const auto& [t, agent] : traj.skipped_descents) {
    EXPECT_GE(t, 1);
    EXPECT_LT(t, 6);  // witness power: Z(t) strictly positive from t = 6 on
    if (t == 1) ++skips_at_1;
  }
  EXPECT_EQ(skips_at_1, 4);  // diag(P) is all zero
  // Skipped transitions carry a zero recorded step for that agent.
  for (const auto& snap : traj.snapshots)
    if (snap.t == 1)
      for (double d : snap.delta) EXPECT_EQ(d, 0.0);
}

TEST(RunRowStochastic, MatchesManualZRecursion) {
  const auto p = validate({{0.8, 0.2}, {0.3, 0.7}}, Stochasticity::row);
  const L1MedianInstance problem({{1.0}, {-1.0}});
  const auto x0 = std::vector<double>{0.4, -0.2};
  const auto traj = run_row_stochastic(problem, p, 0.5, -0.6, x0, every_step(25));
  // Replay with an explicitly accumulated matrix power.
  auto z = StochasticMatrix::identity(2);
  std::vector<double> x = x0, g(2);
  for (long t = 0; t < 25; ++t) {
    problem.subgradient(0, {x.data(), 1}, {g.data(), 1});
    problem.subgradient(1, {x.data() + 1, 1}, {g.data() + 1, 1});
    const double base = 0.5 * std::pow(static_cast<double>(t) + 1.0, -0.6);
    std::vector<double> next(2, 0.0);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) next[static_cast<std::size_t>(i)] += p(i, j) * x[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] -= base / z(i, i) * g[static_cast<std::size_t>(i)];
    }
    x = next;
    z = multiply(p, z);
  }
  EXPECT_LE(max_abs(traj.snapshots.back().state, x), 1e-12);
}

TEST(RunSubgradientPush, DoublyMixerKeepsUnitMasses) {
  const L1MedianInstance problem({{0.0}, {1.0}, {2.0}, {3.0}});
  const auto a = MatrixSequence::constant(uniform_mixer(4));
  const auto traj = run_subgradient_push(problem, a, 1.0, -0.75, std::vector<double>(4, 0.0),
                                         std::vector<double>(4, 1.0), every_step(20));
  for (const auto& snap : traj.snapshots) {
    ASSERT_EQ(snap.y.size(), 4u);
    for (double y : snap.y) EXPECT_NEAR(y, 1.0, 1e-12);
  }
}

TEST(RunSubgradientPush, ZeroStepsReduceToRatioConsensus) {
  const L1MedianInstance problem(
      std::vector<std::vector<double>>(4, std::vector<double>{0.0}));
  const auto a = transpose_as_column(fixtures::zero_diagonal_primitive4());
  const auto w0 = std::vector<double>{1.0, 2.0, 3.0, 4.0};
  const auto y0 = std::vector<double>(4, 1.0);
  const auto traj = run_subgradient_push(problem, MatrixSequence::constant(a), 0.0, -0.75, w0, y0,
                                         every_step(300));
  // Mass-weighted means are conserved exactly by column-stochastic mixing, so
  // the common limit is sum w_i(0) / sum y_i(0).
  const double target = (1.0 + 2.0 + 3.0 + 4.0) / 4.0;
  for (double v : traj.snapshots.back().state) EXPECT_NEAR(v, target, 1e-8);
}

TEST(RunSubgradientPush, RecordsRatioStatesAndEffectiveSteps) {
  const L1MedianInstance problem({{0.0}, {1.0}});
  const auto a = validate({{1.0, 0.5}, {0.0, 0.5}}, Stochasticity::column);
  const auto traj = run_subgradient_push(problem, MatrixSequence::constant(a), 0.25, 0.0,
                                         {2.0, 4.0}, {1.0, 1.0}, every_step(1));
  // At t=0 the ratios are w0 / y0 and the effective step is theta / y_i(0).
  EXPECT_EQ(traj.snapshots[0].state, (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(traj.snapshots[0].delta, (std::vector<double>{0.25, 0.25}));
  // x_hat = w - theta g at ratios (2, 4): g = (1, 1) so x_hat = (1.75, 3.75);
  // w(1) = A x_hat = (1.75 + 1.875, 1.875), y(1) = (1.5, 0.5).
  const auto& last = traj.snapshots.back();
  EXPECT_DOUBLE_EQ(last.y[0], 1.5);
  EXPECT_DOUBLE_EQ(last.y[1], 0.5);
  EXPECT_DOUBLE_EQ(last.state[0], 3.625 / 1.5);
  EXPECT_DOUBLE_EQ(last.state[1], 1.875 / 0.5);
}

TEST(RunPushFirst, DividesByTheNextMass) {
  const L1MedianInstance problem({{0.0}, {1.0}});
  const auto a = validate({{1.0, 0.5}, {0.0, 0.5}}, Stochasticity::column);
  const auto traj = run_push_first(problem, MatrixSequence::constant(a), 0.25, 0.0, {2.0, 4.0},
                                   {1.0, 1.0}, every_step(1));
  // y(1) = (1.5, 0.5), so the recorded effective steps are theta / y(1).
  EXPECT_EQ(traj.snapshots[0].delta, (std::vector<double>{0.25 / 1.5, 0.25 / 0.5}));
  // w(1) = A w0 - theta g = (2 + 2 - 0.25, 2 - 0.25) = (3.75, 1.75).
  const auto& last = traj.snapshots.back();
  EXPECT_DOUBLE_EQ(last.state[0], 3.75 / 1.5);
  EXPECT_DOUBLE_EQ(last.state[1], 1.75 / 0.5);
}

TEST(RunPushFirst, UnitMassDoublyCaseEqualsUnifiedRun) {
  const auto p = uniform_mixer(4);
  const auto problem = L1MedianInstance::seeded(4, 2, 31);
  const auto x0 = seeded_x0(4, 2, 8);
  const auto push = run_push_first(problem, MatrixSequence::constant(p), 0.5, -0.75, x0,
                                   std::vector<double>(4, 1.0), every_step(40));
  const auto uni = run_unified(problem, MatrixSequence::constant(p),
                               StepSchedule::common_power(4, 0.5, -0.75), x0, every_step(40));
  ASSERT_EQ(push.snapshots.size(), uni.snapshots.size());
  for (std::size_t s = 0; s < push.snapshots.size(); ++s)
    EXPECT_LE(max_abs(push.snapshots[s].state, uni.snapshots[s].state), 1e-14);
}

TEST(RunSubgradientPush, UnitMassDoublyCaseEqualsDgdPost) {
  const auto p = uniform_mixer(4);
  const auto problem = L1MedianInstance::seeded(4, 2, 32);
  const auto x0 = seeded_x0(4, 2, 9);
  const auto push = run_subgradient_push(problem, MatrixSequence::constant(p), 0.5, -0.75, x0,
                                         std::vector<double>(4, 1.0), every_step(40));
  const auto post = run_dgd_post(problem, MatrixSequence::constant(p),
                                 StepSchedule::common_power(4, 0.5, -0.75), x0, every_step(40));
  ASSERT_EQ(push.snapshots.size(), post.snapshots.size());
  for (std::size_t s = 0; s < push.snapshots.size(); ++s)
    EXPECT_LE(max_abs(push.snapshots[s].state, post.snapshots[s].state), 1e-14);
}

TEST(RunPush, RejectsRowKindAndBadMasses) {
  const L1MedianInstance problem({{0.0}, {1.0}});
  const auto row = MatrixSequence::constant(uniform_mixer(2, Stochasticity::row));
  EXPECT_THROW(run_subgradient_push(problem, row, 1.0, -0.75, {0.0, 0.0}, {1.0, 1.0},
                                    every_step(2)),
               Error);
  const auto col = MatrixSequence::constant(uniform_mixer(2));
  EXPECT_THROW(
      run_push_first(problem, col, 1.0, -0.75, {0.0, 0.0}, {1.0, 0.0}, every_step(2)), Error);
  EXPECT_THROW(
      run_push_first(problem, col, 1.0, -0.75, {0.0, 0.0, 0.0}, {1.0, 1.0}, every_step(2)),
      Error);
}

TEST(Snapshots, GeometricCadenceKeepsPowersOfTwoAndFinal) {
  const L1MedianInstance problem({{0.0}, {1.0}});
  const auto traj = run_unified(problem, MatrixSequence::constant(uniform_mixer(2)),
                                StepSchedule::common_power(2, 1.0, -0.75), {0.0, 0.0},
                                RunOptions{37, {SnapshotPlan::Kind::geometric, 1, {}}, false});
  std::vector<long> times;
  for (const auto& s : traj.snapshots) times.push_back(s.t);
  EXPECT_EQ(times, (std::vector<long>{0, 1, 2, 4, 8, 16, 32, 37}));
}

TEST(Snapshots, EveryCadenceHonoursExtrasWithoutDuplicates) {
  const L1MedianInstance problem({{0.0}, {1.0}});
  const auto traj = run_unified(problem, MatrixSequence::constant(uniform_mixer(2)),
                                StepSchedule::common_power(2, 1.0, -0.75), {0.0, 0.0},
                                RunOptions{10, {SnapshotPlan::Kind::every, 4, {5}}, false});
  std::vector<long> times;
  for (const auto& s : traj.snapshots) times.push_back(s.t);
  EXPECT_EQ(times, (std::vector<long>{0, 4, 5, 8, 10}));
}

TEST(Snapshots, CumulativeSumsCoverStrictPrefixes) {
  const L1MedianInstance problem({{0.0}, {2.0}});
  const auto traj = run_unified(problem, MatrixSequence::constant(uniform_mixer(2)),
                                StepSchedule::common_power(2, 0.5, -1.0), {0.0, 0.0},
                                every_step(4));
  double sq = 0.0, ab = 0.0;
  std::size_t idx = 0;
  for (long t = 0; t <= 4; ++t) {
    const auto& snap = traj.snapshots[idx++];
    ASSERT_EQ(snap.t, t);
    EXPECT_NEAR(snap.cum_delta_sq, sq, 1e-15);
    EXPECT_NEAR(snap.cum_delta_abs, ab, 1e-15);
    const double d = 0.5 / (static_cast<double>(t) + 1.0);
    sq += d * d;
    ab += d;
  }
  EXPECT_EQ(traj.snapshots.back().delta, (std::vector<double>{0.0, 0.0}));
}

TEST(Determinism, RepeatedRunsAreBitIdentical) {
  const auto problem = L1MedianInstance::seeded(5, 2, 17);
  RandomMatrixFamily fam;
  fam.n = 5;
  fam.kind = Stochasticity::row;
  fam.density = 0.8;
  const auto seq = MatrixSequence::seeded_random(fam, 11);
  const auto x0 = seeded_x0(5, 2, 4);
  const auto a = run_unified(problem, seq, StepSchedule::common_power(5, 1.0, -0.75), x0,
                             every_step(64));
  const auto b = run_unified(problem, seq, StepSchedule::common_power(5, 1.0, -0.75), x0,
                             every_step(64));
  ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
  for (std::size_t s = 0; s < a.snapshots.size(); ++s)
    EXPECT_EQ(a.snapshots[s].state, b.snapshots[s].state);
}

TEST(Embedding, DgdPostReplayIsBitExact) {
  const auto problem = L1MedianInstance::seeded(3, 2, 41);
  const auto seq = MatrixSequence::constant(uniform_mixer(3));
  const auto schedule = StepSchedule::common_power(3, 1.0, -0.75);
  const auto x0 = seeded_x0(3, 2, 2);
  const auto rep = verify_embedding_dgd_post(problem, seq, schedule, x0, 200);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.max_rel_deviation, 0.0);
  EXPECT_EQ(rep.algorithm, "dgd_post");
}

TEST(Embedding, DgdPostHandlesExplicitSequences) {
  const auto problem = L1MedianInstance::seeded(4, 2, 42);
  const auto a = uniform_mixer(4, Stochasticity::row);
  const auto b = validate({{0.7, 0.1, 0.1, 0.1},
                           {0.1, 0.7, 0.1, 0.1},
                           {0.1, 0.1, 0.7, 0.1},
                           {0.1, 0.1, 0.1, 0.7}},
                          Stochasticity::row);
  const auto seq = MatrixSequence::explicit_then_hold({a, b, a});
  const auto schedule = StepSchedule::common_power(4, 0.5, -0.75);
  const auto rep = verify_embedding_dgd_post(problem, seq, schedule, seeded_x0(4, 2, 3), 50);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.max_rel_deviation, 0.0);
}

TEST(Embedding, RowStochasticReplayIsBitExact) {
  const auto problem = L1MedianInstance::seeded(4, 2, 43);
  const auto rep = verify_embedding_row_stochastic(
      problem, fixtures::zero_diagonal_primitive4(), 1.0, -0.75, seeded_x0(4, 2, 5), 200, 1e-10,
      true);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.max_rel_deviation, 0.0);
}

TEST(Embedding, SubgradientPushReplayStaysWithinTolerance) {
  const auto problem = L1MedianInstance::seeded(4, 2, 44);
  const auto a = transpose_as_column(fixtures::zero_diagonal_primitive4());
  const auto rep = verify_embedding_subgradient_push(
      problem, MatrixSequence::constant(a), 1.0, -0.75, seeded_x0(4, 2, 6),
      std::vector<double>(4, 1.0), 300);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.max_rel_deviation, 1e-10);
}

TEST(Embedding, PushFirstReplayStaysWithinTolerance) {
  const auto problem = L1MedianInstance::seeded(4, 2, 45);
  const auto a = transpose_as_column(fixtures::zero_diagonal_primitive4());
  const auto rep = verify_embedding_push_first(problem, MatrixSequence::constant(a), 1.0, -0.75,
                                               seeded_x0(4, 2, 7), std::vector<double>(4, 1.0),
                                               300);
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(rep.max_rel_deviation, 1e-10);
}

TEST(Embedding, TimeVaryingColumnSequencesAreCovered) {
  const auto problem = L1MedianInstance::seeded(3, 1, 46);
  RandomMatrixFamily fam;
  fam.n = 3;
  fam.kind = Stochasticity::column;
  fam.density = 0.8;
  fam.no_zero_rows = true;
  fam.min_weight = 0.1;
  const auto a_seq = MatrixSequence::seeded_random(fam, 19);
  const auto rep = verify_embedding_subgradient_push(problem, a_seq, 0.5, -0.75,
                                                     seeded_x0(3, 1, 12), {0.5, 1.0, 1.5}, 120);
  EXPECT_TRUE(rep.pass);
  const auto rep2 = verify_embedding_push_first(problem, a_seq, 0.5, -0.75, seeded_x0(3, 1, 13),
                                                {0.5, 1.0, 1.5}, 120);
  EXPECT_TRUE(rep2.pass);
}
