#include <gtest/gtest.h>

#include <cmath>

#include "churnlab/env/gridnav.hpp"
#include "churnlab/env/pointmass.hpp"

using namespace churnlab;
using namespace churnlab::env;

namespace {

// Closed form: with Manhattan distance d > 0 the optimal path pays the step
// penalty d - 1 times and collects the goal step at discount gamma^(d-1).
double manhattan_value(int x, int y, double gamma) {
  const int d = (kGridSize - 1 - x) + (kGridSize - 1 - y);
  if (d == 0) return 0.0;
  double v = 0.0;
  for (int k = 0; k < d - 1; ++k) v += std::pow(gamma, k) * kGridStepPenalty;
  return v + std::pow(gamma, d - 1) * (kGridStepPenalty + kGridGoalBonus);
}

}  // namespace

TEST(GridNav, RightFromOrigin) {
  const GridStep s = gridnav_step({0, 0, 0, false}, GridAction::Right);
  EXPECT_EQ(s.state.x, 1);
  EXPECT_EQ(s.state.y, 0);
  EXPECT_DOUBLE_EQ(s.reward, -0.01);
  EXPECT_FALSE(s.done);
}

TEST(GridNav, StepIntoGoal) {
  const GridStep s = gridnav_step({4, 3, 0, false}, GridAction::Up);
  EXPECT_EQ(s.state.x, 4);
  EXPECT_EQ(s.state.y, 4);
  EXPECT_DOUBLE_EQ(s.reward, 0.99);
  EXPECT_TRUE(s.done);
  EXPECT_TRUE(s.terminal);
}

TEST(GridNav, EdgeClamp) {
  const GridStep s = gridnav_step({0, 0, 0, false}, GridAction::Left);
  EXPECT_EQ(s.state, (GridNavState{0, 0, 1, false}));
  EXPECT_DOUBLE_EQ(s.reward, -0.01);
  EXPECT_FALSE(s.done);
}

TEST(GridNav, FinishedEpisodeIsAContractError) {
  EXPECT_THROW(gridnav_step({1, 1, 3, true}, GridAction::Up), ContractError);
}

TEST(GridNav, HorizonTruncatesWithoutTermination) {
  GridNavState s;
  GridStep step;
  for (int t = 0; t < kGridHorizon; ++t) {
    step = gridnav_step(s, GridAction::Left);
    s = step.state;
  }
  EXPECT_TRUE(step.done);
  EXPECT_FALSE(step.terminal);
  EXPECT_EQ(s.steps_elapsed, kGridHorizon);
}

TEST(GridNav, OptimalValuesGoalAndOneStep) {
  const GridValueTable v = gridnav_optimal_values(0.99);
  EXPECT_DOUBLE_EQ(v[4 * kGridSize + 4], 0.0);
  EXPECT_NEAR(v[3 * kGridSize + 4], 0.99, 1e-12);
}

TEST(GridNav, OptimalValuesMatchClosedForm) {
  for (double gamma : {0.0, 0.5, 0.9, 0.99}) {
    const GridValueTable v = gridnav_optimal_values(gamma);
    for (int y = 0; y < kGridSize; ++y)
      for (int x = 0; x < kGridSize; ++x)
        EXPECT_NEAR(v[y * kGridSize + x], manhattan_value(x, y, gamma), 1e-9) << x << "," << y << " g=" << gamma;
  }
}

TEST(GridNav, GreedyRolloutFromOriginTakesEightSteps) {
  const GridValueTable v = gridnav_optimal_values(0.99);
  GridNavState s;
  double ret = 0.0;
  int steps = 0;
  while (!s.finished) {
    int best = 0;
    double best_q = -1e9;
    for (int a = 0; a < kGridActionCount; ++a) {
      const GridStep n = gridnav_step(s, static_cast<GridAction>(a));
      const double q = n.reward + (n.terminal ? 0.0 : 0.99 * v[n.state.y * kGridSize + n.state.x]);
      if (q > best_q) {
        best_q = q;
        best = a;
      }
    }
    const GridStep n = gridnav_step(s, static_cast<GridAction>(best));
    ret += n.reward;
    s = n.state;
    ++steps;
  }
  EXPECT_EQ(steps, 8);
  EXPECT_NEAR(ret, 8 * -0.01 + 1.0, 1e-12);
}

TEST(GridNav, ObservationsInUnitBox) {
  for (int y = 0; y < kGridSize; ++y)
    for (int x = 0; x < kGridSize; ++x) {
      const Vector o = gridnav_observation({x, y, 0, false});
      EXPECT_GE(o.minCoeff(), -1.0);
      EXPECT_LE(o.maxCoeff(), 1.0);
    }
  EXPECT_EQ(gridnav_observation({0, 0, 0, false}), Vector::Constant(2, -1.0));
}

TEST(GridNav, DeterministicUnderActionSequence) {
  GridNav a, b;
  a.reset();
  b.reset();
  Rng rng = make_rng(3, 0);
  std::uniform_int_distribution<int> pick(0, 3);
  for (int t = 0; t < 100; ++t) {
    const Vector act = Vector::Constant(1, pick(rng));
    const StepResult ra = a.step(act), rb = b.step(act);
    ASSERT_EQ(ra.observation, rb.observation);
    ASSERT_EQ(ra.reward, rb.reward);
    if (ra.done) break;
  }
}

TEST(PointMass, StepTowardGoal) {
  const PointMassStep s = pointmass_step({}, Eigen::Vector2d(1.0, 1.0));
  EXPECT_NEAR(s.state.position.x(), 0.1, 1e-15);
  EXPECT_NEAR(s.state.position.y(), 0.1, 1e-15);
  EXPECT_NEAR(s.reward, -std::sqrt(0.98), 1e-12);
  EXPECT_NEAR(s.reward, -0.9899, 1e-4);
}

TEST(PointMass, ZeroRewardAtGoal) {
  PointMassState at_goal;
  at_goal.position = pointmass_goal();
  EXPECT_DOUBLE_EQ(pointmass_step(at_goal, Eigen::Vector2d::Zero()).reward, 0.0);
}

TEST(PointMass, PositionClamp) {
  PointMassState s;
  s.position = {0.95, 0.0};
  const PointMassStep n = pointmass_step(s, Eigen::Vector2d(1.0, 0.0));
  EXPECT_DOUBLE_EQ(n.state.position.x(), 1.0);
  EXPECT_DOUBLE_EQ(n.state.position.y(), 0.0);
}

TEST(PointMass, OutOfRangeActionIsClamped) {
  const PointMassStep a = pointmass_step({}, Eigen::Vector2d(5.0, -7.0));
  const PointMassStep b = pointmass_step({}, Eigen::Vector2d(1.0, -1.0));
  EXPECT_EQ(a.state.position, b.state.position);
}

TEST(PointMass, InvariantsHoldOnRandomRollouts) {
  PointMass env(11);
  Rng rng = make_rng(11, 1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int episode = 0; episode < 3; ++episode) {
    Vector obs = env.reset();
    EXPECT_LE(obs.cwiseAbs().maxCoeff(), 1.0);
    int steps = 0;
    for (;;) {
      const StepResult r = env.step(Eigen::Vector2d(u(rng), u(rng)));
      ++steps;
      ASSERT_LE(r.observation.cwiseAbs().maxCoeff(), 1.0);
      ASSERT_GE(r.reward, env.spec().reward_min);
      ASSERT_LE(r.reward, env.spec().reward_max);
      if (r.done) break;
    }
    EXPECT_EQ(steps, kPointMassHorizon);
  }
}

TEST(PointMass, OracleBeatsZeroAction) {
  PointMassState s;
  s.position = {-0.9, 0.3};
  PointMassState z = s;
  double oracle = 0.0, zero = 0.0;
  while (!s.finished) {
    const PointMassStep a = pointmass_step(s, pointmass_oracle_action(s.position));
    const PointMassStep b = pointmass_step(z, Eigen::Vector2d::Zero());
    oracle += a.reward;
    zero += b.reward;
    s = a.state;
    z = b.state;
  }
  EXPECT_GT(oracle, zero);
  EXPECT_NEAR(s.position.x(), 0.8, 1e-12);
}

TEST(Registry, UnknownEnvironment) {
  EXPECT_THROW(make_environment("cartpole", 0), ConfigError);
  EXPECT_TRUE(is_known_environment("gridnav"));
  EXPECT_TRUE(is_known_environment("pointmass"));
}
