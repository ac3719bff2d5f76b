#pragma once

#include <array>

#include "churnlab/env/environment.hpp"

namespace churnlab::env {

// 5x5 grid, start (0,0), goal (4,4). Step penalty -0.01, +1.0 on reaching the goal.
inline constexpr int kGridSize = 5;
inline constexpr int kGridHorizon = 100;
inline constexpr double kGridStepPenalty = -0.01;
inline constexpr double kGridGoalBonus = 1.0;

enum class GridAction : int { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr int kGridActionCount = 4;

struct GridNavState {
  int x = 0;
  int y = 0;
  int steps_elapsed = 0;
  bool finished = false;

  bool at_goal() const { return x == kGridSize - 1 && y == kGridSize - 1; }
  friend bool operator==(const GridNavState&, const GridNavState&) = default;
};

struct GridStep {
  GridNavState state;
  double reward = 0.0;
  bool done = false;
  bool terminal = false;
};

/// Pure transition function. Throws ContractError on a finished episode.
GridStep gridnav_step(const GridNavState& state, GridAction action);

/// Optimal state values indexed by [y * 5 + x]; the goal is absorbing with value 0.
using GridValueTable = std::array<double, kGridSize * kGridSize>;
GridValueTable gridnav_optimal_values(double gamma);

/// Observation encoding: both coordinates mapped to [-1, 1].
Vector gridnav_observation(const GridNavState& state);

class GridNav final : public Environment {
 public:
  GridNav();

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "gridnav"; }
  Vector reset() override;
  StepResult step(const Vector& action) override;

  const GridNavState& state() const { return state_; }

 private:
  EnvSpec spec_;
  GridNavState state_;
};

}  // namespace churnlab::env
