#include "churnlab/env/gridnav.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace churnlab::env {

void EnvSpec::validate() const {
  if (state_dim < 1) throw ConfigError("env spec: state_dim must be positive");
  if (horizon < 1) throw ConfigError("env spec: horizon must be >= 1");
  if (action_kind == ActionKind::Discrete && action_count < 2)
    throw ConfigError("env spec: discrete action count must be >= 2");
  if (action_kind == ActionKind::Continuous && action_count < 1)
    throw ConfigError("env spec: continuous action dim must be >= 1");
}

namespace {

GridNavState moved(GridNavState s, GridAction action) {
  switch (action) {
    case GridAction::Up: s.y = std::min(s.y + 1, kGridSize - 1); break;
    case GridAction::Down: s.y = std::max(s.y - 1, 0); break;
    case GridAction::Left: s.x = std::max(s.x - 1, 0); break;
    case GridAction::Right: s.x = std::min(s.x + 1, kGridSize - 1); break;
  }
  return s;
}

}  // namespace

GridStep gridnav_step(const GridNavState& state, GridAction action) {
  require(!state.finished, "gridnav: step called on a finished episode");
  require(state.x >= 0 && state.x < kGridSize && state.y >= 0 && state.y < kGridSize,
          "gridnav: position outside the grid");
  require(static_cast<int>(action) >= 0 && static_cast<int>(action) < kGridActionCount,
          "gridnav: invalid action");

  GridStep out;
  out.state = moved(state, action);
  out.state.steps_elapsed = state.steps_elapsed + 1;
  out.reward = kGridStepPenalty;
  if (out.state.at_goal()) {
    out.reward += kGridGoalBonus;
    out.terminal = true;
  }
  out.done = out.terminal || out.state.steps_elapsed >= kGridHorizon;
  out.state.finished = out.done;
  return out;
}

GridValueTable gridnav_optimal_values(double gamma) {
  require(gamma >= 0.0 && gamma < 1.0, "gridnav_optimal_values: gamma must be in [0, 1)");
  GridValueTable values{};
  for (;;) {
    GridValueTable next{};
    double residual = 0.0;
    for (int y = 0; y < kGridSize; ++y) {
      for (int x = 0; x < kGridSize; ++x) {
        const int idx = y * kGridSize + x;
        if (x == kGridSize - 1 && y == kGridSize - 1) {
          next[idx] = 0.0;
          continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < kGridActionCount; ++a) {
          const GridNavState s2 = moved(GridNavState{x, y, 0, false}, static_cast<GridAction>(a));
          double q = kGridStepPenalty;
          if (s2.at_goal()) {
            q += kGridGoalBonus;
          } else {
            q += gamma * values[s2.y * kGridSize + s2.x];
          }
          best = std::max(best, q);
        }
        next[idx] = best;
        residual = std::max(residual, std::abs(best - values[idx]));
      }
    }
    values = next;
    if (residual < 1e-12) break;
  }
  return values;
}

Vector gridnav_observation(const GridNavState& state) {
  Vector obs(2);
  const double scale = 2.0 / (kGridSize - 1);
  obs << state.x * scale - 1.0, state.y * scale - 1.0;
  return obs;
}

GridNav::GridNav() {
  spec_.state_dim = 2;
  spec_.action_kind = ActionKind::Discrete;
  spec_.action_count = kGridActionCount;
  spec_.horizon = kGridHorizon;
  spec_.reward_min = kGridStepPenalty;
  spec_.reward_max = kGridStepPenalty + kGridGoalBonus;
}

Vector GridNav::reset() {
  state_ = GridNavState{};
  return gridnav_observation(state_);
}

StepResult GridNav::step(const Vector& action) {
  require(action.size() == 1, "gridnav: expected a single action index");
  const int index = static_cast<int>(action[0]);
  require(index >= 0 && index < kGridActionCount && index == action[0], "gridnav: invalid action index");
  const GridStep s = gridnav_step(state_, static_cast<GridAction>(index));
  state_ = s.state;
  return StepResult{gridnav_observation(state_), s.reward, s.done, s.terminal};
}

}  // namespace churnlab::env
