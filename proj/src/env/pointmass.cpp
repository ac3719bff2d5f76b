#include "churnlab/env/pointmass.hpp"

#include <cmath>

namespace churnlab::env {

PointMassStep pointmass_step(const PointMassState& state, const Eigen::Vector2d& action) {
  require(!state.finished, "pointmass: step called on a finished episode");
  const Eigen::Vector2d a = action.cwiseMax(-1.0).cwiseMin(1.0);
  PointMassStep out;
  out.state.position = (state.position + kPointMassGain * a).cwiseMax(-1.0).cwiseMin(1.0);
  out.state.steps_elapsed = state.steps_elapsed + 1;
  out.reward = -(out.state.position - pointmass_goal()).norm();
  out.done = out.state.steps_elapsed >= kPointMassHorizon;
  out.state.finished = out.done;
  return out;
}

Eigen::Vector2d pointmass_oracle_action(const Eigen::Vector2d& position) {
  return ((pointmass_goal() - position) / kPointMassGain).cwiseMax(-1.0).cwiseMin(1.0);
}

PointMass::PointMass(std::uint64_t seed) : rng_(make_rng(seed, 0x706d)) {
  spec_.state_dim = 2;
  spec_.action_kind = ActionKind::Continuous;
  spec_.action_count = 2;
  spec_.horizon = kPointMassHorizon;
  spec_.reward_min = -std::sqrt(8.0);
  spec_.reward_max = 0.0;
}

Vector PointMass::reset() {
  std::uniform_real_distribution<double> start(-1.0, 1.0);
  state_ = PointMassState{};
  state_.position.x() = start(rng_);
  state_.position.y() = start(rng_);
  return state_.position;
}

StepResult PointMass::step(const Vector& action) {
  require(action.size() == 2, "pointmass: expected a 2-d action");
  const PointMassStep s = pointmass_step(state_, Eigen::Vector2d(action[0], action[1]));
  state_ = s.state;
  return StepResult{state_.position, s.reward, s.done, false};
}

}  // namespace churnlab::env
