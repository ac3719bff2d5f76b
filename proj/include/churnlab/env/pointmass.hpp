#pragma once

#include "churnlab/env/environment.hpp"

namespace churnlab::env {

inline constexpr int kPointMassHorizon = 200;
inline constexpr double kPointMassGain = 0.1;

struct PointMassState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  int steps_elapsed = 0;
  bool finished = false;
};

struct PointMassStep {
  PointMassState state;
  double reward = 0.0;
  bool done = false;
};

inline Eigen::Vector2d pointmass_goal() { return {0.8, 0.8}; }

/// position' = clamp(position + 0.1 * clamp(action)), reward = -||position' - goal||.
PointMassStep pointmass_step(const PointMassState& state, const Eigen::Vector2d& action);

/// Per-coordinate clamped step toward the goal. Minimizes every future distance
/// simultaneously, so it is the optimal policy for this reward.
Eigen::Vector2d pointmass_oracle_action(const Eigen::Vector2d& position);

class PointMass final : public Environment {
 public:
  explicit PointMass(std::uint64_t seed);

  const EnvSpec& spec() const override { return spec_; }
  std::string name() const override { return "pointmass"; }
  /// Start position drawn uniformly from [-1, 1]^2.
  Vector reset() override;
  StepResult step(const Vector& action) override;

  const PointMassState& state() const { return state_; }
  void set_state(const PointMassState& state) { state_ = state; }

 private:
  EnvSpec spec_;
  PointMassState state_;
  Rng rng_;
};

}  // namespace churnlab::env
