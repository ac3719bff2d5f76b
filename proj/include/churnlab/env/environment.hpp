#pragma once

#include <memory>
#include <string>

#include "churnlab/common.hpp"

namespace churnlab::env {

enum class ActionKind { Discrete, Continuous };

struct EnvSpec {
  int state_dim = 1;
  ActionKind action_kind = ActionKind::Discrete;
  // Discrete: number of actions. Continuous: action dimension, each in [-1, 1].
  int action_count = 2;
  int horizon = 1;
  double reward_min = 0.0;
  double reward_max = 0.0;

  int action_dim() const { return action_kind == ActionKind::Discrete ? 1 : action_count; }
  void validate() const;
};

struct StepResult {
  Vector observation;
  double reward = 0.0;
  bool done = false;
  // True only for genuine termination; a horizon cut sets done without terminal.
  bool terminal = false;
};

/// Single-owner, single-threaded episodic environment. Discrete actions are
/// passed as a one-element vector holding the action index.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const EnvSpec& spec() const = 0;
  virtual std::string name() const = 0;
  virtual Vector reset() = 0;
  virtual StepResult step(const Vector& action) = 0;
};

/// Resolves "gridnav" / "pointmass"; throws ConfigError for unknown names.
std::unique_ptr<Environment> make_environment(const std::string& name, std::uint64_t seed);
bool is_known_environment(const std::string& name);

}  // namespace churnlab::env
