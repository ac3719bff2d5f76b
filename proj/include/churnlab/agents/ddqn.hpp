#pragma once

#include "churnlab/agents/agent.hpp"
#include "churnlab/nn/optim.hpp"

namespace churnlab::agents {

/// r + gamma * Q_target(s', argmax_a Q_online(s', a)) per column, or r where terminal.
Vector ddqn_td_target(nn::NetView online, nn::NetView target, const replay::TransitionBatch& batch, double gamma);

/// Linear epsilon schedule: epsilon_initial until the warm-up ends, then linear
/// decay to epsilon_final over the (scaled) decay horizon.
double epsilon_at(const AgentHyperparams& hp, std::int64_t env_step);

class DdqnAgent final : public Agent {
 public:
  explicit DdqnAgent(const AgentSetup& setup);

  std::string name() const override { return "ddqn"; }
  Vector act(const Vector& observation) override;
  Vector act_greedy(const Vector& observation) const override;
  void observe(const replay::Transition& transition, bool episode_done) override;

  std::int64_t update_count() const override { return online_.update_index(); }
  churn::AgentSnapshot churn_snapshot() const override;
  churn::ChurnProbeSpec churn_probe() const override;
  const replay::ReplayBuffer& replay() const override { return buffer_; }

  /// One gradient step on the training batch plus lambda_q * L_QC on the
  /// regularization batch; hard target sync every target_sync_interval updates.
  UpdateDiagnostics update(const replay::BatchTriplet& batches);

  const nn::Mlp& online() const { return online_; }
  const nn::ParameterSnapshot& target() const { return target_; }
  std::int64_t env_steps() const { return env_steps_; }
  double lambda_q() const { return lambda_.current(); }

 private:
  bool churn_active() const {
    return setup_.chain.regularizes_value() && (lambda_.automatic() || lambda_.current() > 0.0);
  }

  AgentSetup setup_;
  nn::Mlp online_;
  nn::ParameterSnapshot target_;
  std::optional<nn::ParameterSnapshot> previous_;  // theta_{t-1}
  nn::Adam adam_;
  chain::LambdaController lambda_;
  replay::ReplayBuffer buffer_;
  Rng act_rng_;
  Rng sample_rng_;
  Rng reg_rng_;
  std::int64_t env_steps_ = 0;
};

}  // namespace churnlab::agents
