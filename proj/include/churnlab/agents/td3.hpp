#pragma once

#include "churnlab/agents/agent.hpp"
#include "churnlab/agents/probes.hpp"
#include "churnlab/nn/optim.hpp"

namespace churnlab::agents {

/// target <- tau * source + (1 - tau) * target
void soft_update(nn::Mlp& target, const nn::Mlp& source, double tau);

/// Gaussian noise clipped to [-clip, clip] per component.
Matrix clipped_noise(Eigen::Index rows, Eigen::Index cols, double stddev, double clip, Rng& rng);

/// r + gamma * min(Q'_1, Q'_2) at the given next actions, or r where terminal.
Vector twin_min_target(nn::NetView target_q1, nn::NetView target_q2, const replay::TransitionBatch& batch,
                       const Matrix& next_actions, double gamma);

class Td3Agent final : public Agent {
 public:
  explicit Td3Agent(const AgentSetup& setup);

  std::string name() const override { return "td3"; }
  Vector act(const Vector& observation) override;
  Vector act_greedy(const Vector& observation) const override;
  void observe(const replay::Transition& transition, bool episode_done) override;

  std::int64_t update_count() const override { return q1_.update_index(); }
  churn::AgentSnapshot churn_snapshot() const override;
  churn::ChurnProbeSpec churn_probe() const override;
  const replay::ReplayBuffer& replay() const override { return buffer_; }

  /// Critic step every call; actor and target step every actor_interval calls.
  UpdateDiagnostics update(const replay::BatchTriplet& batches);

  /// Networks around the most recent actor update (before, after), if any.
  const std::optional<JointUpdate>& last_joint_update() const { return last_joint_; }

  const nn::Mlp& actor() const { return actor_; }
  const nn::Mlp& q1() const { return q1_; }
  const nn::Mlp& q2() const { return q2_; }

 private:
  bool churn_active() const {
    const auto on = [](const chain::LambdaController& c) { return c.automatic() || c.current() > 0.0; };
    return (setup_.chain.regularizes_value() && on(lambda_q_)) || (setup_.chain.regularizes_policy() && on(lambda_pi_));
  }

  LossTerms critic_step(const replay::TransitionBatch& train, const replay::BatchTriplet& batches, double* td_mean);
  LossTerms actor_step(const replay::TransitionBatch& train, const replay::BatchTriplet& batches);

  AgentSetup setup_;
  nn::Mlp actor_;
  nn::Mlp q1_;
  nn::Mlp q2_;
  nn::Mlp actor_target_;
  nn::Mlp q1_target_;
  nn::Mlp q2_target_;
  std::optional<nn::ParameterSnapshot> previous_actor_;
  std::optional<nn::ParameterSnapshot> previous_q1_;
  std::optional<nn::ParameterSnapshot> previous_q2_;
  nn::Adam actor_adam_;
  nn::Adam q1_adam_;
  nn::Adam q2_adam_;
  chain::LambdaController lambda_q_;
  chain::LambdaController lambda_pi_;
  replay::ReplayBuffer buffer_;
  std::optional<JointUpdate> last_joint_;
  Rng act_rng_;
  Rng sample_rng_;
  Rng reg_rng_;
  Rng update_rng_;
  std::int64_t env_steps_ = 0;
};

}  // namespace churnlab::agents
