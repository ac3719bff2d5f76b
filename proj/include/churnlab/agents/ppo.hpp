#pragma once

#include <vector>

#include "churnlab/agents/agent.hpp"
#include "churnlab/nn/optim.hpp"

namespace churnlab::agents {

struct SegmentStep {
  Vector state;
  Vector action;
  double log_prob = 0.0;  // under the collecting policy
  double reward = 0.0;
  double value = 0.0;
  bool done = false;  // episode ended after this step (termination or horizon)
};

struct TrajectorySegment {
  std::vector<SegmentStep> steps;
  double bootstrap_value = 0.0;  // V(next state) after the last step
};

struct GaeResult {
  Vector advantages;
  Vector returns;  // advantages + values
};

/// Backward generalized-advantage recursion; a done step zeroes the bootstrap.
GaeResult compute_gae(const TrajectorySegment& segment, double gamma, double lambda);

struct SurrogateTerm {
  double value = 0.0;    // min(r * A, clip(r, 1 - eps, 1 + eps) * A)
  double d_ratio = 0.0;  // derivative w.r.t. r; zero when the clip is active
};

SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip_epsilon);

/// log pi_new(a|s) - log pi_old(a|s) per column.
Vector policy_log_ratio(nn::PolicyHead head, nn::NetView policy_old, nn::NetView policy_new, const Matrix& states,
                        const Matrix& actions);

/// Distribution of |r(old, new) - 1| at stored actions on held-out states.
TrustRegionStats trust_region_violation_probe(nn::PolicyHead head, nn::NetView policy_old, nn::NetView policy_new,
                                              const Matrix& states, const Matrix& actions, double clip_epsilon);

class PpoAgent final : public Agent {
 public:
  explicit PpoAgent(const AgentSetup& setup);

  std::string name() const override { return "ppo"; }
  Vector act(const Vector& observation) override;
  Vector act_greedy(const Vector& observation) const override;
  void observe(const replay::Transition& transition, bool episode_done) override;

  std::int64_t update_count() const override { return actor_.update_index(); }
  churn::AgentSnapshot churn_snapshot() const override;
  churn::ChurnProbeSpec churn_probe() const override;
  /// Transitions of completed segments; the current segment is not included.
  const replay::ReplayBuffer& replay() const override { return buffer_; }

  /// update_epochs passes of shuffled minibatch steps over one segment. Every
  /// step is emitted to the hook and returned. The last one carries the
  /// trust-region probe on states from earlier segments, when there are any.
  std::vector<UpdateDiagnostics> update_segment(const TrajectorySegment& segment);

  const nn::Mlp& actor() const { return actor_; }
  const nn::Mlp& critic() const { return critic_; }

 private:
  LossTerms actor_step(const Matrix& states, const Matrix& actions, const Vector& old_log_prob,
                       const Vector& advantages, const TrajectorySegment& segment);
  LossTerms critic_step(const Matrix& states, const Vector& returns, const TrajectorySegment& segment);
  Matrix reg_states(const TrajectorySegment& segment);

  AgentSetup setup_;
  nn::Mlp actor_;
  nn::Mlp critic_;
  std::optional<nn::ParameterSnapshot> previous_actor_;
  std::optional<nn::ParameterSnapshot> previous_critic_;
  nn::Adam actor_adam_;
  nn::Adam critic_adam_;
  chain::LambdaController lambda_pi_;
  chain::LambdaController lambda_v_;
  replay::ReplayBuffer buffer_;
  TrajectorySegment segment_;
  std::vector<replay::Transition> pending_;
  double last_log_prob_ = 0.0;
  double last_value_ = 0.0;
  Rng act_rng_;
  Rng update_rng_;
  Rng reg_rng_;
  Rng probe_rng_;
};

}  // namespace churnlab::agents
