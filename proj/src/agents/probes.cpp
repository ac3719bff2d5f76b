#include "churnlab/agents/probes.hpp"

#include "churnlab/nn/q_function.hpp"

namespace churnlab::agents {

DualBias dual_bias_probe(nn::PolicyHead head, const JointUpdate& update, const Matrix& states) {
  require(states.cols() > 0, "dual bias probe: empty state batch");
  constexpr auto layout = nn::QLayout::StateActionToScalar;
  const Matrix a_before = nn::deterministic_action(head, nn::evaluate_policy(head, update.actor_before, states));
  const Matrix a_after = nn::deterministic_action(head, nn::evaluate_policy(head, update.actor_after, states));
  const double q_old_old = nn::evaluate_q(layout, update.critic_before, states, a_before).mean();
  const double q_new_old = nn::evaluate_q(layout, update.critic_after, states, a_before).mean();
  const double q_old_new = nn::evaluate_q(layout, update.critic_before, states, a_after).mean();
  const double q_new_new = nn::evaluate_q(layout, update.critic_after, states, a_after).mean();
  DualBias d;
  d.total = q_new_new - q_old_old;
  d.value_term = q_new_old - q_old_old;
  d.policy_term = q_old_new - q_old_old;
  d.cross = q_new_new - q_new_old - q_old_new + q_old_old;
  return d;
}

}  // namespace churnlab::agents
