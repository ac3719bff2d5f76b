#include "churnlab/churn/metrics.hpp"

namespace churnlab::churn {

namespace {

void require_same_arch(nn::NetView a, nn::NetView b) {
  require(a.arch == b.arch, "churn: snapshots come from different architectures");
}

}  // namespace

ValueChurn value_churn(nn::QLayout layout, nn::NetView current, nn::NetView past, const Matrix& states,
                       const Matrix& actions) {
  require_same_arch(current, past);
  require(states.cols() > 0, "churn: empty reference batch");
  const Vector diff = nn::evaluate_q(layout, current, states, actions) - nn::evaluate_q(layout, past, states, actions);
  return ValueChurn{diff.mean(), diff.cwiseAbs().mean()};
}

double policy_churn(nn::PolicyHead head, nn::NetView current, nn::NetView past, const Matrix& states,
                    nn::PolicyKind kind) {
  require_same_arch(current, past);
  require(states.cols() > 0, "churn: empty reference batch");
  const nn::PolicyOutput now = nn::evaluate_policy(head, current, states);
  const nn::PolicyOutput before = nn::evaluate_policy(head, past, states);
  if (kind == nn::PolicyKind::Gaussian) {
    require(nn::is_gaussian(head), "churn: KL policy churn requested for a deterministic policy");
    return nn::gaussian_kl(now.mean, now.log_std, before.mean, before.log_std).mean();
  }
  const Matrix diff = nn::deterministic_action(head, now) - nn::deterministic_action(head, before);
  return diff.cwiseAbs().colwise().sum().mean();
}

double greedy_action_deviation(nn::NetView current, nn::NetView past, const Matrix& states) {
  require_same_arch(current, past);
  require(states.cols() > 0, "churn: empty reference batch");
  const Matrix q_now = current.forward(states);
  const Matrix q_before = past.forward(states);
  Eigen::Index changed = 0;
  for (Eigen::Index i = 0; i < states.cols(); ++i)
    if (nn::argmax_lowest(q_now.col(i)) != nn::argmax_lowest(q_before.col(i))) ++changed;
  return static_cast<double>(changed) / static_cast<double>(states.cols());
}

double greedy_value_churn(nn::NetView current, nn::NetView past, const Matrix& states) {
  require_same_arch(current, past);
  require(states.cols() > 0, "churn: empty reference batch");
  return (current.forward(states).colwise().maxCoeff() - past.forward(states).colwise().maxCoeff()).mean();
}

double all_action_churn(nn::NetView current, nn::NetView past, const Matrix& states) {
  require_same_arch(current, past);
  require(states.cols() > 0, "churn: empty reference batch");
  return (current.forward(states) - past.forward(states)).cwiseAbs().colwise().mean().mean();
}

double policy_value_deviation(nn::NetView critic, nn::PolicyHead head, nn::NetView policy_current,
                              nn::NetView policy_past, const Matrix& states) {
  require_same_arch(policy_current, policy_past);
  require(states.cols() > 0, "churn: empty reference batch");
  const Matrix a_now = nn::deterministic_action(head, nn::evaluate_policy(head, policy_current, states));
  const Matrix a_before = nn::deterministic_action(head, nn::evaluate_policy(head, policy_past, states));
  using nn::QLayout;
  return (nn::evaluate_q(QLayout::StateActionToScalar, critic, states, a_now) -
          nn::evaluate_q(QLayout::StateActionToScalar, critic, states, a_before))
      .mean();
}

}  // namespace churnlab::churn
