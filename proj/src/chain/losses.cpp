#include "churnlab/chain/chain.hpp"

namespace churnlab::chain {

ChainMode parse_chain_mode(const std::string& name) {
  if (name == "none") return ChainMode::None;
  if (name == "vcr" || name == "VCR") return ChainMode::Vcr;
  if (name == "pcr" || name == "PCR") return ChainMode::Pcr;
  if (name == "dcr" || name == "DCR") return ChainMode::Dcr;
  throw ConfigError("chain.mode: unknown mode '" + name + "' (expected none|vcr|pcr|dcr)");
}

std::string to_string(ChainMode mode) {
  switch (mode) {
    case ChainMode::None: return "none";
    case ChainMode::Vcr: return "vcr";
    case ChainMode::Pcr: return "pcr";
    case ChainMode::Dcr: return "dcr";
  }
  return "none";
}

void ChainConfig::validate() const {
  if (lambda_q < 0.0) throw ConfigError("chain.lambda_q must be >= 0");
  if (lambda_pi < 0.0) throw ConfigError("chain.lambda_pi must be >= 0");
  if (beta <= 0.0) throw ConfigError("chain.beta must be > 0");
  if (running_decay <= 0.0 || running_decay >= 1.0) throw ConfigError("chain.running_decay must be in (0, 1)");
}

LossAndGradient value_churn_loss(nn::QLayout layout, const nn::Mlp& current, const nn::ParameterSnapshot& target,
                                 const Matrix& states, const Matrix& actions) {
  require(states.cols() > 0, "value_churn_loss: empty regularization batch");
  require(current.architecture() == target.architecture(), "value_churn_loss: architecture mismatch");
  nn::ForwardTrace trace;
  const Vector q = nn::evaluate_q(layout, current, states, actions, &trace);
  const Vector q_target = nn::evaluate_q(layout, target, states, actions);
  const Vector diff = q - q_target;
  const double n = static_cast<double>(states.cols());
  LossAndGradient out;
  out.value = diff.squaredNorm() / n;
  out.gradient = nn::q_backward(layout, current, trace, actions, (2.0 / n) * diff);
  return out;
}

LossAndGradient policy_churn_loss(nn::PolicyHead head, nn::PolicyKind kind, const nn::Mlp& current,
                                  const nn::ParameterSnapshot& target, const Matrix& states) {
  require(states.cols() > 0, "policy_churn_loss: empty regularization batch");
  require(current.architecture() == target.architecture(), "policy_churn_loss: architecture mismatch");
  nn::ForwardTrace trace;
  const nn::PolicyOutput now = nn::evaluate_policy(head, current, states, &trace);
  const nn::PolicyOutput before = nn::evaluate_policy(head, target, states);
  const double n = static_cast<double>(states.cols());
  LossAndGradient out;

  if (kind == nn::PolicyKind::Gaussian) {
    require(nn::is_gaussian(head), "policy_churn_loss: KL form needs a Gaussian policy");
    out.value = nn::gaussian_kl(now.mean, now.log_std, before.mean, before.log_std).mean();
    const Eigen::ArrayXXd var_target = (2.0 * before.log_std.array()).exp();
    const Matrix d_mean = ((now.mean - before.mean).array() / var_target / n).matrix();
    const Matrix d_log_std = ((-1.0 + (2.0 * now.log_std.array()).exp() / var_target) / n).matrix();
    out.gradient = nn::policy_backward(head, current, trace, now, d_mean, d_log_std);
    return out;
  }

  const Matrix a_now = nn::deterministic_action(head, now);
  const Matrix diff = a_now - nn::deterministic_action(head, before);
  const double count = n * static_cast<double>(diff.rows());
  out.value = diff.squaredNorm() / count;
  Matrix d_action = (2.0 / count) * diff;
  if (head == nn::PolicyHead::SquashedGaussian)
    d_action = d_action.cwiseProduct((1.0 - a_now.array().square()).matrix());
  out.gradient = nn::policy_backward(head, current, trace, now, d_action, Matrix());
  return out;
}

double combined_value_objective(double main_loss, double churn_loss, double lambda_q) {
  require(lambda_q >= 0.0, "combined_value_objective: lambda must be >= 0");
  return main_loss + lambda_q * churn_loss;
}

double combined_policy_objective(double objective, double churn_loss, double lambda_pi) {
  require(lambda_pi >= 0.0, "combined_policy_objective: lambda must be >= 0");
  return objective - lambda_pi * churn_loss;
}

}  // namespace churnlab::chain
