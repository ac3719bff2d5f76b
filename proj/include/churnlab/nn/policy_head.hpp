#pragma once

#include "churnlab/nn/mlp.hpp"

namespace churnlab::nn {

/// How raw network outputs become an action distribution.
///  - Tanh: deterministic action tanh(out) (TD3 actor, probe policies).
///  - StateIndependentGaussian: mean = out, log std is a free parameter vector
///    stored in the network's extra parameters (PPO).
///  - SquashedGaussian: out = [mean; raw log std], action = tanh(mean + std * eps) (SAC).
enum class PolicyHead { Tanh, StateIndependentGaussian, SquashedGaussian };

/// Distance family for policy churn: L1/MSE over deterministic actions (or
/// means), or KL between diagonal Gaussians.
enum class PolicyKind { Deterministic, Gaussian };

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct PolicyOutput {
  Matrix mean;     // action_dim x batch (pre-squash for SquashedGaussian)
  Matrix log_std;  // action_dim x batch, empty for Tanh
  Matrix raw;      // network output
};

/// Fills output_dim / extra_params of `base` for the given head.
MlpSpec policy_mlp_spec(PolicyHead head, int state_dim, int action_dim, MlpSpec base);
int policy_action_dim(PolicyHead head, const MlpArchitecture& arch);
bool is_gaussian(PolicyHead head);

PolicyOutput evaluate_policy(PolicyHead head, NetView net, const Matrix& states,
                             ForwardTrace* trace = nullptr);

/// Backpropagates dL/d(mean) and dL/d(log_std) (either may be empty) to the
/// parameter vector, including free log-std parameters.
Vector policy_backward(PolicyHead head, NetView net, const ForwardTrace& trace, const PolicyOutput& out,
                       const Matrix& d_mean, const Matrix& d_log_std);

/// Noise-free action: tanh(out), the Gaussian mean, or tanh(mean).
Matrix deterministic_action(PolicyHead head, const PolicyOutput& out);

/// Per-column log density of a diagonal Gaussian.
Vector gaussian_log_prob(const Matrix& mean, const Matrix& log_std, const Matrix& actions);

/// Per-column KL(p || q) between diagonal Gaussians.
Vector gaussian_kl(const Matrix& mean_p, const Matrix& log_std_p, const Matrix& mean_q,
                   const Matrix& log_std_q);

/// log(1 - tanh(u)^2) evaluated without cancellation.
double log_one_minus_tanh_sq(double u);

}  // namespace churnlab::nn
