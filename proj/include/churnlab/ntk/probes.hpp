#pragma once

#include "churnlab/nn/policy_head.hpp"
#include "churnlab/nn/q_function.hpp"
#include "churnlab/replay/replay_buffer.hpp"

namespace churnlab::ntk {

/// First-order analysis assumes params += alpha * direction; an adaptive
/// optimizer breaks that and is rejected.
enum class StepKind { Plain, Adaptive };

struct NtkEstimate {
  double kernel = 0.0;     // gradient inner product (scalar form)
  double predicted = 0.0;  // first-order churn
  double measured = 0.0;   // churn after actually taking the step
  double residual = 0.0;   // measured - predicted

  double relative_error(double floor = 1e-300) const;
};

/// Parameter gradient of Q at one (state, action) point.
Vector value_gradient(nn::QLayout layout, nn::NetView net, const Vector& state, const Vector& action);

/// Jacobian d pi(s) / d params (action_dim x params) of a deterministic tanh policy.
Matrix policy_jacobian(nn::NetView policy, const Vector& state);

/// k(x, y) = grad Q(x) . grad Q(y)
double value_kernel(nn::QLayout layout, nn::NetView net, const Vector& s1, const Vector& a1, const Vector& s2,
                    const Vector& a2);

/// Semi-gradient TD step params += alpha * td_error * grad Q(s, a); compares
/// alpha * k(ref, train) * td_error with the realized change of Q at the reference point.
NtkEstimate predict_value_churn(nn::QLayout layout, const nn::Mlp& net, const Vector& state, const Vector& action,
                                const Vector& ref_state, const Vector& ref_action, double alpha, double td_error,
                                StepKind step = StepKind::Plain);

/// DPG step on a tanh policy at `state`: phi += alpha * J_pi(s)^T grad_a Q(s, pi(s)).
/// Predicted deviation grad_a Q(ref, pi(ref))^T alpha k_phi(ref, s) grad_a Q(s, pi(s)),
/// measured Q(ref, pi'(ref)) - Q(ref, pi(ref)) under the fixed critic.
NtkEstimate predict_policy_value_deviation(const nn::Mlp& critic, const nn::Mlp& policy, const Vector& state,
                                           const Vector& ref_state, double alpha, StepKind step = StepKind::Plain);

/// grad_a Q_after(s, a) - grad_a Q_before(s, a).
Vector action_gradient_deviation(nn::NetView critic_before, nn::NetView critic_after, const Vector& state,
                                 const Vector& action);

/// Critic and tanh actor trained with plain gradient steps.
struct ActorCritic {
  nn::Mlp critic;
  nn::Mlp actor;
};

/// One joint semi-gradient TD + DPG step of size alpha on a batch (bootstrap
/// action pi(s')). Returns the updated copy; the input is untouched.
ActorCritic plain_actor_critic_step(const ActorCritic& ac, const replay::TransitionBatch& batch, double gamma,
                                    double alpha);

/// Batch-mean parameter updates of critic and actor evaluated at given networks.
struct ActorCriticUpdate {
  Vector critic;  // mean grad Q(s,a) * delta(s,a)
  Vector actor;   // mean J_pi(s)^T grad_a Q(s, pi(s))
};

ActorCriticUpdate actor_critic_update(nn::NetView critic, nn::NetView actor, const replay::TransitionBatch& batch,
                                      double gamma);

/// Update bias on the segment (critic_prev, actor_prev) -> (critic, actor):
/// the clean update uses the networks before the intervening update, the
/// biased one the networks after it. Norms are batch means of per-sample norms.
struct BiasDecomposition {
  double q_param_grad_deviation = 0.0;   // ||grad_theta Q_theta(s,a) - grad_theta Q_theta-(s,a)||
  double pi_param_grad_deviation = 0.0;  // ||J_phi(s) - J_phi-(s)||_F
  double pi_action_grad_deviation = 0.0; // ||grad_a Q_theta(s, pi_phi(s)) - grad_a Q_theta(s, pi_phi-(s))||
  double q_action_grad_deviation = 0.0;  // ||grad_a Q_theta(s, pi_phi-(s)) - grad_a Q_theta-(s, pi_phi-(s))||
  double value_churn = 0.0;              // |C_Q| at (s, a)
  double next_value_churn = 0.0;         // |C_Q| at (s', pi_phi-(s'))
  double policy_value_deviation = 0.0;   // |D^pi_Q| at s' under the churned critic
  double critic_total = 0.0;             // ||biased - clean|| for the critic update
  double actor_total = 0.0;
  double critic_bound = 0.0;             // norm of the churn-term part plus norm of the gradient-deviation part
  double actor_bound = 0.0;
  // Biased updates rebuilt from the clean quantities plus the deviation terms;
  // they equal the directly computed biased updates up to rounding.
  Vector critic_reconstructed;
  Vector actor_reconstructed;
  ActorCriticUpdate clean;
  ActorCriticUpdate biased;
};

BiasDecomposition update_bias_decomposition(nn::NetView critic_prev, nn::NetView actor_prev, nn::NetView critic,
                                            nn::NetView actor, const replay::TransitionBatch& batch, double gamma);

/// Gram matrix of per-sample parameter gradients of Q. Batch size <= 64.
Matrix ntk_gram(nn::QLayout layout, nn::NetView net, const Matrix& states, const Matrix& actions);

/// exp(entropy of the normalized eigenvalue spectrum); negative eigenvalues are clipped to 0.
double effective_rank(const Matrix& gram);

double kernel_rank_diagnostic(nn::QLayout layout, nn::NetView net, const Matrix& states, const Matrix& actions);

}  // namespace churnlab::ntk
