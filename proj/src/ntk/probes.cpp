#include "churnlab/ntk/probes.hpp"

#include <algorithm>
#include <cmath>

namespace churnlab::ntk {

namespace {

constexpr auto kCritic = nn::QLayout::StateActionToScalar;
constexpr auto kTanh = nn::PolicyHead::Tanh;

void require_plain(StepKind step) {
  if (step != StepKind::Plain)
    throw UnsupportedError("ntk probe: first-order prediction requires a plain gradient step");
}

double q_at(nn::QLayout layout, nn::NetView net, const Vector& s, const Vector& a) {
  return nn::evaluate_q(layout, net, s, a)[0];
}

Vector pi_at(nn::NetView actor, const Vector& s) { return nn::evaluate_policy(kTanh, actor, s).mean.col(0); }

Vector action_grad(nn::NetView critic, const Vector& s, const Vector& a) {
  return nn::critic_action_gradient(critic, s, a).col(0);
}

nn::Mlp moved(const nn::Mlp& net, const Vector& direction, double alpha) {
  nn::Mlp copy = net;
  copy.mutable_parameters() += alpha * direction;
  return copy;
}

}  // namespace

double NtkEstimate::relative_error(double floor) const {
  return std::abs(residual) / std::max(std::abs(measured), floor);
}

Vector value_gradient(nn::QLayout layout, nn::NetView net, const Vector& state, const Vector& action) {
  nn::ForwardTrace trace;
  nn::evaluate_q(layout, net, state, action, &trace);
  return nn::q_backward(layout, net, trace, action, Vector::Ones(1));
}

Matrix policy_jacobian(nn::NetView policy, const Vector& state) {
  nn::ForwardTrace trace;
  const nn::PolicyOutput out = nn::evaluate_policy(kTanh, policy, state, &trace);
  const Eigen::Index dim = out.mean.rows();
  Matrix jac(dim, policy.params.size());
  for (Eigen::Index d = 0; d < dim; ++d) {
    Matrix unit = Matrix::Zero(dim, 1);
    unit(d, 0) = 1.0;
    jac.row(d) = nn::policy_backward(kTanh, policy, trace, out, unit, Matrix()).transpose();
  }
  return jac;
}

double value_kernel(nn::QLayout layout, nn::NetView net, const Vector& s1, const Vector& a1, const Vector& s2,
                    const Vector& a2) {
  return value_gradient(layout, net, s1, a1).dot(value_gradient(layout, net, s2, a2));
}

NtkEstimate predict_value_churn(nn::QLayout layout, const nn::Mlp& net, const Vector& state, const Vector& action,
                                const Vector& ref_state, const Vector& ref_action, double alpha, double td_error,
                                StepKind step) {
  require_plain(step);
  const Vector g_train = value_gradient(layout, net, state, action);
  const Vector g_ref = value_gradient(layout, net, ref_state, ref_action);
  NtkEstimate e;
  e.kernel = g_ref.dot(g_train);
  e.predicted = alpha * e.kernel * td_error;
  const nn::Mlp after = moved(net, g_train, alpha * td_error);
  e.measured = q_at(layout, after, ref_state, ref_action) - q_at(layout, net, ref_state, ref_action);
  e.residual = e.measured - e.predicted;
  return e;
}

NtkEstimate predict_policy_value_deviation(const nn::Mlp& critic, const nn::Mlp& policy, const Vector& state,
                                           const Vector& ref_state, double alpha, StepKind step) {
  require_plain(step);
  const Vector g_train = action_grad(critic, state, pi_at(policy, state));
  const Matrix j_train = policy_jacobian(policy, state);
  const Vector ref_action = pi_at(policy, ref_state);
  const Vector g_ref = action_grad(critic, ref_state, ref_action);
  const Matrix j_ref = policy_jacobian(policy, ref_state);

  NtkEstimate e;
  e.kernel = g_ref.dot(j_ref * (j_train.transpose() * g_train));
  e.predicted = alpha * e.kernel;
  const nn::Mlp after = moved(policy, j_train.transpose() * g_train, alpha);
  e.measured = q_at(kCritic, critic, ref_state, pi_at(after, ref_state)) - q_at(kCritic, critic, ref_state, ref_action);
  e.residual = e.measured - e.predicted;
  return e;
}

Vector action_gradient_deviation(nn::NetView critic_before, nn::NetView critic_after, const Vector& state,
                                 const Vector& action) {
  require(critic_before.arch == critic_after.arch, "action gradient deviation: architecture mismatch");
  return action_grad(critic_after, state, action) - action_grad(critic_before, state, action);
}

ActorCriticUpdate actor_critic_update(nn::NetView critic, nn::NetView actor, const replay::TransitionBatch& batch,
                                      double gamma) {
  const double n = static_cast<double>(batch.size());
  const Matrix next_actions = nn::evaluate_policy(kTanh, actor, batch.next_states).mean;
  const Vector q_next = nn::evaluate_q(kCritic, critic, batch.next_states, next_actions);
  nn::ForwardTrace q_trace;
  const Vector q = nn::evaluate_q(kCritic, critic, batch.states, batch.actions, &q_trace);
  const Vector delta = batch.rewards + gamma * batch.not_terminal.cwiseProduct(q_next) - q;

  ActorCriticUpdate u;
  u.critic = nn::q_backward(kCritic, critic, q_trace, batch.actions, delta / n);

  nn::ForwardTrace pi_trace;
  const nn::PolicyOutput out = nn::evaluate_policy(kTanh, actor, batch.states, &pi_trace);
  const Matrix g = nn::critic_action_gradient(critic, batch.states, out.mean);
  u.actor = nn::policy_backward(kTanh, actor, pi_trace, out, g / n, Matrix());
  return u;
}

ActorCritic plain_actor_critic_step(const ActorCritic& ac, const replay::TransitionBatch& batch, double gamma,
                                    double alpha) {
  const ActorCriticUpdate u = actor_critic_update(ac.critic, ac.actor, batch, gamma);
  return {moved(ac.critic, u.critic, alpha), moved(ac.actor, u.actor, alpha)};
}

BiasDecomposition update_bias_decomposition(nn::NetView critic_prev, nn::NetView actor_prev, nn::NetView critic,
                                            nn::NetView actor, const replay::TransitionBatch& batch, double gamma) {
  require(critic_prev.arch == critic.arch && actor_prev.arch == actor.arch,
          "update bias decomposition: architecture mismatch");
  require(batch.size() > 0, "update bias decomposition: empty batch");
  const double n = static_cast<double>(batch.size());
  BiasDecomposition r;
  Vector critic_churn_part = Vector::Zero(critic.params.size());
  Vector critic_grad_part = Vector::Zero(critic.params.size());
  Vector actor_churn_part = Vector::Zero(actor.params.size());
  Vector actor_grad_part = Vector::Zero(actor.params.size());

  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const Vector s = batch.states.col(i);
    const Vector a = batch.actions.col(i);
    const Vector s_next = batch.next_states.col(i);
    const double live = gamma * batch.not_terminal[i];

    // Critic: (grad Q + D^Q_grad_theta) (delta + gamma (D^pi_Q + C_Q(s', a')) - C_Q(s, a))
    const Vector gq_prev = value_gradient(kCritic, critic_prev, s, a);
    const Vector d_q_theta = value_gradient(kCritic, critic, s, a) - gq_prev;
    const Vector a_next_prev = pi_at(actor_prev, s_next);
    const Vector a_next = pi_at(actor, s_next);
    const double q_prev_sa = q_at(kCritic, critic_prev, s, a);
    const double q_prev_next = q_at(kCritic, critic_prev, s_next, a_next_prev);
    const double delta_prev = batch.rewards[i] + live * q_prev_next - q_prev_sa;
    const double c_q = q_at(kCritic, critic, s, a) - q_prev_sa;
    const double c_q_next = q_at(kCritic, critic, s_next, a_next_prev) - q_prev_next;
    const double d_pi_q = q_at(kCritic, critic, s_next, a_next) - q_at(kCritic, critic, s_next, a_next_prev);
    const double delta_biased = delta_prev + live * (d_pi_q + c_q_next) - c_q;
    critic_churn_part += gq_prev * (delta_biased - delta_prev) / n;
    critic_grad_part += d_q_theta * delta_biased / n;

    // Actor: (J + D^pi_grad_phi)^T (grad_a Q + D^pi_grad_a + D^Q_grad_a)
    const Matrix j_prev = policy_jacobian(actor_prev, s);
    const Matrix d_pi_phi = policy_jacobian(actor, s) - j_prev;
    const Vector a_pi_prev = pi_at(actor_prev, s);
    const Vector a_pi = pi_at(actor, s);
    const Vector g_prev = action_grad(critic_prev, s, a_pi_prev);
    const Vector g_churned_at_prev = action_grad(critic, s, a_pi_prev);
    const Vector d_pi_a = action_grad(critic, s, a_pi) - g_churned_at_prev;
    const Vector d_q_a = g_churned_at_prev - g_prev;
    actor_churn_part += j_prev.transpose() * (d_pi_a + d_q_a) / n;
    actor_grad_part += d_pi_phi.transpose() * (g_prev + d_pi_a + d_q_a) / n;

    r.q_param_grad_deviation += d_q_theta.norm() / n;
    r.pi_param_grad_deviation += d_pi_phi.norm() / n;
    r.pi_action_grad_deviation += d_pi_a.norm() / n;
    r.q_action_grad_deviation += d_q_a.norm() / n;
    r.value_churn += std::abs(c_q) / n;
    r.next_value_churn += std::abs(c_q_next) / n;
    r.policy_value_deviation += std::abs(d_pi_q) / n;
  }

  r.clean = actor_critic_update(critic_prev, actor_prev, batch, gamma);
  r.biased = actor_critic_update(critic, actor, batch, gamma);
  r.critic_reconstructed = r.clean.critic + critic_churn_part + critic_grad_part;
  r.actor_reconstructed = r.clean.actor + actor_churn_part + actor_grad_part;
  r.critic_total = (r.biased.critic - r.clean.critic).norm();
  r.actor_total = (r.biased.actor - r.clean.actor).norm();
  r.critic_bound = critic_churn_part.norm() + critic_grad_part.norm();
  r.actor_bound = actor_churn_part.norm() + actor_grad_part.norm();
  return r;
}

Matrix ntk_gram(nn::QLayout layout, nn::NetView net, const Matrix& states, const Matrix& actions) {
  require(states.cols() >= 1 && states.cols() <= 64, "ntk gram: batch size must be in [1, 64]");
  Matrix grads(net.params.size(), states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i)
    grads.col(i) = value_gradient(layout, net, states.col(i), actions.col(i));
  return grads.transpose() * grads;
}

double effective_rank(const Matrix& gram) {
  require(gram.rows() == gram.cols() && gram.rows() > 0, "effective rank: needs a non-empty square matrix");
  const Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  const Vector eig = solver.eigenvalues().cwiseMax(0.0);
  const double total = eig.sum();
  if (total <= 0.0) return 0.0;
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double p = eig[i] / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

double kernel_rank_diagnostic(nn::QLayout layout, nn::NetView net, const Matrix& states, const Matrix& actions) {
  return effective_rank(ntk_gram(layout, net, states, actions));
}

}  // namespace churnlab::ntk
