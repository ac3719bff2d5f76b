#include "churnlab/agents/td3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace churnlab::agents {

void soft_update(nn::Mlp& target, const nn::Mlp& source, double tau) {
  require(target.architecture() == source.architecture(), "soft update: architecture mismatch");
  target.mutable_parameters() = tau * source.parameters() + (1.0 - tau) * target.parameters();
}

Matrix clipped_noise(Eigen::Index rows, Eigen::Index cols, double stddev, double clip, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = std::clamp(stddev * normal(rng), -clip, clip);
  return m;
}

Vector twin_min_target(nn::NetView target_q1, nn::NetView target_q2, const replay::TransitionBatch& batch,
                       const Matrix& next_actions, double gamma) {
  constexpr auto layout = nn::QLayout::StateActionToScalar;
  const Vector q1 = nn::evaluate_q(layout, target_q1, batch.next_states, next_actions);
  const Vector q2 = nn::evaluate_q(layout, target_q2, batch.next_states, next_actions);
  return batch.rewards + gamma * batch.not_terminal.cwiseProduct(q1.cwiseMin(q2));
}

namespace {

nn::Mlp build_critic(const AgentSetup& setup, int index) {
  require(setup.env.action_kind == env::ActionKind::Continuous, "td3: needs a continuous action space");
  return nn::build_mlp(network_spec(setup, setup.env.state_dim + setup.env.action_count, 1),
                       network_seed(setup.seed, index));
}

nn::Mlp build_actor(const AgentSetup& setup) {
  const nn::MlpSpec spec = nn::policy_mlp_spec(nn::PolicyHead::Tanh, setup.env.state_dim, setup.env.action_count,
                                               network_spec(setup, setup.env.state_dim, setup.env.action_count));
  return nn::build_mlp(spec, network_seed(setup.seed, 0));
}

}  // namespace

Td3Agent::Td3Agent(const AgentSetup& setup)
    : setup_(setup),
      actor_(build_actor(setup)),
      q1_(build_critic(setup, 1)),
      q2_(build_critic(setup, 2)),
      actor_target_(actor_),
      q1_target_(q1_),
      q2_target_(q2_),
      actor_adam_(actor_.parameters().size(), {.lr = scaled_lr(setup, setup.hp.lr_actor)}),
      q1_adam_(q1_.parameters().size(), {.lr = scaled_lr(setup, setup.hp.lr_critic)}),
      q2_adam_(q2_.parameters().size(), {.lr = scaled_lr(setup, setup.hp.lr_critic)}),
      lambda_q_(setup.chain.regularizes_value() ? setup.chain.lambda_q : 0.0,
                setup.chain.regularizes_value() && setup.chain.auto_lambda, setup.chain.beta,
                setup.chain.running_decay),
      lambda_pi_(setup.chain.regularizes_policy() ? setup.chain.lambda_pi : 0.0,
                 setup.chain.regularizes_policy() && setup.chain.auto_lambda, setup.chain.beta,
                 setup.chain.running_decay),
      buffer_(setup.hp.buffer_capacity),
      act_rng_(make_rng(setup.seed, kActStream)),
      sample_rng_(make_rng(setup.seed, kSampleStream)),
      reg_rng_(make_rng(setup.seed, kRegStream)),
      update_rng_(make_rng(setup.seed, kUpdateStream)) {
  setup_.hp.validate();
  setup_.chain.validate();
}

Vector Td3Agent::act(const Vector& observation) {
  if (env_steps_ < setup_.hp.scaled_random_steps()) return uniform_action(setup_.env, act_rng_);
  const Vector mean = act_greedy(observation);
  const Matrix noise = clipped_noise(mean.size(), 1, setup_.hp.exploration_noise,
                                     std::numeric_limits<double>::infinity(), act_rng_);
  return (mean + noise.col(0)).cwiseMax(-1.0).cwiseMin(1.0);
}

Vector Td3Agent::act_greedy(const Vector& observation) const {
  return nn::evaluate_policy(nn::PolicyHead::Tanh, actor_, observation).mean.col(0);
}

void Td3Agent::observe(const replay::Transition& transition, bool /*episode_done*/) {
  buffer_.push(transition);
  ++env_steps_;
  const AgentHyperparams& hp = setup_.hp;
  const auto need = static_cast<std::size_t>(std::max(hp.batch_size, hp.effective_reg_batch()));
  if (env_steps_ < hp.scaled_random_steps() || buffer_.size() < need) return;
  if (env_steps_ % hp.train_interval != 0) return;
  emit(update(sample_update_batches(buffer_, hp, churn_active(), sample_rng_, reg_rng_)));
}

LossTerms Td3Agent::critic_step(const replay::TransitionBatch& train, const replay::BatchTriplet& batches,
                                double* td_mean) {
  constexpr auto layout = nn::QLayout::StateActionToScalar;
  const AgentHyperparams& hp = setup_.hp;
  const Matrix next_mean = nn::evaluate_policy(nn::PolicyHead::Tanh, actor_target_, train.next_states).mean;
  const Matrix noise = clipped_noise(next_mean.rows(), next_mean.cols(), hp.target_noise, hp.target_noise_clip,
                                     update_rng_);
  const Matrix next_actions = (next_mean + noise).cwiseMax(-1.0).cwiseMin(1.0);
  const Vector y = twin_min_target(q1_target_, q2_target_, train, next_actions, hp.gamma);
  const double n = static_cast<double>(train.size());

  nn::ForwardTrace t1, t2;
  const Vector e1 = nn::evaluate_q(layout, q1_, train.states, train.actions, &t1) - y;
  const Vector e2 = nn::evaluate_q(layout, q2_, train.states, train.actions, &t2) - y;
  *td_mean = -0.5 * (e1.mean() + e2.mean());

  LossTerms terms;
  terms.main = (e1.squaredNorm() + e2.squaredNorm()) / n;
  Vector g1 = nn::q_backward(layout, q1_, t1, train.actions, (2.0 / n) * e1);
  Vector g2 = nn::q_backward(layout, q2_, t2, train.actions, (2.0 / n) * e2);

  if (setup_.chain.regularizes_value() && previous_q1_ && (lambda_q_.automatic() || lambda_q_.current() > 0.0)) {
    const replay::TransitionBatch reg = replay::to_batch(batches.reg);
    const chain::LossAndGradient c1 = chain::value_churn_loss(layout, q1_, *previous_q1_, reg.states, reg.actions);
    const chain::LossAndGradient c2 = chain::value_churn_loss(layout, q2_, *previous_q2_, reg.states, reg.actions);
    terms.churn = c1.value + c2.value;
    terms.lambda = lambda_q_.update(terms.main, terms.churn);
    terms.regularized = true;
    g1 += terms.lambda * c1.gradient;
    g2 += terms.lambda * c2.gradient;
  }
  terms.grad_norm = std::sqrt(g1.squaredNorm() + g2.squaredNorm());
  previous_q1_ = q1_.snapshot();
  previous_q2_ = q2_.snapshot();
  q1_adam_.step(q1_, g1);
  q2_adam_.step(q2_, g2);
  return terms;
}

LossTerms Td3Agent::actor_step(const replay::TransitionBatch& train, const replay::BatchTriplet& batches) {
  constexpr auto head = nn::PolicyHead::Tanh;
  nn::ForwardTrace trace;
  const nn::PolicyOutput out = nn::evaluate_policy(head, actor_, train.states, &trace);
  const double n = static_cast<double>(train.size());

  nn::ForwardTrace q_trace;
  const Vector q = nn::evaluate_q(nn::QLayout::StateActionToScalar, q1_, train.states, out.mean, &q_trace);
  Matrix d_action;
  nn::q_backward(nn::QLayout::StateActionToScalar, q1_, q_trace, out.mean, Vector::Constant(q.size(), -1.0 / n),
                 &d_action);

  LossTerms terms;
  terms.main = -q.mean();
  Vector grad = nn::policy_backward(head, actor_, trace, out, d_action, Matrix());

  if (setup_.chain.regularizes_policy() && previous_actor_ && (lambda_pi_.automatic() || lambda_pi_.current() > 0.0)) {
    const replay::TransitionBatch reg = replay::to_batch(batches.reg);
    const chain::LossAndGradient churn =
        chain::policy_churn_loss(head, nn::PolicyKind::Deterministic, actor_, *previous_actor_, reg.states);
    terms.churn = churn.value;
    terms.lambda = lambda_pi_.update(terms.main, churn.value);
    terms.regularized = true;
    grad += terms.lambda * churn.gradient;
  }
  terms.grad_norm = grad.norm();
  previous_actor_ = actor_.snapshot();
  actor_adam_.step(actor_, grad);
  return terms;
}

UpdateDiagnostics Td3Agent::update(const replay::BatchTriplet& batches) {
  const replay::TransitionBatch train = replay::to_batch(batches.train);
  const nn::ParameterSnapshot critic_before = q1_.snapshot();
  UpdateDiagnostics d;
  d.value = critic_step(train, batches, &d.td_mean);
  if (q1_.update_index() % setup_.hp.actor_interval == 0) {
    const nn::ParameterSnapshot actor_before = actor_.snapshot();
    d.policy = actor_step(train, batches);
    soft_update(actor_target_, actor_, setup_.hp.tau);
    soft_update(q1_target_, q1_, setup_.hp.tau);
    soft_update(q2_target_, q2_, setup_.hp.tau);
    last_joint_ = JointUpdate{actor_before, actor_.snapshot(), critic_before, q1_.snapshot()};
  }
  d.update_index = q1_.update_index();
  return d;
}

churn::AgentSnapshot Td3Agent::churn_snapshot() const {
  return {q1_.update_index(), q1_.snapshot(), actor_.snapshot()};
}

churn::ChurnProbeSpec Td3Agent::churn_probe() const {
  return {churn::ValueKind::Critic, nn::PolicyHead::Tanh, nn::PolicyKind::Deterministic};
}

}  // namespace churnlab::agents
