#include "churnlab/agents/ddqn.hpp"

#include <algorithm>

namespace churnlab::agents {

Vector ddqn_td_target(nn::NetView online, nn::NetView target, const replay::TransitionBatch& batch, double gamma) {
  const Matrix q_online = online.forward(batch.next_states);
  const Matrix q_target = target.forward(batch.next_states);
  Vector y(batch.size());
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const int a = nn::argmax_lowest(q_online.col(i));
    y[i] = batch.rewards[i] + gamma * batch.not_terminal[i] * q_target(a, i);
  }
  return y;
}

double epsilon_at(const AgentHyperparams& hp, std::int64_t env_step) {
  const std::int64_t start = hp.scaled_random_steps();
  if (env_step <= start) return hp.epsilon_initial;
  const double progress = static_cast<double>(env_step - start) / static_cast<double>(hp.scaled_epsilon_decay());
  if (progress >= 1.0) return hp.epsilon_final;
  return hp.epsilon_initial + progress * (hp.epsilon_final - hp.epsilon_initial);
}

namespace {

nn::Mlp build_q(const AgentSetup& setup) {
  require(setup.env.action_kind == env::ActionKind::Discrete, "ddqn: needs a discrete action space");
  return nn::build_mlp(network_spec(setup, setup.env.state_dim, setup.env.action_count),
                       network_seed(setup.seed, 0));
}

}  // namespace

DdqnAgent::DdqnAgent(const AgentSetup& setup)
    : setup_(setup),
      online_(build_q(setup)),
      target_(online_.snapshot()),
      adam_(online_.parameters().size(), {.lr = scaled_lr(setup, setup.hp.lr_critic)}),
      lambda_(setup.chain.regularizes_value() ? setup.chain.lambda_q : 0.0,
              setup.chain.regularizes_value() && setup.chain.auto_lambda, setup.chain.beta,
              setup.chain.running_decay),
      buffer_(setup.hp.buffer_capacity),
      act_rng_(make_rng(setup.seed, kActStream)),
      sample_rng_(make_rng(setup.seed, kSampleStream)),
      reg_rng_(make_rng(setup.seed, kRegStream)) {
  setup_.hp.validate();
  setup_.chain.validate();
}

Vector DdqnAgent::act(const Vector& observation) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (env_steps_ < setup_.hp.scaled_random_steps() || coin(act_rng_) < epsilon_at(setup_.hp, env_steps_))
    return uniform_action(setup_.env, act_rng_);
  return act_greedy(observation);
}

Vector DdqnAgent::act_greedy(const Vector& observation) const {
  const Matrix q = online_.forward(observation);
  return Vector::Constant(1, static_cast<double>(nn::argmax_lowest(q.col(0))));
}

void DdqnAgent::observe(const replay::Transition& transition, bool /*episode_done*/) {
  buffer_.push(transition);
  ++env_steps_;
  const AgentHyperparams& hp = setup_.hp;
  const auto need = static_cast<std::size_t>(std::max(hp.batch_size, hp.effective_reg_batch()));
  if (env_steps_ < hp.scaled_random_steps() || buffer_.size() < need) return;
  if (env_steps_ % hp.train_interval != 0) return;
  emit(update(sample_update_batches(buffer_, hp, churn_active(), sample_rng_, reg_rng_)));
}

UpdateDiagnostics DdqnAgent::update(const replay::BatchTriplet& batches) {
  const replay::TransitionBatch train = replay::to_batch(batches.train);
  const Vector y = ddqn_td_target(online_, target_, train, setup_.hp.gamma);
  nn::ForwardTrace trace;
  const Vector q = nn::evaluate_q(nn::QLayout::StateToActions, online_, train.states, train.actions, &trace);
  const Vector td = q - y;
  const double n = static_cast<double>(train.size());

  LossTerms terms;
  terms.main = td.squaredNorm() / n;
  Vector grad = nn::q_backward(nn::QLayout::StateToActions, online_, trace, train.actions, (2.0 / n) * td);

  const bool regularize = setup_.chain.regularizes_value() && previous_ &&
                          (lambda_.automatic() || lambda_.current() > 0.0);
  if (regularize) {
    const replay::TransitionBatch reg = replay::to_batch(batches.reg);
    const chain::LossAndGradient churn =
        chain::value_churn_loss(nn::QLayout::StateToActions, online_, *previous_, reg.states, reg.actions);
    terms.churn = churn.value;
    terms.lambda = lambda_.update(terms.main, churn.value);
    terms.regularized = true;
    grad += terms.lambda * churn.gradient;
  }
  terms.grad_norm = grad.norm();

  previous_ = online_.snapshot();
  adam_.step(online_, grad);
  if (online_.update_index() % setup_.hp.target_sync_interval == 0) target_ = online_.snapshot();

  UpdateDiagnostics d;
  d.update_index = online_.update_index();
  d.value = terms;
  d.td_mean = -td.mean();
  return d;
}

churn::AgentSnapshot DdqnAgent::churn_snapshot() const {
  return {online_.update_index(), online_.snapshot(), std::nullopt};
}

churn::ChurnProbeSpec DdqnAgent::churn_probe() const { return {churn::ValueKind::DiscreteQ, std::nullopt, {}}; }

}  // namespace churnlab::agents
