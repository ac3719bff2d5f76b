#include "churnlab/agents/sac.hpp"

#include <cmath>
#include <numbers>

#include "churnlab/agents/td3.hpp"

namespace churnlab::agents {

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

SquashedSample squashed_sample(const nn::PolicyOutput& out, const Matrix& noise) {
  require(noise.rows() == out.mean.rows() && noise.cols() == out.mean.cols(), "sac: noise shape mismatch");
  SquashedSample s;
  s.pre_squash = out.mean + (out.log_std.array().exp() * noise.array()).matrix();
  s.action = s.pre_squash.array().tanh().matrix();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  s.log_prob.resize(noise.cols());
  for (Eigen::Index j = 0; j < noise.cols(); ++j) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < noise.rows(); ++i)
      lp += -0.5 * noise(i, j) * noise(i, j) - out.log_std(i, j) - half_log_2pi -
            nn::log_one_minus_tanh_sq(s.pre_squash(i, j));
    s.log_prob[j] = lp;
  }
  return s;
}

Vector soft_twin_target(nn::NetView target_q1, nn::NetView target_q2, const replay::TransitionBatch& batch,
                        const Matrix& next_actions, const Vector& next_log_prob, double gamma, double alpha) {
  constexpr auto layout = nn::QLayout::StateActionToScalar;
  const Vector q1 = nn::evaluate_q(layout, target_q1, batch.next_states, next_actions);
  const Vector q2 = nn::evaluate_q(layout, target_q2, batch.next_states, next_actions);
  const Vector soft = q1.cwiseMin(q2) - alpha * next_log_prob;
  return batch.rewards + gamma * batch.not_terminal.cwiseProduct(soft);
}

chain::LossAndGradient sac_actor_loss(nn::NetView actor, nn::NetView q1, nn::NetView q2, const Matrix& states,
                                      const Matrix& noise, double alpha) {
  constexpr auto head = nn::PolicyHead::SquashedGaussian;
  constexpr auto layout = nn::QLayout::StateActionToScalar;
  nn::ForwardTrace trace;
  const nn::PolicyOutput out = nn::evaluate_policy(head, actor, states, &trace);
  const SquashedSample s = squashed_sample(out, noise);
  const double n = static_cast<double>(states.cols());

  nn::ForwardTrace t1, t2;
  const Vector v1 = nn::evaluate_q(layout, q1, states, s.action, &t1);
  const Vector v2 = nn::evaluate_q(layout, q2, states, s.action, &t2);
  Matrix g1, g2;
  const Vector ones = Vector::Ones(states.cols());
  nn::q_backward(layout, q1, t1, s.action, ones, &g1);
  nn::q_backward(layout, q2, t2, s.action, ones, &g2);

  Matrix dq_da(s.action.rows(), s.action.cols());
  Vector q_min(states.cols());
  for (Eigen::Index j = 0; j < states.cols(); ++j) {
    const bool first = v1[j] <= v2[j];
    q_min[j] = first ? v1[j] : v2[j];
    dq_da.col(j) = first ? g1.col(j) : g2.col(j);
  }

  chain::LossAndGradient out_loss;
  out_loss.value = (alpha * s.log_prob - q_min).mean();
  const Eigen::ArrayXXd a = s.action.array();
  const Eigen::ArrayXXd d_u = (2.0 * alpha * a - dq_da.array() * (1.0 - a.square())) / n;
  const Matrix d_log_std = (d_u * out.log_std.array().exp() * noise.array() - alpha / n).matrix();
  out_loss.gradient = nn::policy_backward(head, actor, trace, out, d_u.matrix(), d_log_std);
  return out_loss;
}

namespace {

nn::Mlp build_critic(const AgentSetup& setup, int index) {
  require(setup.env.action_kind == env::ActionKind::Continuous, "sac: needs a continuous action space");
  return nn::build_mlp(network_spec(setup, setup.env.state_dim + setup.env.action_count, 1),
                       network_seed(setup.seed, index));
}

nn::Mlp build_actor(const AgentSetup& setup) {
  const nn::MlpSpec spec =
      nn::policy_mlp_spec(nn::PolicyHead::SquashedGaussian, setup.env.state_dim, setup.env.action_count,
                          network_spec(setup, setup.env.state_dim, setup.env.action_count));
  return nn::build_mlp(spec, network_seed(setup.seed, 0));
}

}  // namespace

SacAgent::SacAgent(const AgentSetup& setup)
    : setup_(setup),
      actor_(build_actor(setup)),
      q1_(build_critic(setup, 1)),
      q2_(build_critic(setup, 2)),
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

Vector SacAgent::act(const Vector& observation) {
  if (env_steps_ < setup_.hp.scaled_random_steps()) return uniform_action(setup_.env, act_rng_);
  const nn::PolicyOutput out = nn::evaluate_policy(nn::PolicyHead::SquashedGaussian, actor_, observation);
  return squashed_sample(out, standard_normal(out.mean.rows(), 1, act_rng_)).action.col(0);
}

Vector SacAgent::act_greedy(const Vector& observation) const {
  constexpr auto head = nn::PolicyHead::SquashedGaussian;
  return nn::deterministic_action(head, nn::evaluate_policy(head, actor_, observation)).col(0);
}

void SacAgent::observe(const replay::Transition& transition, bool /*episode_done*/) {
  buffer_.push(transition);
  ++env_steps_;
  const AgentHyperparams& hp = setup_.hp;
  const auto need = static_cast<std::size_t>(std::max(hp.batch_size, hp.effective_reg_batch()));
  if (env_steps_ < hp.scaled_random_steps() || buffer_.size() < need) return;
  if (env_steps_ % hp.train_interval != 0) return;
  emit(update(sample_update_batches(buffer_, hp, churn_active(), sample_rng_, reg_rng_)));
}

LossTerms SacAgent::critic_step(const replay::TransitionBatch& train, const replay::BatchTriplet& batches,
                                double* td_mean) {
  constexpr auto layout = nn::QLayout::StateActionToScalar;
  const AgentHyperparams& hp = setup_.hp;
  const nn::PolicyOutput next = nn::evaluate_policy(nn::PolicyHead::SquashedGaussian, actor_, train.next_states);
  const SquashedSample s = squashed_sample(next, standard_normal(next.mean.rows(), next.mean.cols(), update_rng_));
  const Vector y = soft_twin_target(q1_target_, q2_target_, train, s.action, s.log_prob, hp.gamma, hp.entropy_alpha);
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

LossTerms SacAgent::actor_step(const replay::TransitionBatch& train, const replay::BatchTriplet& batches) {
  constexpr auto head = nn::PolicyHead::SquashedGaussian;
  const Matrix noise = standard_normal(setup_.env.action_count, train.size(), update_rng_);
  chain::LossAndGradient main = sac_actor_loss(actor_, q1_, q2_, train.states, noise, setup_.hp.entropy_alpha);

  LossTerms terms;
  terms.main = main.value;
  if (setup_.chain.regularizes_policy() && previous_actor_ && (lambda_pi_.automatic() || lambda_pi_.current() > 0.0)) {
    const replay::TransitionBatch reg = replay::to_batch(batches.reg);
    const chain::LossAndGradient churn =
        chain::policy_churn_loss(head, nn::PolicyKind::Gaussian, actor_, *previous_actor_, reg.states);
    terms.churn = churn.value;
    terms.lambda = lambda_pi_.update(terms.main, churn.value);
    terms.regularized = true;
    main.gradient += terms.lambda * churn.gradient;
  }
  terms.grad_norm = main.gradient.norm();
  previous_actor_ = actor_.snapshot();
  actor_adam_.step(actor_, main.gradient);
  return terms;
}

UpdateDiagnostics SacAgent::update(const replay::BatchTriplet& batches) {
  const replay::TransitionBatch train = replay::to_batch(batches.train);
  const nn::ParameterSnapshot critic_before = q1_.snapshot();
  UpdateDiagnostics d;
  d.value = critic_step(train, batches, &d.td_mean);
  if (q1_.update_index() % setup_.hp.actor_interval == 0) {
    const nn::ParameterSnapshot actor_before = actor_.snapshot();
    d.policy = actor_step(train, batches);
    last_joint_ = JointUpdate{actor_before, actor_.snapshot(), critic_before, q1_.snapshot()};
  }
  soft_update(q1_target_, q1_, setup_.hp.tau);
  soft_update(q2_target_, q2_, setup_.hp.tau);
  d.update_index = q1_.update_index();
  return d;
}

churn::AgentSnapshot SacAgent::churn_snapshot() const {
  return {q1_.update_index(), q1_.snapshot(), actor_.snapshot()};
}

churn::ChurnProbeSpec SacAgent::churn_probe() const {
  return {churn::ValueKind::Critic, nn::PolicyHead::SquashedGaussian, nn::PolicyKind::Gaussian};
}

}  // namespace churnlab::agents
