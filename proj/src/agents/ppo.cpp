#include "churnlab/agents/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace churnlab::agents {

GaeResult compute_gae(const TrajectorySegment& segment, double gamma, double lambda) {
  const auto n = static_cast<Eigen::Index>(segment.steps.size());
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_advantage = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const SegmentStep& s = segment.steps[static_cast<std::size_t>(t)];
    const double next_value = t == n - 1 ? segment.bootstrap_value : segment.steps[static_cast<std::size_t>(t + 1)].value;
    const double live = s.done ? 0.0 : 1.0;
    const double delta = s.reward + gamma * next_value * live - s.value;
    next_advantage = delta + gamma * lambda * live * next_advantage;
    out.advantages[t] = next_advantage;
    out.returns[t] = next_advantage + s.value;
  }
  return out;
}

SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  const double unclipped_term = ratio * advantage;
  const double clipped_term = clipped * advantage;
  if (unclipped_term <= clipped_term) return {unclipped_term, advantage};
  return {clipped_term, 0.0};
}

Vector policy_log_ratio(nn::PolicyHead head, nn::NetView policy_old, nn::NetView policy_new, const Matrix& states,
                        const Matrix& actions) {
  require(head == nn::PolicyHead::StateIndependentGaussian, "log ratio: needs an unsquashed Gaussian policy");
  const nn::PolicyOutput o = nn::evaluate_policy(head, policy_old, states);
  const nn::PolicyOutput c = nn::evaluate_policy(head, policy_new, states);
  return nn::gaussian_log_prob(c.mean, c.log_std, actions) - nn::gaussian_log_prob(o.mean, o.log_std, actions);
}

TrustRegionStats trust_region_violation_probe(nn::PolicyHead head, nn::NetView policy_old, nn::NetView policy_new,
                                              const Matrix& states, const Matrix& actions, double clip_epsilon) {
  require(states.cols() > 0, "trust region probe: empty state batch");
  const Vector log_ratio = policy_log_ratio(head, policy_old, policy_new, states, actions);
  TrustRegionStats s;
  s.states = static_cast<int>(states.cols());
  int outside = 0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < log_ratio.size(); ++i) {
    const double r = std::exp(log_ratio[i]);
    total += std::abs(r - 1.0);
    if (r < 1.0 - clip_epsilon || r > 1.0 + clip_epsilon) ++outside;
  }
  s.mean_abs_ratio_deviation = total / static_cast<double>(s.states);
  s.violation_fraction = static_cast<double>(outside) / static_cast<double>(s.states);
  return s;
}

namespace {

nn::Mlp build_actor(const AgentSetup& setup) {
  require(setup.env.action_kind == env::ActionKind::Continuous, "ppo: needs a continuous action space");
  nn::MlpSpec spec = network_spec(setup, setup.env.state_dim, setup.env.action_count);
  spec = nn::policy_mlp_spec(nn::PolicyHead::StateIndependentGaussian, setup.env.state_dim, setup.env.action_count,
                             spec);
  return nn::build_mlp(spec, network_seed(setup.seed, 0));
}

nn::AdamOptions adam_options(const AgentSetup& setup, double lr) {
  return {.lr = scaled_lr(setup, lr), .eps = setup.hp.adam_eps};
}

Matrix gather(const TrajectorySegment& seg, const std::vector<std::size_t>& idx, bool actions) {
  const auto& first = seg.steps.front();
  Matrix m(actions ? first.action.size() : first.state.size(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    m.col(static_cast<Eigen::Index>(i)) = actions ? seg.steps[idx[i]].action : seg.steps[idx[i]].state;
  return m;
}

}  // namespace

PpoAgent::PpoAgent(const AgentSetup& setup)
    : setup_(setup),
      actor_(build_actor(setup)),
      critic_(nn::build_mlp(network_spec(setup, setup.env.state_dim, 1), network_seed(setup.seed, 1))),
      actor_adam_(actor_.parameters().size(), adam_options(setup, setup.hp.lr_actor)),
      critic_adam_(critic_.parameters().size(), adam_options(setup, setup.hp.lr_critic)),
      lambda_pi_(setup.chain.regularizes_policy() ? setup.chain.lambda_pi : 0.0,
                 setup.chain.regularizes_policy() && setup.chain.auto_lambda, setup.chain.beta,
                 setup.chain.running_decay),
      lambda_v_(setup.chain.regularizes_value() ? setup.chain.lambda_q : 0.0,
                setup.chain.regularizes_value() && setup.chain.auto_lambda, setup.chain.beta,
                setup.chain.running_decay),
      buffer_(setup.hp.buffer_capacity),
      act_rng_(make_rng(setup.seed, kActStream)),
      update_rng_(make_rng(setup.seed, kUpdateStream)),
      reg_rng_(make_rng(setup.seed, kRegStream)),
      probe_rng_(make_rng(setup.seed, kProbeStream)) {
  setup_.hp.validate();
  setup_.chain.validate();
}

Vector PpoAgent::act(const Vector& observation) {
  const nn::PolicyOutput out = nn::evaluate_policy(nn::PolicyHead::StateIndependentGaussian, actor_, observation);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector a(out.mean.rows());
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = out.mean(i, 0) + std::exp(out.log_std(i, 0)) * normal(act_rng_);
  last_log_prob_ = nn::gaussian_log_prob(out.mean, out.log_std, a)[0];
  last_value_ = critic_.forward(observation)(0, 0);
  return a;
}

Vector PpoAgent::act_greedy(const Vector& observation) const {
  return nn::evaluate_policy(nn::PolicyHead::StateIndependentGaussian, actor_, observation).mean.col(0);
}

void PpoAgent::observe(const replay::Transition& transition, bool episode_done) {
  segment_.steps.push_back(
      {transition.state, transition.action, last_log_prob_, transition.reward, last_value_, episode_done});
  pending_.push_back(transition);
  if (static_cast<int>(segment_.steps.size()) < setup_.hp.rollout_length) return;
  segment_.bootstrap_value = episode_done ? 0.0 : critic_.forward(transition.next_state)(0, 0);
  update_segment(segment_);
  for (replay::Transition& t : pending_) buffer_.push(std::move(t));
  pending_.clear();
  segment_ = {};
}

Matrix PpoAgent::reg_states(const TrajectorySegment& segment) {
  const auto idx = replay::sample_indices(segment.steps.size(),
                                          std::min<std::size_t>(segment.steps.size(), setup_.hp.effective_reg_batch()),
                                          reg_rng_);
  return gather(segment, idx, false);
}

LossTerms PpoAgent::actor_step(const Matrix& states, const Matrix& actions, const Vector& old_log_prob,
                               const Vector& advantages, const TrajectorySegment& segment) {
  constexpr auto head = nn::PolicyHead::StateIndependentGaussian;
  nn::ForwardTrace trace;
  const nn::PolicyOutput out = nn::evaluate_policy(head, actor_, states, &trace);
  const Vector log_prob = nn::gaussian_log_prob(out.mean, out.log_std, actions);
  const double m = static_cast<double>(states.cols());

  LossTerms terms;
  Vector d_log_prob(states.cols());
  double objective = 0.0;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const double ratio = std::exp(log_prob[i] - old_log_prob[i]);
    const SurrogateTerm s = clipped_surrogate(ratio, advantages[i], setup_.hp.clip_epsilon);
    objective += s.value;
    d_log_prob[i] = -s.d_ratio * ratio / m;
  }
  terms.main = -objective / m;
  const Eigen::ArrayXXd inv_std = (-out.log_std.array()).exp();
  const Eigen::ArrayXXd z = (actions - out.mean).array() * inv_std;
  const Matrix d_mean = (z * inv_std).matrix() * d_log_prob.asDiagonal();
  const Matrix d_log_std = (z.square() - 1.0).matrix() * d_log_prob.asDiagonal();
  Vector grad = nn::policy_backward(head, actor_, trace, out, d_mean, d_log_std);

  if (setup_.chain.regularizes_policy() && previous_actor_ && (lambda_pi_.automatic() || lambda_pi_.current() > 0.0)) {
    const chain::LossAndGradient churn =
        chain::policy_churn_loss(head, nn::PolicyKind::Gaussian, actor_, *previous_actor_, reg_states(segment));
    terms.churn = churn.value;
    terms.lambda = lambda_pi_.update(terms.main, churn.value);
    terms.regularized = true;
    grad += terms.lambda * churn.gradient;
  }
  terms.grad_norm = nn::clip_gradient_norm(grad, setup_.hp.max_grad_norm);
  previous_actor_ = actor_.snapshot();
  actor_adam_.step(actor_, grad);
  return terms;
}

LossTerms PpoAgent::critic_step(const Matrix& states, const Vector& returns, const TrajectorySegment& segment) {
  nn::ForwardTrace trace;
  const Matrix v = critic_.forward(states, &trace);
  const Vector err = v.row(0).transpose() - returns;
  const double m = static_cast<double>(states.cols());
  const double c = setup_.hp.value_coef;

  LossTerms terms;
  terms.main = c * err.squaredNorm() / m;
  Vector grad = critic_.backward(trace, (2.0 * c / m) * err.transpose());

  if (setup_.chain.regularizes_value() && previous_critic_ && (lambda_v_.automatic() || lambda_v_.current() > 0.0)) {
    const Matrix reg = reg_states(segment);
    const chain::LossAndGradient churn = chain::value_churn_loss(nn::QLayout::StateToActions, critic_,
                                                                 *previous_critic_, reg, Matrix::Zero(1, reg.cols()));
    terms.churn = churn.value;
    terms.lambda = lambda_v_.update(terms.main, churn.value);
    terms.regularized = true;
    grad += terms.lambda * churn.gradient;
  }
  terms.grad_norm = nn::clip_gradient_norm(grad, setup_.hp.max_grad_norm);
  previous_critic_ = critic_.snapshot();
  critic_adam_.step(critic_, grad);
  return terms;
}

std::vector<UpdateDiagnostics> PpoAgent::update_segment(const TrajectorySegment& segment) {
  const AgentHyperparams& hp = setup_.hp;
  const std::size_t n = segment.steps.size();
  require(n >= static_cast<std::size_t>(hp.minibatches), "ppo: segment shorter than the minibatch count");
  const GaeResult gae = compute_gae(segment, hp.gamma, hp.gae_lambda);

  double td_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const SegmentStep& s = segment.steps[t];
    const double next_value = t + 1 == n ? segment.bootstrap_value : segment.steps[t + 1].value;
    td_sum += s.reward + hp.gamma * next_value * (s.done ? 0.0 : 1.0) - s.value;
  }
  const double td_mean = td_sum / static_cast<double>(n);

  const nn::ParameterSnapshot collecting = actor_.snapshot();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t mb = n / static_cast<std::size_t>(hp.minibatches);
  std::vector<UpdateDiagnostics> out;

  for (int epoch = 0; epoch < hp.update_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), update_rng_);
    const double mean = gae.advantages.mean();
    const double var = (gae.advantages.array() - mean).square().sum() / static_cast<double>(std::max<std::size_t>(n - 1, 1));
    const Vector adv = ((gae.advantages.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();

    for (int b = 0; b < hp.minibatches; ++b) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b * mb),
                                         order.begin() + static_cast<std::ptrdiff_t>((b + 1) * mb));
      const Matrix states = gather(segment, idx, false);
      const Matrix actions = gather(segment, idx, true);
      Vector old_log_prob(static_cast<Eigen::Index>(mb)), mb_adv(static_cast<Eigen::Index>(mb)),
          mb_ret(static_cast<Eigen::Index>(mb));
      for (std::size_t i = 0; i < mb; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        old_log_prob[k] = segment.steps[idx[i]].log_prob;
        mb_adv[k] = adv[static_cast<Eigen::Index>(idx[i])];
        mb_ret[k] = gae.returns[static_cast<Eigen::Index>(idx[i])];
      }
      UpdateDiagnostics d;
      d.policy = actor_step(states, actions, old_log_prob, mb_adv, segment);
      d.value = critic_step(states, mb_ret, segment);
      d.update_index = actor_.update_index();
      d.td_mean = td_mean;
      const bool last = epoch + 1 == hp.update_epochs && b + 1 == hp.minibatches;
      if (last && !buffer_.empty()) {
        const std::size_t k = std::min<std::size_t>(buffer_.size(), static_cast<std::size_t>(hp.probe_batch_size));
        const replay::TransitionBatch held = replay::to_batch(replay::sample_batch(buffer_, k, probe_rng_));
        d.trust_region = trust_region_violation_probe(nn::PolicyHead::StateIndependentGaussian, collecting, actor_,
                                                      held.states, held.actions, hp.clip_epsilon);
      }
      emit(d);
      out.push_back(d);
    }
  }
  return out;
}

churn::AgentSnapshot PpoAgent::churn_snapshot() const {
  return {actor_.update_index(), critic_.snapshot(), actor_.snapshot()};
}

churn::ChurnProbeSpec PpoAgent::churn_probe() const {
  return {churn::ValueKind::StateValue, nn::PolicyHead::StateIndependentGaussian, nn::PolicyKind::Deterministic};
}

}  // namespace churnlab::agents
