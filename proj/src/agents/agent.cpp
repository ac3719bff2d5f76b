#include "churnlab/agents/agent.hpp"

#include <cmath>

#include "churnlab/agents/ddqn.hpp"
#include "churnlab/agents/ppo.hpp"
#include "churnlab/agents/sac.hpp"
#include "churnlab/agents/td3.hpp"

namespace churnlab::agents {

std::int64_t AgentHyperparams::scaled_random_steps() const {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(initial_random_steps) * schedule_scale));
}

std::int64_t AgentHyperparams::scaled_epsilon_decay() const {
  return std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(static_cast<double>(epsilon_decay_steps) * schedule_scale)));
}

void AgentHyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("hyperparams.gamma must be in [0, 1)");
  if (lr_actor <= 0.0 || lr_critic <= 0.0) throw ConfigError("hyperparams: learning rates must be positive");
  if (batch_size < 1) throw ConfigError("hyperparams.batch_size must be >= 1");
  if (reg_batch_size < 0) throw ConfigError("hyperparams.reg_batch_size must be >= 0");
  if (buffer_capacity < 1) throw ConfigError("hyperparams.buffer_capacity must be >= 1");
  if (train_interval < 1) throw ConfigError("hyperparams.train_interval must be >= 1");
  if (initial_random_steps < 0) throw ConfigError("hyperparams.initial_random_steps must be >= 0");
  if (schedule_scale <= 0.0) throw ConfigError("hyperparams.schedule_scale must be > 0");
  if (target_sync_interval < 1) throw ConfigError("hyperparams.target_sync_interval must be >= 1");
  if (epsilon_decay_steps < 1) throw ConfigError("hyperparams.epsilon_decay_steps must be >= 1");
  if (rollout_length < 2) throw ConfigError("hyperparams.rollout_length must be >= 2");
  if (minibatches < 1 || minibatches > rollout_length)
    throw ConfigError("hyperparams.minibatches must be in [1, rollout_length]");
  if (update_epochs < 1) throw ConfigError("hyperparams.update_epochs must be >= 1");
  if (clip_epsilon <= 0.0) throw ConfigError("hyperparams.clip_epsilon must be > 0");
  if (gae_lambda < 0.0 || gae_lambda > 1.0) throw ConfigError("hyperparams.gae_lambda must be in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("hyperparams.tau must be in (0, 1]");
  if (actor_interval < 1) throw ConfigError("hyperparams.actor_interval must be >= 1");
  if (entropy_alpha < 0.0) throw ConfigError("hyperparams.entropy_alpha must be >= 0");
  if (probe_batch_size < 1) throw ConfigError("hyperparams.probe_batch_size must be >= 1");
}

bool is_known_agent(const std::string& agent) {
  return agent == "ddqn" || agent == "ppo" || agent == "td3" || agent == "sac";
}

AgentHyperparams default_hyperparams(const std::string& agent) {
  AgentHyperparams hp;
  if (agent == "ddqn") return hp;
  if (agent == "ppo") {
    hp.batch_size = hp.rollout_length / hp.minibatches;
    hp.buffer_capacity = 8192;
    hp.initial_random_steps = 0;
    hp.adam_eps = 1e-5;
    return hp;
  }
  if (agent == "td3" || agent == "sac") {
    hp.batch_size = 256;
    hp.buffer_capacity = 1000000;
    hp.initial_random_steps = 5000;
    hp.actor_interval = agent == "td3" ? 2 : 1;
    return hp;
  }
  throw ConfigError("agent: unknown agent '" + agent + "' (expected ddqn|ppo|td3|sac)");
}

std::uint64_t network_seed(std::uint64_t seed, int index) {
  Rng rng = make_rng(seed, kInitStream + static_cast<std::uint64_t>(index));
  return rng();
}

std::optional<double> LossTerms::realized_ratio() const {
  if (!regularized || main == 0.0) return std::nullopt;
  return lambda * std::abs(churn) / std::abs(main);
}

nn::MlpSpec network_spec(const AgentSetup& setup, int input_dim, int output_dim) {
  nn::MlpSpec spec = setup.network;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  spec.extra_params = 0;
  spec.validate();
  return spec;
}

double scaled_lr(const AgentSetup& setup, double base_lr) {
  return nn::effective_learning_rate({base_lr, setup.lr_mode}, setup.network.scale_up_ratio);
}

Vector uniform_action(const env::EnvSpec& spec, Rng& rng) {
  if (spec.action_kind == env::ActionKind::Discrete) {
    std::uniform_int_distribution<int> pick(0, spec.action_count - 1);
    return Vector::Constant(1, static_cast<double>(pick(rng)));
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector a(spec.action_count);
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = u(rng);
  return a;
}

replay::BatchTriplet sample_update_batches(const replay::ReplayBuffer& buffer, const AgentHyperparams& hp,
                                           bool with_reg, Rng& sample_rng, Rng& reg_rng) {
  replay::BatchTriplet out;
  out.train = replay::sample_batch(buffer, static_cast<std::size_t>(hp.batch_size), sample_rng);
  if (with_reg) out.reg = replay::sample_batch(buffer, static_cast<std::size_t>(hp.effective_reg_batch()), reg_rng);
  return out;
}

std::unique_ptr<Agent> make_agent(const std::string& name, const AgentSetup& setup) {
  if (name == "ddqn") return std::make_unique<DdqnAgent>(setup);
  if (name == "ppo") return std::make_unique<PpoAgent>(setup);
  if (name == "td3") return std::make_unique<Td3Agent>(setup);
  if (name == "sac") return std::make_unique<SacAgent>(setup);
  throw ConfigError("agent: unknown agent '" + name + "' (expected ddqn|ppo|td3|sac)");
}

}  // namespace churnlab::agents
