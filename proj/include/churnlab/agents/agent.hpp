#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "churnlab/chain/chain.hpp"
#include "churnlab/churn/snapshot_ring.hpp"
#include "churnlab/env/environment.hpp"
#include "churnlab/replay/replay_buffer.hpp"

namespace churnlab::agents {

/// Union of the hyperparameters used by the four agents. default_hyperparams()
/// fills the published defaults for a given agent.
struct AgentHyperparams {
  double gamma = 0.99;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  int batch_size = 32;
  int reg_batch_size = 0;  // 0: same as batch_size
  std::size_t buffer_capacity = 500000;
  int train_interval = 1;
  std::int64_t initial_random_steps = 10000;
  // Multiplies initial_random_steps and epsilon_decay_steps for toy budgets.
  double schedule_scale = 1.0;

  // DoubleDQN
  int target_sync_interval = 1000;
  double epsilon_initial = 1.0;
  double epsilon_final = 0.1;
  std::int64_t epsilon_decay_steps = 500000;

  // PPO
  int rollout_length = 2048;
  int minibatches = 32;
  int update_epochs = 10;
  double clip_epsilon = 0.1;
  double gae_lambda = 0.95;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double adam_eps = 1e-8;
  int probe_batch_size = 256;

  // TD3 / SAC
  double tau = 0.005;
  int actor_interval = 2;
  double exploration_noise = 0.1;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  double entropy_alpha = 0.2;

  std::int64_t scaled_random_steps() const;
  std::int64_t scaled_epsilon_decay() const;
  int effective_reg_batch() const { return reg_batch_size > 0 ? reg_batch_size : batch_size; }
  void validate() const;
};

/// Published defaults for "ddqn", "ppo", "td3" or "sac". Throws ConfigError otherwise.
AgentHyperparams default_hyperparams(const std::string& agent);
bool is_known_agent(const std::string& agent);

struct AgentSetup {
  env::EnvSpec env;
  AgentHyperparams hp;
  chain::ChainConfig chain;
  nn::MlpSpec network;  // input/output dims are filled in by each agent
  nn::LrMode lr_mode = nn::LrMode::Sqrt;
  std::uint64_t seed = 0;
};

// Rng stream ids derived from AgentSetup::seed.
inline constexpr std::uint64_t kActStream = 0x61637400;
inline constexpr std::uint64_t kSampleStream = 0x73616d70;
inline constexpr std::uint64_t kUpdateStream = 0x75706474;
inline constexpr std::uint64_t kRegStream = 0x72656700;
inline constexpr std::uint64_t kProbeStream = 0x70726f62;
inline constexpr std::uint64_t kInitStream = 0x696e6974;

/// Seed for the i-th network of an agent.
std::uint64_t network_seed(std::uint64_t seed, int index);

/// One gradient step's objective terms for one network.
struct LossTerms {
  double main = 0.0;       // L_Q, or the actor loss -J
  double churn = 0.0;      // L_QC / L_PC on B_reg (0 when not computed)
  double lambda = 0.0;     // coefficient applied this step
  double grad_norm = 0.0;  // norm of the applied gradient before clipping
  bool regularized = false;

  /// lambda * |churn| / |main|; empty when not regularized or main is 0.
  std::optional<double> realized_ratio() const;
};

struct TrustRegionStats {
  double mean_abs_ratio_deviation = 0.0;  // mean |r(old, new) - 1|
  double violation_fraction = 0.0;        // fraction outside [1 - eps, 1 + eps]
  int states = 0;
};

struct UpdateDiagnostics {
  std::int64_t update_index = 0;  // index after this update
  std::optional<LossTerms> value;
  std::optional<LossTerms> policy;
  double td_mean = 0.0;
  std::optional<TrustRegionStats> trust_region;
};

using UpdateHook = std::function<void(const UpdateDiagnostics&)>;

/// Online agent driven by the runner: act, then observe the outcome. Updates
/// happen inside observe() and are reported through the hook one at a time,
/// so the caller can inspect the networks after each update.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string name() const = 0;
  /// Exploratory action (warm-up randomness, epsilon-greedy, noise or sampling).
  virtual Vector act(const Vector& observation) = 0;
  /// Exploration-free action for evaluation.
  virtual Vector act_greedy(const Vector& observation) const = 0;
  virtual void observe(const replay::Transition& transition, bool episode_done) = 0;

  virtual std::int64_t update_count() const = 0;
  virtual churn::AgentSnapshot churn_snapshot() const = 0;
  virtual churn::ChurnProbeSpec churn_probe() const = 0;
  /// Source of reference states for churn measurement.
  virtual const replay::ReplayBuffer& replay() const = 0;

  void set_update_hook(UpdateHook hook) { hook_ = std::move(hook); }

 protected:
  void emit(const UpdateDiagnostics& d) const {
    if (hook_) hook_(d);
  }

 private:
  UpdateHook hook_;
};

std::unique_ptr<Agent> make_agent(const std::string& name, const AgentSetup& setup);

/// Shared helpers for agents.
nn::MlpSpec network_spec(const AgentSetup& setup, int input_dim, int output_dim);
double scaled_lr(const AgentSetup& setup, double base_lr);
Vector uniform_action(const env::EnvSpec& spec, Rng& rng);

/// Training batch from sample_rng. The regularization batch is drawn from
/// reg_rng only when with_reg is set; otherwise it stays empty.
replay::BatchTriplet sample_update_batches(const replay::ReplayBuffer& buffer, const AgentHyperparams& hp,
                                           bool with_reg, Rng& sample_rng, Rng& reg_rng);

}  // namespace churnlab::agents
