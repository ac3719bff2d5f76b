#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "churnlab/agents/agent.hpp"

namespace churnlab::runner {

struct RingConfig {
  int max_lags = 20;
  std::int64_t interval = 1000;
};

struct EvalConfig {
  int episodes = 10;
  double every_fraction = 0.05;  // of total_steps
};

/// Value grids expanded into one run condition per combination.
struct SweepConfig {
  std::vector<double> lr;   // replaces both lr_actor and lr_critic
  std::vector<double> tau;

  bool empty() const { return lr.empty() && tau.empty(); }
};

struct ExperimentConfig {
  std::string agent;
  std::string env;
  std::string condition;  // label used in logs and summaries; defaults to "<agent>-<chain mode>"
  agents::AgentHyperparams hyperparams;
  chain::ChainConfig chain;
  nn::MlpSpec network;
  nn::LrMode lr_rule = nn::LrMode::Sqrt;
  std::int64_t total_steps = 0;
  std::int64_t metric_interval = 1000;  // env steps between diagnostics records and flushes
  RingConfig snapshot_ring;
  int reference_batch = 256;
  // Single-update churn is measured on one update out of every update_churn_every (0: off).
  int update_churn_every = 100;
  bool kernel_rank = false;  // log effective NTK rank of the value network at each churn report
  EvalConfig eval;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  SweepConfig sweep;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Builds a config from JSON. Agent hyperparameters start from the agent's
/// published defaults; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// output_dir, prefixed with $CHURNLAB_OUTPUT_ROOT when that is set and output_dir is relative.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// One config per sweep grid point (the config itself when there is no sweep).
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config);

nn::LrMode parse_lr_mode(const std::string& name);
std::string to_string(nn::LrMode mode);

}  // namespace churnlab::runner
