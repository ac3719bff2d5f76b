#pragma once

#include <string>
#include <vector>

#include "churnlab/ntk/probes.hpp"

namespace churnlab::ntk {

inline constexpr int kProbeStateDim = 2;
inline constexpr int kProbeActionDim = 2;
inline constexpr int kProbeWidth = 16;

/// Width-16, depth-2 critic over (state; action) and matching tanh actor.
nn::Mlp probe_critic(std::uint64_t seed);
nn::Mlp probe_actor(std::uint64_t seed);

struct ProbeRecord {
  std::string probe_name;
  double alpha = 0.0;
  NtkEstimate estimate;
};

/// "value_churn" or "policy_value_deviation".
bool is_known_probe(const std::string& name);

/// Evaluates `points` random (train, reference) pairs, each on a fresh tiny
/// network drawn from the seed. Points in [-1, 1]; TD errors standard normal.
std::vector<ProbeRecord> run_probe_session(const std::string& name, double alpha, std::uint64_t seed, int points);

}  // namespace churnlab::ntk
