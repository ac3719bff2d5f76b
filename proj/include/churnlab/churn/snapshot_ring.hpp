#pragma once

#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "churnlab/churn/metrics.hpp"

namespace churnlab::churn {

/// What the value network of an agent computes.
enum class ValueKind {
  DiscreteQ,   // state -> one Q per action (DDQN)
  Critic,      // (state; action) -> Q (TD3, SAC)
  StateValue,  // state -> V (PPO)
};

/// Which metrics apply to an agent's networks.
struct ChurnProbeSpec {
  ValueKind value_kind = ValueKind::DiscreteQ;
  std::optional<nn::PolicyHead> policy_head;
  nn::PolicyKind policy_kind = nn::PolicyKind::Deterministic;
};

/// Networks of one agent at one update index.
struct AgentSnapshot {
  std::int64_t update_index = 0;
  std::optional<nn::ParameterSnapshot> value;
  std::optional<nn::ParameterSnapshot> policy;
};

/// Reference states plus their stored actions; never used for training.
struct ReferenceBatch {
  Matrix states;
  Matrix actions;
};

/// Churn of the current networks against the snapshot `lag` positions back.
/// Metrics that do not apply to the agent are left empty.
struct ChurnReport {
  int lag = 0;
  std::int64_t update_index = 0;
  std::int64_t past_update_index = 0;
  std::optional<double> value_churn_signed;
  std::optional<double> value_churn_abs;
  std::optional<double> policy_churn;
  std::optional<double> policy_value_deviation;
  std::optional<double> greedy_value_churn;
  std::optional<double> greedy_action_deviation;
  std::optional<double> all_action_churn;

  /// (metric name, value) for every populated metric, in a fixed order.
  std::vector<std::pair<std::string, double>> metrics() const;
};

/// Metrics of `now` against `past`; lag is left at 0.
ChurnReport compare_snapshots(const AgentSnapshot& now, const AgentSnapshot& past, const ChurnProbeSpec& probe,
                              const ReferenceBatch& ref);

/// Ring of the last `max_lags` snapshots taken every `interval` updates.
class SnapshotRing {
 public:
  SnapshotRing(int max_lags, std::int64_t interval);

  int max_lags() const { return max_lags_; }
  std::int64_t interval() const { return interval_; }
  std::size_t size() const { return stored_.size(); }
  bool due(std::int64_t update_index) const { return update_index % interval_ == 0; }

  /// Stores a snapshot; its index must be exactly `interval` past the newest one.
  void record(AgentSnapshot snapshot);
  /// lag 1 is the most recently recorded snapshot.
  const AgentSnapshot& at_lag(int lag) const;

 private:
  int max_lags_;
  std::int64_t interval_;
  std::deque<AgentSnapshot> stored_;  // front = newest
};

/// One report per stored lag, computed against `current`. Pure: does not modify the ring.
std::vector<ChurnReport> report(const SnapshotRing& ring, const AgentSnapshot& current,
                                const ChurnProbeSpec& probe, const ReferenceBatch& ref);

/// At an update index that is a multiple of the interval: reports against the
/// stored lags, then records `current`. Otherwise returns an empty list.
std::vector<ChurnReport> record_and_report(SnapshotRing& ring, const AgentSnapshot& current,
                                           const ChurnProbeSpec& probe, const ReferenceBatch& ref);

}  // namespace churnlab::churn
