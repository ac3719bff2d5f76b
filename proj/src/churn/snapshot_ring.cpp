#include "churnlab/churn/snapshot_ring.hpp"

namespace churnlab::churn {

std::vector<std::pair<std::string, double>> ChurnReport::metrics() const {
  std::vector<std::pair<std::string, double>> out;
  const auto add = [&out](const char* name, const std::optional<double>& v) {
    if (v) out.emplace_back(name, *v);
  };
  add("value_churn_signed", value_churn_signed);
  add("value_churn_abs", value_churn_abs);
  add("policy_churn", policy_churn);
  add("policy_value_deviation", policy_value_deviation);
  add("greedy_value_churn", greedy_value_churn);
  add("greedy_action_deviation", greedy_action_deviation);
  add("all_action_churn", all_action_churn);
  return out;
}

SnapshotRing::SnapshotRing(int max_lags, std::int64_t interval) : max_lags_(max_lags), interval_(interval) {
  if (max_lags < 1) throw ConfigError("snapshot ring: max_lags must be >= 1");
  if (interval < 1) throw ConfigError("snapshot ring: interval must be >= 1");
}

void SnapshotRing::record(AgentSnapshot snapshot) {
  if (!stored_.empty())
    require(snapshot.update_index == stored_.front().update_index + interval_,
            "snapshot ring: snapshots must be exactly one interval apart");
  stored_.push_front(std::move(snapshot));
  if (static_cast<int>(stored_.size()) > max_lags_) stored_.pop_back();
}

const AgentSnapshot& SnapshotRing::at_lag(int lag) const {
  require(lag >= 1 && lag <= static_cast<int>(stored_.size()), "snapshot ring: lag out of range");
  return stored_[static_cast<std::size_t>(lag - 1)];
}

ChurnReport compare_snapshots(const AgentSnapshot& now, const AgentSnapshot& past, const ChurnProbeSpec& probe,
                    const ReferenceBatch& ref) {
  ChurnReport r;
  r.update_index = now.update_index;
  r.past_update_index = past.update_index;
  if (now.value && past.value) {
    const nn::NetView cur(*now.value);
    const nn::NetView old(*past.value);
    switch (probe.value_kind) {
      case ValueKind::DiscreteQ: {
        const ValueChurn vc = value_churn(nn::QLayout::StateToActions, cur, old, ref.states, ref.actions);
        r.value_churn_signed = vc.signed_mean;
        r.value_churn_abs = vc.abs_mean;
        r.greedy_value_churn = greedy_value_churn(cur, old, ref.states);
        r.greedy_action_deviation = greedy_action_deviation(cur, old, ref.states);
        r.all_action_churn = all_action_churn(cur, old, ref.states);
        break;
      }
      case ValueKind::Critic: {
        const ValueChurn vc = value_churn(nn::QLayout::StateActionToScalar, cur, old, ref.states, ref.actions);
        r.value_churn_signed = vc.signed_mean;
        r.value_churn_abs = vc.abs_mean;
        break;
      }
      case ValueKind::StateValue: {
        const Matrix zeros = Matrix::Zero(1, ref.states.cols());
        const ValueChurn vc = value_churn(nn::QLayout::StateToActions, cur, old, ref.states, zeros);
        r.value_churn_signed = vc.signed_mean;
        r.value_churn_abs = vc.abs_mean;
        break;
      }
    }
  }
  if (probe.policy_head && now.policy && past.policy) {
    r.policy_churn = policy_churn(*probe.policy_head, *now.policy, *past.policy, ref.states, probe.policy_kind);
    if (probe.value_kind == ValueKind::Critic && now.value)
      r.policy_value_deviation =
          policy_value_deviation(*now.value, *probe.policy_head, *now.policy, *past.policy, ref.states);
  }
  return r;
}

std::vector<ChurnReport> report(const SnapshotRing& ring, const AgentSnapshot& current,
                                const ChurnProbeSpec& probe, const ReferenceBatch& ref) {
  std::vector<ChurnReport> out;
  out.reserve(ring.size());
  for (int lag = 1; lag <= static_cast<int>(ring.size()); ++lag) {
    ChurnReport r = compare_snapshots(current, ring.at_lag(lag), probe, ref);
    r.lag = lag;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ChurnReport> record_and_report(SnapshotRing& ring, const AgentSnapshot& current,
                                           const ChurnProbeSpec& probe, const ReferenceBatch& ref) {
  if (!ring.due(current.update_index)) return {};
  std::vector<ChurnReport> out = report(ring, current, probe, ref);
  ring.record(current);
  return out;
}

}  // namespace churnlab::churn
