#pragma once

#include <optional>

#include "churnlab/nn/policy_head.hpp"

namespace churnlab::agents {

/// Actor and critic before and after one joint update.
struct JointUpdate {
  nn::ParameterSnapshot actor_before;
  nn::ParameterSnapshot actor_after;
  nn::ParameterSnapshot critic_before;
  nn::ParameterSnapshot critic_after;
};

/// total = mean Q'(s, pi'(s)) - Q(s, pi(s)), split exactly into
///   value_term  = Q'(s, pi(s))  - Q(s, pi(s))
///   policy_term = Q(s, pi'(s))  - Q(s, pi(s))
///   cross       = total - value_term - policy_term
struct DualBias {
  double total = 0.0;
  double value_term = 0.0;
  double policy_term = 0.0;
  double cross = 0.0;
};

DualBias dual_bias_probe(nn::PolicyHead head, const JointUpdate& update, const Matrix& states);

}  // namespace churnlab::agents
