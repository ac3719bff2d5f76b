#pragma once

#include "churnlab/nn/policy_head.hpp"
#include "churnlab/nn/q_function.hpp"

namespace churnlab::churn {

struct ValueChurn {
  double signed_mean = 0.0;  // mean of Q_current - Q_past
  double abs_mean = 0.0;     // mean of |Q_current - Q_past|
};

/// Value churn at the stored (state, action) pairs of a reference batch.
ValueChurn value_churn(nn::QLayout layout, nn::NetView current, nn::NetView past, const Matrix& states,
                       const Matrix& actions);

/// Deterministic kind: mean L1 distance between deterministic actions (the mean
/// for Gaussian heads). Gaussian kind: mean KL(current || past).
double policy_churn(nn::PolicyHead head, nn::NetView current, nn::NetView past, const Matrix& states,
                    nn::PolicyKind kind);

/// Fraction of states whose greedy action differs (lowest-index tie-break).
double greedy_action_deviation(nn::NetView current, nn::NetView past, const Matrix& states);

/// Mean of max_a Q_current(s, a) - max_a Q_past(s, a).
double greedy_value_churn(nn::NetView current, nn::NetView past, const Matrix& states);

/// Mean over states of the action-averaged |Q_current(s, a) - Q_past(s, a)|.
double all_action_churn(nn::NetView current, nn::NetView past, const Matrix& states);

/// Mean of Q(s, pi_current(s)) - Q(s, pi_past(s)), both under the same critic.
double policy_value_deviation(nn::NetView critic, nn::PolicyHead head, nn::NetView policy_current,
                              nn::NetView policy_past, const Matrix& states);

}  // namespace churnlab::churn
