#pragma once

#include "churnlab/nn/mlp.hpp"

namespace churnlab::nn {

/// StateToActions: discrete-action Q network, one output per action.
/// StateActionToScalar: critic over the row-stacked (state; action) input.
enum class QLayout { StateToActions, StateActionToScalar };

/// Q(s_i, a_i) for each column. For StateToActions, actions is 1 x n holding indices.
Vector evaluate_q(QLayout layout, NetView net, const Matrix& states, const Matrix& actions,
                  ForwardTrace* trace = nullptr);

/// Gradient w.r.t. parameters of sum_i weights_i * Q(s_i, a_i) given the trace of
/// evaluate_q. For critics, action_grad (if set) receives d/d(actions).
Vector q_backward(QLayout layout, NetView net, const ForwardTrace& trace, const Matrix& actions,
                  const Vector& weights, Matrix* action_grad = nullptr);

/// Per-column gradient of a critic's output w.r.t. the action input.
Matrix critic_action_gradient(NetView critic, const Matrix& states, const Matrix& actions);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax_lowest(const Eigen::Ref<const Vector>& values);

}  // namespace churnlab::nn
