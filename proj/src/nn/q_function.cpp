#include "churnlab/nn/q_function.hpp"

namespace churnlab::nn {

namespace {

int action_index(double raw, int count) {
  const int a = static_cast<int>(raw);
  require(a >= 0 && a < count && a == raw, "q: action index out of range");
  return a;
}

}  // namespace

Vector evaluate_q(QLayout layout, NetView net, const Matrix& states, const Matrix& actions,
                  ForwardTrace* trace) {
  require(states.cols() == actions.cols(), "q: states/actions batch mismatch");
  if (layout == QLayout::StateToActions) {
    require(actions.rows() == 1, "q: discrete actions must be a 1 x n index row");
    const Matrix q = net.forward(states, trace);
    Vector out(states.cols());
    for (Eigen::Index i = 0; i < states.cols(); ++i)
      out[i] = q(action_index(actions(0, i), static_cast<int>(q.rows())), i);
    return out;
  }
  require(net.arch.output_dim() == 1, "q: critic must have a scalar output");
  return net.forward(stack_rows(states, actions), trace).row(0).transpose();
}

Vector q_backward(QLayout layout, NetView net, const ForwardTrace& trace, const Matrix& actions,
                  const Vector& weights, Matrix* action_grad) {
  const Eigen::Index n = actions.cols();
  require(weights.size() == n, "q: weight vector size mismatch");
  if (layout == QLayout::StateToActions) {
    Matrix g = Matrix::Zero(net.arch.output_dim(), n);
    for (Eigen::Index i = 0; i < n; ++i) g(action_index(actions(0, i), net.arch.output_dim()), i) = weights[i];
    return backward(net.arch, net.params, trace, g);
  }
  Matrix input_grad;
  const Matrix g = weights.transpose();
  Vector grad = backward(net.arch, net.params, trace, g, action_grad ? &input_grad : nullptr);
  if (action_grad) *action_grad = input_grad.bottomRows(actions.rows());
  return grad;
}

Matrix critic_action_gradient(NetView critic, const Matrix& states, const Matrix& actions) {
  ForwardTrace trace;
  evaluate_q(QLayout::StateActionToScalar, critic, states, actions, &trace);
  Matrix action_grad;
  q_backward(QLayout::StateActionToScalar, critic, trace, actions, Vector::Ones(actions.cols()), &action_grad);
  return action_grad;
}

int argmax_lowest(const Eigen::Ref<const Vector>& values) {
  require(values.size() > 0, "argmax: empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace churnlab::nn
