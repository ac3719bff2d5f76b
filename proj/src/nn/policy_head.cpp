#include "churnlab/nn/policy_head.hpp"

#include <cmath>
#include <numbers>

namespace churnlab::nn {

MlpSpec policy_mlp_spec(PolicyHead head, int state_dim, int action_dim, MlpSpec base) {
  base.input_dim = state_dim;
  switch (head) {
    case PolicyHead::Tanh:
      base.output_dim = action_dim;
      base.extra_params = 0;
      break;
    case PolicyHead::StateIndependentGaussian:
      base.output_dim = action_dim;
      base.extra_params = action_dim;
      break;
    case PolicyHead::SquashedGaussian:
      base.output_dim = 2 * action_dim;
      base.extra_params = 0;
      break;
  }
  return base;
}

int policy_action_dim(PolicyHead head, const MlpArchitecture& arch) {
  return head == PolicyHead::SquashedGaussian ? arch.output_dim() / 2 : arch.output_dim();
}

bool is_gaussian(PolicyHead head) { return head != PolicyHead::Tanh; }

PolicyOutput evaluate_policy(PolicyHead head, NetView net, const Matrix& states, ForwardTrace* trace) {
  PolicyOutput out;
  out.raw = net.forward(states, trace);
  switch (head) {
    case PolicyHead::Tanh:
      out.mean = out.raw.array().tanh().matrix();
      break;
    case PolicyHead::StateIndependentGaussian: {
      require(net.arch.extra_parameter_count() == net.arch.output_dim(),
              "policy: state-independent Gaussian needs one log-std parameter per action dim");
      out.mean = out.raw;
      const Vector log_std = net.params.tail(net.arch.extra_parameter_count());
      out.log_std = log_std.replicate(1, states.cols());
      break;
    }
    case PolicyHead::SquashedGaussian: {
      const Eigen::Index dim = net.arch.output_dim() / 2;
      out.mean = out.raw.topRows(dim);
      out.log_std = (kLogStdMin + 0.5 * (kLogStdMax - kLogStdMin) *
                                      (out.raw.bottomRows(dim).array().tanh() + 1.0))
                        .matrix();
      break;
    }
  }
  return out;
}

Vector policy_backward(PolicyHead head, NetView net, const ForwardTrace& trace, const PolicyOutput& out,
                       const Matrix& d_mean, const Matrix& d_log_std) {
  const Eigen::Index n = out.raw.cols();
  Matrix d_raw = Matrix::Zero(out.raw.rows(), n);
  Vector extra_grad;
  switch (head) {
    case PolicyHead::Tanh:
      if (d_mean.size() > 0) d_raw = d_mean.cwiseProduct((1.0 - out.mean.array().square()).matrix());
      break;
    case PolicyHead::StateIndependentGaussian:
      if (d_mean.size() > 0) d_raw = d_mean;
      if (d_log_std.size() > 0) extra_grad = d_log_std.rowwise().sum();
      break;
    case PolicyHead::SquashedGaussian: {
      const Eigen::Index dim = out.mean.rows();
      if (d_mean.size() > 0) d_raw.topRows(dim) = d_mean;
      if (d_log_std.size() > 0) {
        const Eigen::ArrayXXd t = out.raw.bottomRows(dim).array().tanh();
        d_raw.bottomRows(dim) =
            (d_log_std.array() * 0.5 * (kLogStdMax - kLogStdMin) * (1.0 - t.square())).matrix();
      }
      break;
    }
  }
  Vector grad = nn::backward(net.arch, net.params, trace, d_raw);
  if (extra_grad.size() > 0) grad.tail(extra_grad.size()) += extra_grad;
  return grad;
}

Matrix deterministic_action(PolicyHead head, const PolicyOutput& out) {
  if (head == PolicyHead::SquashedGaussian) return out.mean.array().tanh().matrix();
  return out.mean;
}

Vector gaussian_log_prob(const Matrix& mean, const Matrix& log_std, const Matrix& actions) {
  const Eigen::ArrayXXd z = (actions - mean).array() / log_std.array().exp();
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (-0.5 * z.square() - log_std.array() - half_log_2pi).matrix().colwise().sum().transpose();
}

Vector gaussian_kl(const Matrix& mean_p, const Matrix& log_std_p, const Matrix& mean_q,
                   const Matrix& log_std_q) {
  const Eigen::ArrayXXd var_p = (2.0 * log_std_p.array()).exp();
  const Eigen::ArrayXXd var_q = (2.0 * log_std_q.array()).exp();
  const Eigen::ArrayXXd diff = (mean_p - mean_q).array();
  const Eigen::ArrayXXd kl = log_std_q.array() - log_std_p.array() + (var_p + diff.square()) / (2.0 * var_q) - 0.5;
  return kl.matrix().colwise().sum().transpose();
}

double log_one_minus_tanh_sq(double u) {
  // 1 - tanh(u)^2 = 4 / (e^u + e^-u)^2
  const double a = std::abs(u);
  return 2.0 * (std::log(2.0) - a - std::log1p(std::exp(-2.0 * a)));
}

}  // namespace churnlab::nn
