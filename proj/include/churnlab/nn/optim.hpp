#pragma once

#include "churnlab/nn/mlp.hpp"

namespace churnlab::nn {

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam on a flat parameter vector. step() descends the given gradient and
/// bumps the network's update index.
class Adam {
 public:
  Adam(Eigen::Index parameter_count, AdamOptions options);

  void step(Mlp& net, const Vector& gradient);
  const AdamOptions& options() const { return options_; }
  std::int64_t steps_taken() const { return t_; }

 private:
  AdamOptions options_;
  Vector m_;
  Vector v_;
  std::int64_t t_ = 0;
};

/// Plain gradient descent: params -= lr * gradient.
void sgd_step(Mlp& net, const Vector& gradient, double lr);

/// Rescales `gradient` in place so its L2 norm is at most max_norm; returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double clip_gradient_norm(Vector& gradient, double max_norm);

}  // namespace churnlab::nn
