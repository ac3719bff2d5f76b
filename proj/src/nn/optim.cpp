#include "churnlab/nn/optim.hpp"

#include <cmath>

namespace churnlab::nn {

Adam::Adam(Eigen::Index parameter_count, AdamOptions options)
    : options_(options), m_(Vector::Zero(parameter_count)), v_(Vector::Zero(parameter_count)) {
  if (options_.lr <= 0.0) throw ConfigError("adam: learning rate must be positive");
}

void Adam::step(Mlp& net, const Vector& gradient) {
  require(gradient.size() == m_.size(), "adam: gradient size mismatch");
  ++t_;
  m_ = options_.beta1 * m_ + (1.0 - options_.beta1) * gradient;
  v_ = options_.beta2 * v_ + (1.0 - options_.beta2) * gradient.cwiseProduct(gradient);
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const double step_size = options_.lr / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);
  Vector& p = net.mutable_parameters();
  p.array() -= step_size * m_.array() / (v_.array().sqrt() / sqrt_bc2 + options_.eps);
  net.count_update();
}

void sgd_step(Mlp& net, const Vector& gradient, double lr) {
  require(gradient.size() == net.parameters().size(), "sgd: gradient size mismatch");
  net.mutable_parameters() -= lr * gradient;
  net.count_update();
}

double clip_gradient_norm(Vector& gradient, double max_norm) {
  const double norm = gradient.norm();
  if (max_norm > 0.0 && norm > max_norm) gradient *= max_norm / (norm + 1e-6);
  return norm;
}

}  // namespace churnlab::nn
