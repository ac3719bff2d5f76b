#pragma once

#include <cmath>
#include <functional>

#include "churnlab/common.hpp"
#include "churnlab/nn/mlp.hpp"

namespace churnlab::oracle {

inline Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Vector uniform_vector(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return uniform_matrix(n, 1, rng, lo, hi).col(0);
}

/// Central differences of f around x.
inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Vector& a, const Vector& b, double floor = 1e-10) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

/// Network with the given parameters replaced, same architecture.
inline nn::Mlp with_params(const nn::Mlp& net, const Vector& params) {
  return nn::Mlp(net.architecture_ptr(), params, net.update_index());
}

inline nn::MlpSpec tiny_spec(int input, int output, int width = 8, int depth = 2) {
  nn::MlpSpec s;
  s.input_dim = input;
  s.output_dim = output;
  s.base_width = width;
  s.base_depth = depth;
  return s;
}

/// Perturbs every parameter by U(-scale, scale): pushes biases away from zero
/// so rectifier kinks sit away from finite-difference stencils.
inline nn::Mlp jittered(nn::Mlp net, Rng& rng, double scale = 0.3) {
  net.mutable_parameters() += uniform_vector(net.parameters().size(), rng, -scale, scale);
  return net;
}

}  // namespace churnlab::oracle

namespace churnlab::oracle {

/// Network whose output on the one-hot input e_i is column i of `table`
/// (identity hidden layer, so the rectifier is inactive).
inline nn::Mlp table_net(const Matrix& table, int extra_params = 0) {
  const int n = static_cast<int>(table.cols());
  nn::MlpSpec spec = tiny_spec(n, static_cast<int>(table.rows()), n, 1);
  spec.extra_params = extra_params;
  auto arch = std::make_shared<const nn::MlpArchitecture>(spec);
  Vector p = Vector::Zero(arch->parameter_count());
  const Eigen::Index w0 = arch->weight_offset(0);
  p.segment(w0, static_cast<Eigen::Index>(n) * n) = Matrix::Identity(n, n).reshaped();
  const Eigen::Index w1 = arch->weight_offset(1);
  p.segment(w1, table.size()) = table.reshaped();
  return nn::Mlp(arch, p);
}

inline Matrix one_hot_states(int n) { return Matrix::Identity(n, n); }

}  // namespace churnlab::oracle
