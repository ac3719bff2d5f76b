#include <gtest/gtest.h>

#include <cmath>

#include "churnlab/nn/mlp.hpp"
#include "churnlab/nn/optim.hpp"
#include "churnlab/nn/policy_head.hpp"
#include "churnlab/nn/q_function.hpp"
#include "oracles.hpp"

using namespace churnlab;
using namespace churnlab::nn;
using churnlab::oracle::central_difference;
using churnlab::oracle::relative_error;
using churnlab::oracle::tiny_spec;
using churnlab::oracle::uniform_matrix;
using churnlab::oracle::with_params;

TEST(MlpSpec, ParameterCountForDefaultShape) {
  MlpSpec s;
  s.input_dim = 4;
  s.output_dim = 2;
  const MlpArchitecture arch(s);
  EXPECT_EQ(arch.parameter_count(), 4 * 256 + 256 + 256 * 256 + 256 + 256 * 2 + 2);
  EXPECT_EQ(arch.parameter_count(), 67586);
}

TEST(MlpSpec, WidenAndDeepen) {
  MlpSpec s;
  s.scale_up_ratio = 4;
  EXPECT_EQ(s.hidden_width(), 1024);
  EXPECT_EQ(s.hidden_depth(), 2);
  s.scale_mode = ScaleMode::Deepen;
  EXPECT_EQ(s.hidden_width(), 256);
  EXPECT_EQ(s.hidden_depth(), 8);
}

TEST(MlpSpec, RejectsUnsupportedRatio) {
  MlpSpec s;
  s.scale_up_ratio = 3;
  EXPECT_THROW(s.validate(), ConfigError);
  s.scale_up_ratio = 16;
  EXPECT_NO_THROW(s.validate());
}

TEST(Mlp, SameSeedSameParameters) {
  const MlpSpec s = tiny_spec(3, 2, 16);
  EXPECT_EQ(build_mlp(s, 7).parameters(), build_mlp(s, 7).parameters());
  EXPECT_NE(build_mlp(s, 7).parameters(), build_mlp(s, 8).parameters());
}

TEST(Mlp, InitWithinFanInBound) {
  const Mlp net = build_mlp(tiny_spec(3, 2, 16), 1);
  const auto& arch = net.architecture();
  for (int l = 0; l < arch.layer_count(); ++l) {
    const int fan_in = arch.layer_sizes()[l];
    const int fan_out = arch.layer_sizes()[l + 1];
    const Eigen::Index n = static_cast<Eigen::Index>(fan_in) * fan_out + fan_out;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    EXPECT_LE(net.parameters().segment(arch.weight_offset(l), n).cwiseAbs().maxCoeff(), bound);
  }
}

TEST(Mlp, ForwardMatchesNaiveLoop) {
  Rng rng = make_rng(2, 0);
  const Mlp net = build_mlp(tiny_spec(3, 2, 5), 4);
  const Matrix x = uniform_matrix(3, 6, rng);
  const Matrix y = net.forward(x);
  const auto& arch = net.architecture();
  const Vector& p = net.parameters();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::vector<double> h(x.col(c).data(), x.col(c).data() + 3);
    for (int l = 0; l < arch.layer_count(); ++l) {
      const int in = arch.layer_sizes()[l], out = arch.layer_sizes()[l + 1];
      const Eigen::Index off = arch.weight_offset(l);
      std::vector<double> next(out);
      for (int o = 0; o < out; ++o) {
        double z = p[off + static_cast<Eigen::Index>(in) * out + o];
        for (int i = 0; i < in; ++i) z += p[off + static_cast<Eigen::Index>(i) * out + o] * h[i];
        next[o] = (l + 1 < arch.layer_count()) ? std::max(z, 0.0) : z;
      }
      h = next;
    }
    for (int o = 0; o < 2; ++o) EXPECT_NEAR(y(o, c), h[o], 1e-12);
  }
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng = make_rng(5, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const Mlp net = oracle::jittered(build_mlp(tiny_spec(3, 2, 6), 100 + trial), rng);
    const Matrix x = uniform_matrix(3, 4, rng);
    const Matrix w = uniform_matrix(2, 4, rng);
    ForwardTrace trace;
    net.forward(x, &trace);
    Matrix dx;
    const Vector g = net.backward(trace, w, &dx);
    const auto loss = [&](const Vector& p) { return (with_params(net, p).forward(x).array() * w.array()).sum(); };
    EXPECT_LT(relative_error(g, central_difference(loss, net.parameters())), 1e-6);
    const auto loss_x = [&](const Vector& flat) {
      return (net.forward(flat.reshaped(3, 4)).array() * w.array()).sum();
    };
    const Vector fx = central_difference(loss_x, x.reshaped());
    EXPECT_LT(relative_error(dx.reshaped(), fx), 1e-6);
  }
}

TEST(Snapshot, ZeroStepsSameOutputs) {
  Rng rng = make_rng(1, 0);
  Mlp net = build_mlp(tiny_spec(2, 3), 3);
  const ParameterSnapshot snap = net.snapshot();
  const Matrix x = uniform_matrix(2, 16, rng);
  EXPECT_EQ(snap.forward(x), net.forward(x));
}

TEST(Snapshot, ImmutableUnderTraining) {
  Rng rng = make_rng(1, 1);
  Mlp net = build_mlp(tiny_spec(2, 3), 3);
  const Matrix x = uniform_matrix(2, 16, rng);
  const ParameterSnapshot snap = net.snapshot();
  const Matrix before = snap.forward(x);
  sgd_step(net, Vector::Ones(net.parameters().size()), 0.1);
  EXPECT_EQ(snap.forward(x), before);
  EXPECT_NE(net.forward(x), before);
}

TEST(Snapshot, ConsecutiveIndicesDifferIffParametersChanged) {
  Mlp net = build_mlp(tiny_spec(2, 3), 3);
  for (int i = 0; i < 10; ++i) sgd_step(net, Vector::Zero(net.parameters().size()), 0.1);
  const ParameterSnapshot s10 = net.snapshot();
  EXPECT_EQ(s10.update_index(), 10);
  sgd_step(net, Vector::Zero(net.parameters().size()), 0.1);
  const ParameterSnapshot s11 = net.snapshot();
  EXPECT_EQ(s11.update_index(), 11);
  EXPECT_EQ(s10.parameters(), s11.parameters());
  sgd_step(net, Vector::Ones(net.parameters().size()), 0.1);
  EXPECT_NE(net.snapshot().parameters(), s11.parameters());
}

TEST(Snapshot, LoadRestoresParameters) {
  Mlp a = build_mlp(tiny_spec(2, 3), 1);
  const ParameterSnapshot s = build_mlp(tiny_spec(2, 3), 2).snapshot();
  a.load(s);
  EXPECT_EQ(a.parameters(), s.parameters());
  EXPECT_THROW(a.load(build_mlp(tiny_spec(2, 4), 2).snapshot()), ContractError);
}

TEST(LearningRate, ScalingRules) {
  EXPECT_DOUBLE_EQ(effective_learning_rate({3e-4, LrMode::Sqrt}, 4), 1.5e-4);
  EXPECT_DOUBLE_EQ(effective_learning_rate({3e-4, LrMode::Linear}, 4), 7.5e-5);
  for (LrMode m : {LrMode::Direct, LrMode::Sqrt, LrMode::Linear})
    EXPECT_DOUBLE_EQ(effective_learning_rate({3e-4, m}, 1), 3e-4);
}

TEST(Adam, MatchesTextbookRecursion) {
  Mlp net = build_mlp(tiny_spec(1, 1, 2, 1), 0);
  const Eigen::Index n = net.parameters().size();
  Adam adam(n, {.lr = 0.01});
  Vector p = net.parameters(), m = Vector::Zero(n), v = Vector::Zero(n);
  Rng rng = make_rng(0, 9);
  for (int t = 1; t <= 5; ++t) {
    const Vector g = oracle::uniform_vector(n, rng);
    adam.step(net, g);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseProduct(g);
    const Vector mh = m / (1 - std::pow(0.9, t));
    const Vector vh = v / (1 - std::pow(0.999, t));
    p.array() -= 0.01 * mh.array() / (vh.array().sqrt() + 1e-8);
    EXPECT_LT((net.parameters() - p).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(net.update_index(), 5);
}

TEST(ClipGradient, RescalesOnlyAboveThreshold) {
  Vector g(2);
  g << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(clip_gradient_norm(g, 10.0), 5.0);
  EXPECT_DOUBLE_EQ(g.norm(), 5.0);
  EXPECT_DOUBLE_EQ(clip_gradient_norm(g, 0.5), 5.0);
  EXPECT_NEAR(g.norm(), 0.5, 1e-6);
}

TEST(QFunction, ArgmaxTiesPickLowestIndex) {
  Vector q(4);
  q << 1.0, 3.0, 3.0, -1.0;
  EXPECT_EQ(argmax_lowest(q), 1);
}

TEST(QFunction, DiscreteGatherAndGradient) {
  Rng rng = make_rng(4, 0);
  const Mlp net = oracle::jittered(build_mlp(tiny_spec(2, 3, 6), 1), rng);
  const Matrix s = uniform_matrix(2, 5, rng);
  Matrix a(1, 5);
  a << 0, 2, 1, 1, 0;
  ForwardTrace trace;
  const Vector q = evaluate_q(QLayout::StateToActions, net, s, a, &trace);
  const Matrix all = net.forward(s);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(q[i], all(static_cast<int>(a(0, i)), i));
  const Vector w = oracle::uniform_vector(5, rng);
  const Vector g = q_backward(QLayout::StateToActions, net, trace, a, w);
  const auto f = [&](const Vector& p) { return evaluate_q(QLayout::StateToActions, with_params(net, p), s, a).dot(w); };
  EXPECT_LT(relative_error(g, central_difference(f, net.parameters())), 1e-6);
}

TEST(QFunction, CriticActionGradient) {
  Rng rng = make_rng(4, 1);
  const Mlp critic = oracle::jittered(build_mlp(tiny_spec(4, 1, 6), 2), rng);
  const Matrix s = uniform_matrix(2, 3, rng), a = uniform_matrix(2, 3, rng);
  const Matrix g = critic_action_gradient(critic, s, a);
  for (Eigen::Index i = 0; i < 3; ++i) {
    const auto f = [&](const Vector& ai) {
      return evaluate_q(QLayout::StateActionToScalar, critic, s.col(i), ai)[0];
    };
    EXPECT_LT(relative_error(g.col(i), central_difference(f, a.col(i))), 1e-6);
  }
}

TEST(PolicyHead, GaussianKlClosedForm) {
  const Matrix one = Matrix::Ones(1, 1), zero = Matrix::Zero(1, 1);
  EXPECT_DOUBLE_EQ(gaussian_kl(one, zero, zero, zero)[0], 0.5);
  Matrix mp(2, 1), lp(2, 1), mq(2, 1), lq(2, 1);
  mp << 0.3, -0.2;
  lp << 0.1, -0.4;
  mq << -0.5, 0.7;
  lq << 0.2, 0.3;
  double expected = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double sp = std::exp(lp(d, 0)), sq = std::exp(lq(d, 0));
    expected += std::log(sq / sp) + (sp * sp + std::pow(mp(d, 0) - mq(d, 0), 2)) / (2 * sq * sq) - 0.5;
  }
  EXPECT_NEAR(gaussian_kl(mp, lp, mq, lq)[0], expected, 1e-14);
}

TEST(PolicyHead, GaussianLogProb) {
  Matrix m(1, 1), l(1, 1), a(1, 1);
  m << 0.5;
  l << std::log(2.0);
  a << 1.5;
  const double z = 0.5;
  EXPECT_NEAR(gaussian_log_prob(m, l, a)[0], -0.5 * z * z - std::log(2.0) - 0.5 * std::log(2 * M_PI), 1e-14);
}

TEST(PolicyHead, LogOneMinusTanhSquaredIsStable) {
  for (double u : {-3.0, -0.5, 0.0, 0.7, 2.5}) EXPECT_NEAR(log_one_minus_tanh_sq(u), std::log(1 - std::pow(std::tanh(u), 2)), 1e-12);
  EXPECT_TRUE(std::isfinite(log_one_minus_tanh_sq(40.0)));
  EXPECT_NEAR(log_one_minus_tanh_sq(40.0), std::log(4.0) - 80.0, 1e-9);
}

TEST(PolicyHead, BackwardMatchesFiniteDifferencesForEveryHead) {
  Rng rng = make_rng(6, 0);
  for (PolicyHead head : {PolicyHead::Tanh, PolicyHead::StateIndependentGaussian, PolicyHead::SquashedGaussian}) {
    Mlp net = build_mlp(policy_mlp_spec(head, 3, 2, tiny_spec(1, 1, 6)), 9);
    net = oracle::jittered(net, rng);
    const Matrix s = uniform_matrix(3, 4, rng);
    ForwardTrace trace;
    const PolicyOutput out = evaluate_policy(head, net, s, &trace);
    const Matrix wm = uniform_matrix(2, 4, rng);
    const Matrix wl = is_gaussian(head) ? uniform_matrix(2, 4, rng) : Matrix();
    const Vector g = policy_backward(head, net, trace, out, wm, wl);
    const auto f = [&](const Vector& p) {
      const PolicyOutput o = evaluate_policy(head, with_params(net, p), s);
      double v = (o.mean.array() * wm.array()).sum();
      if (is_gaussian(head)) v += (o.log_std.array() * wl.array()).sum();
      return v;
    };
    EXPECT_LT(relative_error(g, central_difference(f, net.parameters())), 1e-6) << static_cast<int>(head);
  }
}
