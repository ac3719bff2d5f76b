#pragma once

#include <string>

#include "churnlab/chain/chain.hpp"
#include "oracles.hpp"

namespace churnlab::oracle {

struct GradCheck {
  double relative_error = 0.0;
  std::string description;
};

/// Random network shape, regularization batch and target drift; compares the
/// analytic L_QC gradient with central differences of the loss value.
inline GradCheck value_churn_gradcheck(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x7663);
  std::uniform_int_distribution<int> width(4, 16), depth(1, 3), batch(1, 16), coin(0, 1);
  const bool critic = coin(rng) == 1;
  const int w = width(rng), d = depth(rng), n = batch(rng);
  const auto layout = critic ? nn::QLayout::StateActionToScalar : nn::QLayout::StateToActions;
  const nn::Mlp base = nn::build_mlp(tiny_spec(critic ? 4 : 2, critic ? 1 : 3, w, d), rng());
  const nn::Mlp current = jittered(base, rng, 0.2);
  const nn::ParameterSnapshot target = jittered(current, rng, 0.1).snapshot();
  const Matrix states = uniform_matrix(2, n, rng);
  Matrix actions;
  if (critic) {
    actions = uniform_matrix(2, n, rng);
  } else {
    std::uniform_int_distribution<int> pick(0, 2);
    actions.resize(1, n);
    for (int i = 0; i < n; ++i) actions(0, i) = pick(rng);
  }
  const chain::LossAndGradient lg = chain::value_churn_loss(layout, current, target, states, actions);
  const auto f = [&](const Vector& p) {
    return chain::value_churn_loss(layout, with_params(current, p), target, states, actions).value;
  };
  return {relative_error(lg.gradient, central_difference(f, current.parameters())),
          std::string(critic ? "critic" : "discrete") + " w=" + std::to_string(w) + " d=" + std::to_string(d) +
              " n=" + std::to_string(n)};
}

/// Same for L_PC over every head and applicable distance kind.
inline GradCheck policy_churn_gradcheck(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x7063);
  std::uniform_int_distribution<int> width(4, 16), depth(1, 3), batch(1, 16), head_pick(0, 2), coin(0, 1);
  const auto head = static_cast<nn::PolicyHead>(head_pick(rng));
  const nn::PolicyKind kind =
      nn::is_gaussian(head) && coin(rng) == 1 ? nn::PolicyKind::Gaussian : nn::PolicyKind::Deterministic;
  const int w = width(rng), d = depth(rng), n = batch(rng);
  const nn::Mlp base = nn::build_mlp(nn::policy_mlp_spec(head, 3, 2, tiny_spec(1, 1, w, d)), rng());
  const nn::Mlp current = jittered(base, rng, 0.2);
  const nn::ParameterSnapshot target = jittered(current, rng, 0.1).snapshot();
  const Matrix states = uniform_matrix(3, n, rng);
  const chain::LossAndGradient lg = chain::policy_churn_loss(head, kind, current, target, states);
  const auto f = [&](const Vector& p) {
    return chain::policy_churn_loss(head, kind, with_params(current, p), target, states).value;
  };
  return {relative_error(lg.gradient, central_difference(f, current.parameters())),
          "head=" + std::to_string(static_cast<int>(head)) +
              (kind == nn::PolicyKind::Gaussian ? " kl" : " mse") + " w=" + std::to_string(w) +
              " d=" + std::to_string(d) + " n=" + std::to_string(n)};
}

}  // namespace churnlab::oracle
