#pragma once

#include <string>

#include "churnlab/nn/policy_head.hpp"
#include "churnlab/nn/q_function.hpp"

namespace churnlab::chain {

/// VCR regularizes value networks (lambda_q), PCR policies (lambda_pi), DCR both.
enum class ChainMode { None, Vcr, Pcr, Dcr };

ChainMode parse_chain_mode(const std::string& name);
std::string to_string(ChainMode mode);

struct ChainConfig {
  ChainMode mode = ChainMode::None;
  double lambda_q = 0.0;
  double lambda_pi = 0.0;
  bool auto_lambda = false;
  double beta = 0.05;            // target |lambda * L_reg| / |L_main|
  double running_decay = 0.99;   // exponential running-mean decay for auto mode

  bool regularizes_value() const { return mode == ChainMode::Vcr || mode == ChainMode::Dcr; }
  bool regularizes_policy() const { return mode == ChainMode::Pcr || mode == ChainMode::Dcr; }
  void validate() const;
};

struct LossAndGradient {
  double value = 0.0;
  Vector gradient;
};

/// Mean over the regularization batch of (Q_current(s,a) - Q_target(s,a))^2.
/// The target is a frozen snapshot: the gradient is w.r.t. the current network only.
LossAndGradient value_churn_loss(nn::QLayout layout, const nn::Mlp& current, const nn::ParameterSnapshot& target,
                                 const Matrix& states, const Matrix& actions);

/// Deterministic kind: squared action difference averaged over states and
/// action dims. Gaussian kind: mean KL(current || target).
LossAndGradient policy_churn_loss(nn::PolicyHead head, nn::PolicyKind kind, const nn::Mlp& current,
                                  const nn::ParameterSnapshot& target, const Matrix& states);

/// Value objective to minimize: main + lambda_q * churn.
double combined_value_objective(double main_loss, double churn_loss, double lambda_q);
/// Policy objective to maximize: J - lambda_pi * churn.
double combined_policy_objective(double objective, double churn_loss, double lambda_pi);

/// Exponential running means of |L_main| and |L_reg|; the first observation
/// initializes both.
class RunningScales {
 public:
  explicit RunningScales(double decay = 0.99);

  void observe(double main_loss, double reg_loss);
  bool warmed_up() const { return observations_ > 0; }
  std::int64_t observations() const { return observations_; }
  double mean_abs_main() const { return main_; }
  double mean_abs_reg() const { return reg_; }

 private:
  double decay_;
  double main_ = 0.0;
  double reg_ = 0.0;
  std::int64_t observations_ = 0;
};

/// Denominator floor below which the previous coefficient is held.
inline constexpr double kLambdaGuard = 1e-8;

/// beta * |L_main| / |L_reg| from the running means, or `previous` when the
/// regularizer's running mean is below kLambdaGuard. Throws NotWarmedUpError
/// before the first observation.
double auto_lambda(const RunningScales& scales, double beta, double previous);

/// Per-network coefficient owner: fixed lambda, or auto-tuned from running means.
class LambdaController {
 public:
  LambdaController(double initial, bool automatic, double beta, double decay);

  /// Feeds this update's losses and returns the coefficient to apply to it.
  double update(double main_loss, double reg_loss);
  double current() const { return lambda_; }
  bool automatic() const { return automatic_; }
  const RunningScales& scales() const { return scales_; }

 private:
  double lambda_;
  bool automatic_;
  double beta_;
  RunningScales scales_;
};

}  // namespace churnlab::chain
