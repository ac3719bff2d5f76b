#include <cmath>

#include "churnlab/chain/chain.hpp"

namespace churnlab::chain {

RunningScales::RunningScales(double decay) : decay_(decay) {
  require(decay > 0.0 && decay < 1.0, "running scales: decay must be in (0, 1)");
}

void RunningScales::observe(double main_loss, double reg_loss) {
  const double m = std::abs(main_loss);
  const double r = std::abs(reg_loss);
  if (observations_ == 0) {
    main_ = m;
    reg_ = r;
  } else {
    main_ = decay_ * main_ + (1.0 - decay_) * m;
    reg_ = decay_ * reg_ + (1.0 - decay_) * r;
  }
  ++observations_;
}

double auto_lambda(const RunningScales& scales, double beta, double previous) {
  if (!scales.warmed_up()) throw NotWarmedUpError("auto_lambda: no loss observed yet");
  if (scales.mean_abs_reg() < kLambdaGuard) return previous;
  return beta * scales.mean_abs_main() / scales.mean_abs_reg();
}

LambdaController::LambdaController(double initial, bool automatic, double beta, double decay)
    : lambda_(initial), automatic_(automatic), beta_(beta), scales_(decay) {
  require(initial >= 0.0, "lambda controller: initial lambda must be >= 0");
}

double LambdaController::update(double main_loss, double reg_loss) {
  if (!automatic_) return lambda_;
  scales_.observe(main_loss, reg_loss);
  lambda_ = auto_lambda(scales_, beta_, lambda_);
  return lambda_;
}

}  // namespace churnlab::chain
