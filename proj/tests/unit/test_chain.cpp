#include <gtest/gtest.h>

#include "chain_gradcheck.hpp"
#include "churnlab/chain/chain.hpp"
#include "oracles.hpp"

using namespace churnlab;
using namespace churnlab::chain;
using oracle::one_hot_states;
using oracle::table_net;
using oracle::tiny_spec;
using oracle::uniform_matrix;

TEST(ChainMode, ParseAndPrint) {
  EXPECT_EQ(parse_chain_mode("vcr"), ChainMode::Vcr);
  EXPECT_EQ(parse_chain_mode("DCR"), ChainMode::Dcr);
  EXPECT_EQ(to_string(ChainMode::Pcr), "pcr");
  EXPECT_THROW(parse_chain_mode("both"), ConfigError);
}

TEST(ChainConfig, ModesSelectNetworks) {
  ChainConfig c;
  EXPECT_FALSE(c.regularizes_value() || c.regularizes_policy());
  c.mode = ChainMode::Vcr;
  EXPECT_TRUE(c.regularizes_value() && !c.regularizes_policy());
  c.mode = ChainMode::Pcr;
  EXPECT_TRUE(!c.regularizes_value() && c.regularizes_policy());
  c.mode = ChainMode::Dcr;
  EXPECT_TRUE(c.regularizes_value() && c.regularizes_policy());
}

TEST(ChainConfig, Validation) {
  ChainConfig c;
  c.lambda_q = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.beta = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.running_decay = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ValueChurnLoss, ZeroWhenCurrentEqualsTarget) {
  Rng rng = make_rng(0, 0);
  const nn::Mlp q = nn::build_mlp(tiny_spec(2, 3), 1);
  const LossAndGradient lg =
      value_churn_loss(nn::QLayout::StateToActions, q, q.snapshot(), uniform_matrix(2, 8, rng), Matrix::Zero(1, 8));
  EXPECT_EQ(lg.value, 0.0);
  EXPECT_EQ(lg.gradient.norm(), 0.0);
}

TEST(ValueChurnLoss, OnePairArithmetic) {
  Matrix now(1, 1), past(1, 1);
  now << 1.5;
  past << 1.0;
  const LossAndGradient lg = value_churn_loss(nn::QLayout::StateToActions, table_net(now), table_net(past).snapshot(),
                                              one_hot_states(1), Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(lg.value, 0.25);
}

TEST(ValueChurnLoss, EmptyBatchIsAContractError) {
  const nn::Mlp q = nn::build_mlp(tiny_spec(2, 3), 1);
  EXPECT_THROW(value_churn_loss(nn::QLayout::StateToActions, q, q.snapshot(), Matrix(2, 0), Matrix(1, 0)),
               ContractError);
}

TEST(ValueChurnLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const oracle::GradCheck r = oracle::value_churn_gradcheck(seed);
    EXPECT_LT(r.relative_error, 1e-4) << r.description;
  }
}

TEST(PolicyChurnLoss, ZeroWhenIdentical) {
  Rng rng = make_rng(1, 0);
  for (auto head : {nn::PolicyHead::Tanh, nn::PolicyHead::StateIndependentGaussian, nn::PolicyHead::SquashedGaussian}) {
    const nn::Mlp p = nn::build_mlp(nn::policy_mlp_spec(head, 2, 2, tiny_spec(1, 1)), 4);
    const Matrix s = uniform_matrix(2, 5, rng);
    EXPECT_EQ(policy_churn_loss(head, nn::PolicyKind::Deterministic, p, p.snapshot(), s).value, 0.0);
    if (nn::is_gaussian(head)) EXPECT_EQ(policy_churn_loss(head, nn::PolicyKind::Gaussian, p, p.snapshot(), s).value, 0.0);
  }
}

TEST(PolicyChurnLoss, DeterministicMeanSquare) {
  Matrix now(2, 1), past = Matrix::Zero(2, 1);
  now << 0.2, -0.4;
  const auto head = nn::PolicyHead::StateIndependentGaussian;
  const LossAndGradient lg = policy_churn_loss(head, nn::PolicyKind::Deterministic, table_net(now, 2),
                                               table_net(past, 2).snapshot(), one_hot_states(1));
  EXPECT_NEAR(lg.value, 0.1, 1e-15);
}

TEST(PolicyChurnLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const oracle::GradCheck r = oracle::policy_churn_gradcheck(seed);
    EXPECT_LT(r.relative_error, 1e-4) << r.description;
  }
}

TEST(PolicyChurnLoss, KlRejectedForDeterministicHead) {
  const nn::Mlp p = nn::build_mlp(nn::policy_mlp_spec(nn::PolicyHead::Tanh, 2, 2, tiny_spec(1, 1)), 4);
  EXPECT_THROW(policy_churn_loss(nn::PolicyHead::Tanh, nn::PolicyKind::Gaussian, p, p.snapshot(), Matrix::Zero(2, 1)),
               ContractError);
}

TEST(LossProperties, NonNegativeOnRandomPairs) {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    Rng rng = make_rng(seed, 0);
    const nn::Mlp a = nn::build_mlp(tiny_spec(2, 3), seed), b = nn::build_mlp(tiny_spec(2, 3), seed + 1000);
    const Matrix s = uniform_matrix(2, 7, rng);
    EXPECT_GT(value_churn_loss(nn::QLayout::StateToActions, a, b.snapshot(), s, Matrix::Zero(1, 7)).value, 0.0);
  }
}

TEST(CombinedObjectives, Arithmetic) {
  EXPECT_EQ(combined_value_objective(1.7, 0.3, 0.0), 1.7);
  EXPECT_DOUBLE_EQ(combined_value_objective(1.0, 0.25, 50), 13.5);
  EXPECT_DOUBLE_EQ(combined_value_objective(2.0, 0.5, 100), 52.0);
  EXPECT_EQ(combined_policy_objective(1.3, 0.2, 0.0), 1.3);
  EXPECT_DOUBLE_EQ(combined_policy_objective(1.0, 0.001, 5000), -4.0);
  EXPECT_DOUBLE_EQ(combined_policy_objective(1.0, 0.01, 50), 0.5);
}

TEST(AutoLambda, DirectSubstitution) {
  RunningScales s;
  s.observe(2.0, 0.5);
  EXPECT_DOUBLE_EQ(auto_lambda(s, 0.05, 0.0), 0.2);
}

TEST(AutoLambda, EqualMeansGiveBeta) {
  RunningScales s;
  s.observe(-0.3, 0.3);
  EXPECT_DOUBLE_EQ(auto_lambda(s, 0.1, 0.0), 0.1);
}

TEST(AutoLambda, NotWarmedUp) {
  const RunningScales s;
  EXPECT_THROW(auto_lambda(s, 0.05, 1.0), NotWarmedUpError);
}

TEST(AutoLambda, GuardHoldsPrevious) {
  RunningScales s;
  s.observe(1.0, 1e-9);
  EXPECT_EQ(auto_lambda(s, 0.05, 7.0), 7.0);
}

TEST(AutoLambda, DefaultBeta) { EXPECT_EQ(ChainConfig{}.beta, 0.05); }

TEST(RunningScales, FirstObservationInitializesThenExponentialMean) {
  RunningScales s(0.9);
  s.observe(-4.0, 2.0);
  EXPECT_EQ(s.mean_abs_main(), 4.0);
  EXPECT_EQ(s.mean_abs_reg(), 2.0);
  s.observe(2.0, -1.0);
  EXPECT_DOUBLE_EQ(s.mean_abs_main(), 0.9 * 4.0 + 0.1 * 2.0);
  EXPECT_DOUBLE_EQ(s.mean_abs_reg(), 0.9 * 2.0 + 0.1 * 1.0);
  EXPECT_EQ(s.observations(), 2);
}

TEST(LambdaController, FixedCoefficientIsReturnedUnchanged) {
  LambdaController c(50.0, false, 0.05, 0.99);
  EXPECT_EQ(c.update(1.0, 1.0), 50.0);
  EXPECT_EQ(c.update(100.0, 1e-12), 50.0);
  EXPECT_EQ(c.scales().observations(), 0);
}

TEST(LambdaController, AutoTracksRelativeScale) {
  LambdaController c(0.0, true, 0.1, 0.99);
  Rng rng = make_rng(3, 0);
  std::uniform_real_distribution<double> main(0.5, 1.5), reg(0.001, 0.003);
  double lambda = 0.0;
  for (int t = 0; t < 2000; ++t) lambda = c.update(main(rng), reg(rng));
  // running means approach 1.0 and 0.002
  EXPECT_NEAR(lambda, 0.1 * 1.0 / 0.002, 0.1 * 1.0 / 0.002 * 0.15);
  EXPECT_DOUBLE_EQ(lambda, 0.1 * c.scales().mean_abs_main() / c.scales().mean_abs_reg());
}
