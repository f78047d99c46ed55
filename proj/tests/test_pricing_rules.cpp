#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "pdca/pricing_rule.hpp"

using namespace pdca;

namespace {

std::vector<double> grid(double hi, double step)
{
  std::vector<double> g;
  for (int i = 0; i * step <= hi + 1e-12; ++i)
    g.push_back(i * step);
  return g;
}

CostModel power(double gamma) { return CostModel(Power{1.0 / (gamma + 1.0), gamma}); }

}  // namespace

TEST(Price, Examples)
{
  PricingRule r(PowerRule{1.0}, CostModel(Power{0.5, 1.0}));
  EXPECT_DOUBLE_EQ(price(r, 3.0), 6.0);
  PricingRule e(ExponentialSupply{0.125, std::pow(2.0, 7.0 / 8.0)}, CostModel(StepSupply{8}));
  EXPECT_NEAR(price(e, 8.0), 16.0, 1e-12);
  EXPECT_THROW(price(e, 9.0), DomainError);
  auto const lin = CostModel(LinearMarginal{1.0, 0.0});
  PricingRule u(UnifiedIntegral{2.0}, lin);
  EXPECT_DOUBLE_EQ(price(u, 0.0), eval_f_prime(lin, 2.0));
  EXPECT_THROW(price(u, -1.0), DomainError);
}

TEST(Price, PowerRuleIsGammaPlusOneTimesYToGamma)
{
  for (double g : {1.0, 2.0, 3.0}) {
    PricingRule r(PowerRule{g}, power(g));
    for (double y : {0.0, 0.5, 2.0, 7.0})
      EXPECT_NEAR(price(r, y), (g + 1.0) * std::pow(y, g), 1e-12 * std::max(1.0, price(r, y)));
  }
}

TEST(Price, RulesAreNondecreasingOnGrid)
{
  auto const lin = CostModel(LinearMarginal{1.0, 0.5});
  std::vector<PricingRule> rules{
      PricingRule(PowerRule{2.0}, power(2.0)),
      PricingRule(PowerIntegral{1.0}, power(1.0)),
      PricingRule(UnifiedFractional{2.0}, faulhaber_cost(1.0, 3)),
      PricingRule(UnifiedIntegral{3.0}, lin),
      PricingRule(ConcaveIntegral{}, log_marginal_cost()),
      exponential_supply_rule(4, 8, 1.0, 16.0)};
  for (auto const& r : rules) {
    double const hi = r.is<ExponentialSupply>() ? 8.0 : 100.0;
    double prev = price(r, 0.0);
    for (int i = 1; i <= 10000; ++i) {
      double const p = price(r, hi * i / 10000.0);
      EXPECT_GE(p, prev) << r.name();
      prev = p;
    }
  }
}

TEST(Price, RuleCostMismatchRejected)
{
  EXPECT_THROW(PricingRule(PowerRule{2.0}, power(1.0)), DomainError);
  EXPECT_THROW(PricingRule(PowerRule{1.0}, CostModel(LinearMarginal{1.0, 0.0})), DomainError);
  EXPECT_THROW(PricingRule(UnifiedFractional{1.0}, power(1.0)), DomainError);
  EXPECT_THROW(PricingRule(ExponentialSupply{1.0, 2.0}, power(1.0)), DomainError);
  EXPECT_THROW(PricingRule(ExponentialSupply{1.0, 1.0}, CostModel(StepSupply{2})), DomainError);
  EXPECT_THROW(PricingRule(ConcaveIntegral{}, CostModel(StepSupply{2})), DomainError);
}

TEST(ExponentialSupply, EndpointIsVMax)
{
  for (std::int64_t m : {1, 4, 9})
    for (std::int64_t k : {1, 3, 8, 20})
      for (double rho : {1.0, 4.0, 16.0, 1000.0}) {
        auto const r = exponential_supply_rule(m, k, 0.5, 0.5 * rho);
        EXPECT_NEAR(price(r, static_cast<double>(k)), 0.5 * rho, 1e-9 * 0.5 * rho);
        EXPECT_DOUBLE_EQ(price(r, 0.0), 0.5 / (2.0 * m));
      }
}

TEST(CheckEq1, PowerRuleFeasibleExactlyFromFour)
{
  PricingRule r(PowerRule{1.0}, CostModel(Power{0.5, 1.0}));
  auto const g = grid(10.0, 0.01);
  auto const ok = check_eq1(r, 4.0, 0.0, g);
  EXPECT_TRUE(ok.feasible) << ok.worst_slack;
  auto const bad = check_eq1(r, 3.5, 0.0, g);
  EXPECT_FALSE(bad.feasible);
  EXPECT_LT(bad.worst_slack, 0.0);
  EXPECT_GT(bad.worst_point, 0.0);
}

TEST(CheckEq1, InfeasibilityAgreesWithDirectScan)
{
  // Independent scan: int_0^y 2t dt - y^2/2 = y^2/2 against (2y)^2/(2 alpha).
  PricingRule r(PowerRule{1.0}, CostModel(Power{0.5, 1.0}));
  for (double alpha : {2.0, 3.0, 3.9, 4.0, 5.0}) {
    bool direct = true;
    for (int i = 0; i <= 1000; ++i) {
      double const y = 0.01 * i;
      if (0.5 * y * y < 2.0 * y * y / alpha - 1e-12)
        direct = false;
    }
    EXPECT_EQ(check_eq1(r, alpha, 0.0, grid(10.0, 0.01)).feasible, direct) << alpha;
  }
}

TEST(CheckEq1, OriginWithEnoughBeta)
{
  auto const f = CostModel(LinearMarginal{1.0, 1.0});
  PricingRule r(UnifiedIntegral{2.0}, f);
  double const beta = eval_conjugate(f, price(r, 0.0)) / 2.0;
  std::vector<double> at_zero{0.0};
  EXPECT_TRUE(check_eq1(r, 2.0, beta, at_zero).feasible);
  EXPECT_FALSE(check_eq1(r, 2.0, 0.0, at_zero).feasible);
}

TEST(CheckEq1, UnifiedFractionalAtGuaranteedAlpha)
{
  for (auto const& f : {power(2.0), faulhaber_cost(1.0, 2), CostModel(LinearMarginal{1.0, 0.0})}) {
    PricingRule r(UnifiedFractional{2.0}, f);
    auto const g = guaranteed_alpha(r, 1.0, 1e3);
    auto const v = check_eq1(r, g.alpha, g.beta, grid(100.0, 0.01));
    EXPECT_TRUE(v.feasible) << f.name() << " slack " << v.worst_slack << " at " << v.worst_point;
  }
}

TEST(CheckEq2, ExponentialSupplyHoldsWithEquality)
{
  auto const r = exponential_supply_rule(4, 8, 1.0, 16.0);
  auto const g = guaranteed_alpha(r, 1.0);
  for (int y = 0; y < 8; ++y)
    EXPECT_TRUE(check_eq2_step(r, g.alpha, y)) << y;
  EXPECT_FALSE(check_eq2_step(r, 0.99 * g.alpha, 0.0));
  EXPECT_THROW(check_eq2_step(r, g.alpha, 7.5), DomainError);
}

TEST(CheckEq2, UnifiedIntegralLinearCost)
{
  PricingRule r(UnifiedIntegral{2.0}, CostModel(Power{0.5, 1.0}));
  for (int y = 9; y <= 1000; ++y)
    EXPECT_TRUE(check_eq2_step(r, 4.4, y)) << y;
  EXPECT_FALSE(check_eq2_step(r, 1.0, 9.0));
  EXPECT_TRUE(eq2_violations(r, 4.4, 9, 1000).empty());
  EXPECT_EQ(eq2_violations(r, 1.0, 9, 12).size(), 4u);
}

TEST(EstimateAlpha, PowerClosedFormsWithinTwoPercent)
{
  for (double g : {1.0, 2.0, 3.0}) {
    double const expect = std::pow(g + 1.0, (g + 1.0) / g);
    auto const t0 = std::chrono::steady_clock::now();
    auto const est = estimate_alpha_bracket(power(g), 100.0, std::nullopt, 1e-3);
    double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_NEAR(est.alpha, expect, 0.02 * expect) << "gamma=" << g;
    EXPECT_LE(est.lo, est.alpha);
    EXPECT_GE(est.hi, est.alpha);
    EXPECT_LT(secs, 10.0);
  }
}

TEST(EstimateAlpha, LinearMarginalAtMostFour)
{
  double const a = estimate_alpha(CostModel(LinearMarginal{1.0, 0.0}), 100.0, std::nullopt, 1e-3);
  EXPECT_LE(a, 4.0 * 1.02);
  EXPECT_GT(a, 3.0);
}

TEST(EstimateAlpha, NondecreasingInGamma)
{
  double prev = 0.0;
  for (double g : {1.0, 2.0, 3.0}) {
    double const a = estimate_alpha(power(g), 100.0, std::nullopt, 1e-3);
    EXPECT_GE(a, prev);
    prev = a;
  }
}

TEST(EstimateAlpha, CoarseLaunchPriceUnderestimates)
{
  // With p0 = 1e-3 the horizon y_max = 100 spans too few decades for the
  // finite-horizon proxy to approach the closed form.
  double const coarse = estimate_alpha(power(1.0), 100.0, 1e-3, 1e-3);
  double const fine = estimate_alpha(power(1.0), 100.0, std::nullopt, 1e-3);
  EXPECT_LT(coarse, fine);
  EXPECT_LT(coarse, 4.0 * 0.98);
}

TEST(EstimateAlpha, Errors)
{
  EXPECT_THROW(estimate_alpha(CostModel(StepSupply{2}), 10.0, std::nullopt, 1e-3), DomainError);
  EXPECT_THROW(estimate_alpha(power(1.0), 10.0, 0.0, 1e-3), DomainError);
  AlphaSearch tight;
  tight.bracket_hi = 1.5;
  EXPECT_THROW(estimate_alpha_bracket(power(1.0), 100.0, std::nullopt, 1e-3, tight), NumericalError);
}

TEST(GuaranteedAlpha, TheoremValues)
{
  auto const f1 = CostModel(Power{0.5, 1.0});
  EXPECT_NEAR(guaranteed_alpha(PricingRule(PowerRule{1.0}, f1), 1.0).alpha, 4.0, 1e-12);
  EXPECT_NEAR(guaranteed_alpha(PricingRule(PowerIntegral{1.0}, f1), 0.1).alpha, 4.4, 1e-12);
  EXPECT_NEAR(guaranteed_alpha(PricingRule(UnifiedIntegral{2.0}, CostModel(LinearMarginal{1.0, 0.0})), 0.1).alpha,
              4.4, 1e-9);
  EXPECT_NEAR(guaranteed_alpha(PricingRule(ConcaveIntegral{}, log_marginal_cost()), 0.1).alpha, 4.4, 1e-12);
  auto const e = guaranteed_alpha(exponential_supply_rule(4, 8, 1.0, 16.0), 1.0);
  EXPECT_NEAR(e.alpha, 8.0 * (std::pow(2.0, 7.0 / 8.0) - 1.0), 1e-12);
  EXPECT_NEAR(e.alpha, 6.672, 1e-3);
  EXPECT_NEAR(e.ratio, 2.0 * e.alpha, 1e-12);
  EXPECT_NEAR(guaranteed_alpha(PricingRule(UnifiedFractional{2.0}, power(2.0)), 1.0).alpha, 4.0 * 4.0 / 3.0, 1e-6);
  // gamma = 2, lambda = 2, eps = 0.1: Gamma+ = (20+2)/20, Gamma-times = 4/3.
  EXPECT_NEAR(guaranteed_alpha(PricingRule(UnifiedIntegral{2.0}, power(2.0)), 0.1).alpha, 1.1 * 4.0 * 1.1 * 4.0 / 3.0,
              1e-6);
}

TEST(GuaranteedAlpha, IntegralBetaAndStart)
{
  auto const f = CostModel(Power{0.5, 1.0});
  auto const g = guaranteed_alpha(PricingRule(PowerIntegral{1.0}, f), 0.1);
  EXPECT_DOUBLE_EQ(g.init_y, 9.0);
  // f*(f'(2/eps))/alpha + f(1/eps - 1) = 20^2/2/4.4 + 81/2
  EXPECT_NEAR(g.beta, 200.0 / 4.4 + 40.5, 1e-9);
  EXPECT_THROW(guaranteed_alpha(PricingRule(PowerIntegral{1.0}, f), 0.0), DomainError);
  EXPECT_THROW(guaranteed_alpha(PricingRule(PowerIntegral{1.0}, f), 1.5), DomainError);
}

TEST(GuaranteedAlpha, ConcaveRuleNeedsConcaveMarginal)
{
  EXPECT_THROW(guaranteed_alpha(PricingRule(ConcaveIntegral{}, power(2.0)), 0.1), UnsupportedRule);
}

TEST(GuaranteedAlpha, IntegralRulesSatisfyStepCondition)
{
  double const eps = 0.1;
  std::vector<PricingRule> rules{PricingRule(PowerIntegral{1.0}, power(1.0)),
                                 PricingRule(PowerIntegral{2.0}, power(2.0)),
                                 PricingRule(ConcaveIntegral{}, CostModel(LinearMarginal{1.0, 0.0})),
                                 PricingRule(ConcaveIntegral{}, log_marginal_cost()),
                                 PricingRule(UnifiedIntegral{2.0}, power(2.0)),
                                 PricingRule(UnifiedIntegral{2.0}, faulhaber_cost(1.0, 3))};
  for (auto const& r : rules) {
    auto const g = guaranteed_alpha(r, eps);
    auto const bad = eq2_violations(r, g.alpha, static_cast<std::int64_t>(g.init_y), 1000);
    EXPECT_TRUE(bad.empty()) << r.name() << " over " << r.cost().name() << " first bad " << (bad.empty() ? -1 : bad[0]);
  }
}
