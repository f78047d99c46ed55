#pragma once

// Pricing functions y -> p(y), the integral and differential feasibility
// conditions that certify their competitive ratios, and a numerical
// estimator of the optimal ratio alpha(f).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"
#include "pdca/ode.hpp"

namespace pdca {

/// p(y) = f'((gamma+1)^(1/gamma) y) over f = a y^(gamma+1); for a = 1/(gamma+1)
/// this is (gamma+1) y^gamma.
struct PowerRule
{
  double gamma{1.0};
};

/// Integral variant of PowerRule, shifted by one unit: f'((gamma+1)^(1/gamma) (y+1)).
struct PowerIntegral
{
  double gamma{1.0};
};

/// p(y) = f'(lambda y).
struct UnifiedFractional
{
  double lambda{2.0};
};

/// p(y) = f'(lambda (y+1)).
struct UnifiedIntegral
{
  double lambda{2.0};
};

/// p(y) = f'(2 (y+1)), for concave marginal costs.
struct ConcaveIntegral
{
};

/// p(y) = p0 r^y over a supply-k cost.
struct ExponentialSupply
{
  double p0{1.0};
  double r{2.0};
};

using RuleKind =
    std::variant<PowerRule, PowerIntegral, UnifiedFractional, UnifiedIntegral, ConcaveIntegral, ExponentialSupply>;

class PricingRule
{
public:
  PricingRule(RuleKind kind, CostModel cost) : kind_(std::move(kind)), cost_(std::move(cost)) { validate(); }

  RuleKind const& kind() const noexcept { return kind_; }
  CostModel const& cost() const noexcept { return cost_; }

  template <class K>
  bool is() const noexcept
  {
    return std::holds_alternative<K>(kind_);
  }

  template <class K>
  K const& as() const
  {
    return std::get<K>(kind_);
  }

  /// Units already sold are counted in whole units (Delta y = 1).
  bool integral() const noexcept
  {
    return is<PowerIntegral>() || is<UnifiedIntegral>() || is<ConcaveIntegral>() || is<ExponentialSupply>();
  }

  std::string name() const
  {
    return std::visit(
        [](auto const& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerRule>)
            return "power";
          else if constexpr (std::is_same_v<K, PowerIntegral>)
            return "power-integral";
          else if constexpr (std::is_same_v<K, UnifiedFractional>)
            return "unified-fractional";
          else if constexpr (std::is_same_v<K, UnifiedIntegral>)
            return "unified-integral";
          else if constexpr (std::is_same_v<K, ConcaveIntegral>)
            return "concave-integral";
          else
            return "exponential-supply";
        },
        kind_);
  }

  /// Scale factor lambda of the rules written as f'(lambda y) or f'(lambda (y+1)).
  std::optional<double> lambda() const
  {
    if (auto const* k = std::get_if<PowerRule>(&kind_))
      return std::pow(k->gamma + 1.0, 1.0 / k->gamma);
    if (auto const* k = std::get_if<PowerIntegral>(&kind_))
      return std::pow(k->gamma + 1.0, 1.0 / k->gamma);
    if (auto const* k = std::get_if<UnifiedFractional>(&kind_))
      return k->lambda;
    if (auto const* k = std::get_if<UnifiedIntegral>(&kind_))
      return k->lambda;
    if (is<ConcaveIntegral>())
      return 2.0;
    return std::nullopt;
  }

private:
  void validate() const
  {
    std::visit(
        [&](auto const& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, PowerRule> || std::is_same_v<K, PowerIntegral>) {
            if (!cost_.is<Power>() || cost_.as<Power>().gamma != k.gamma)
              throw DomainError("power rule requires a power cost with the same gamma");
          } else if constexpr (std::is_same_v<K, UnifiedFractional> || std::is_same_v<K, UnifiedIntegral>) {
            if (!(k.lambda > 1.0))
              throw DomainError("unified rule requires lambda > 1");
            if (cost_.is<StepSupply>())
              throw DomainError("unified rule requires a differentiable cost");
          } else if constexpr (std::is_same_v<K, ConcaveIntegral>) {
            if (cost_.is<StepSupply>())
              throw DomainError("concave rule requires a differentiable cost");
          } else {
            if (!cost_.is<StepSupply>())
              throw DomainError("exponential rule requires a step_supply cost");
            if (!(k.p0 > 0.0) || !(k.r > 1.0))
              throw DomainError("exponential rule requires p0 > 0 and r > 1");
          }
        },
        kind_);
  }

  RuleKind kind_;
  CostModel cost_;
};

/// The supply-k rule with p(0) = v_min / 2m and r = (2 m rho)^(1/k), for
/// which p(k) = v_max.
inline PricingRule exponential_supply_rule(std::int64_t m, std::int64_t k, double v_min, double v_max)
{
  if (m < 1 || k < 1 || !(v_min > 0.0) || !(v_max >= v_min))
    throw DomainError("exponential_supply_rule: need m, k >= 1 and 0 < v_min <= v_max");
  double const rho = v_max / v_min;
  double const md = static_cast<double>(m);
  return PricingRule(ExponentialSupply{v_min / (2.0 * md), std::pow(2.0 * md * rho, 1.0 / static_cast<double>(k))},
                     CostModel(StepSupply{k}));
}

/// Per-unit price after y units have been sold.
inline double price(PricingRule const& rule, double y)
{
  detail::require_nonnegative(y, "price");
  auto const& f = rule.cost();
  return std::visit(
      [&](auto const& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PowerRule> || std::is_same_v<K, UnifiedFractional>) {
          return eval_f_prime(f, *rule.lambda() * y);
        } else if constexpr (std::is_same_v<K, ExponentialSupply>) {
          detail::require_supply(f.as<StepSupply>(), y);
          return k.p0 * std::pow(k.r, y);
        } else {
          return eval_f_prime(f, *rule.lambda() * (y + 1.0));
        }
      },
      rule.kind());
}

struct FeasibilityVerdict
{
  bool feasible{false};
  double alpha{1.0};
  double beta{0.0};
  double worst_slack{std::numeric_limits<double>::infinity()};  // normalized, see check_eq1
  double worst_point{0.0};
};

/// Relative tolerance used by the feasibility checks.
inline constexpr double kFeasibilityTolerance = 1e-9;

/// Checks  int_0^y p - f(y) >= f*(p(y)) / alpha - beta  on every grid point,
/// with the integral by the trapezoid rule over the same grid. Slack at each
/// point is normalized by max(1, |lhs|, |rhs|).
inline FeasibilityVerdict check_eq1(PricingRule const& rule, double alpha, double beta, std::span<double const> y_grid)
{
  if (!(alpha >= 1.0))
    throw DomainError("check_eq1: alpha must be >= 1");
  FeasibilityVerdict v;
  v.alpha = alpha;
  v.beta = beta;
  auto const& f = rule.cost();

  double integral = 0.0;
  double prev_y = 0.0;
  double prev_p = price(rule, 0.0);
  for (std::size_t i = 0; i < y_grid.size(); ++i) {
    double const y = y_grid[i];
    if (y < prev_y || y < 0.0)
      throw DomainError("check_eq1: grid must be sorted and nonnegative");
    double const p = price(rule, y);
    integral += 0.5 * (p + prev_p) * (y - prev_y);
    prev_y = y;
    prev_p = p;

    double const lhs = integral - eval_f(f, y);
    double const rhs = eval_conjugate(f, p) / alpha - beta;
    double const slack = (lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
    if (slack < v.worst_slack) {
      v.worst_slack = slack;
      v.worst_point = y;
    }
  }
  v.feasible = v.worst_slack >= -kFeasibilityTolerance;
  return v;
}

/// Normalized slack of the integral step condition at y units sold:
///   p(y) - (f(y+1) - f(y)) >= (f*(p(y+1)) - f*(p(y))) / alpha,
/// divided by max(1, |lhs|, |rhs|).
inline double eq2_slack(PricingRule const& rule, double alpha, double y_before)
{
  if (!(alpha > 0.0))
    throw DomainError("check_eq2_step: alpha must be positive");
  auto const& f = rule.cost();
  if (f.is<StepSupply>() && y_before + 1.0 > static_cast<double>(f.as<StepSupply>().k))
    throw DomainError("check_eq2_step: the (k+1)-th unit is never sold");
  double const p0 = price(rule, y_before);
  double const p1 = price(rule, y_before + 1.0);
  double const lhs = p0 - (eval_f(f, y_before + 1.0) - eval_f(f, y_before));
  double const rhs = (eval_conjugate(f, p1) - eval_conjugate(f, p0)) / alpha;
  return (lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

inline bool check_eq2_step(PricingRule const& rule, double alpha, double y_before)
{
  return eq2_slack(rule, alpha, y_before) >= -kFeasibilityTolerance;
}

/// check_eq2_step over every integer in [from, to], summarized as a verdict.
inline FeasibilityVerdict check_eq2_range(PricingRule const& rule, double alpha, std::int64_t from, std::int64_t to)
{
  FeasibilityVerdict v;
  v.alpha = alpha;
  for (std::int64_t y = from; y <= to; ++y) {
    double const s = eq2_slack(rule, alpha, static_cast<double>(y));
    if (s < v.worst_slack) {
      v.worst_slack = s;
      v.worst_point = static_cast<double>(y);
    }
  }
  v.feasible = v.worst_slack >= -kFeasibilityTolerance;
  return v;
}

/// Every integer y_before in [from, to] that violates check_eq2_step.
inline std::vector<std::int64_t> eq2_violations(PricingRule const& rule, double alpha, std::int64_t from,
                                                std::int64_t to)
{
  std::vector<std::int64_t> bad;
  for (std::int64_t y = from; y <= to; ++y)
    if (!check_eq2_step(rule, alpha, static_cast<double>(y)))
      bad.push_back(y);
  return bad;
}

struct AlphaEstimate
{
  double alpha{0.0};
  double lo{1.0};  // largest alpha seen infeasible
  double hi{64.0};  // smallest alpha seen feasible
  double p0{0.0};
  int iterations{0};
};

struct AlphaSearch
{
  double bracket_lo{1.0};
  double bracket_hi{64.0};
  int max_iterations{40};
  /// Default launch price is f'(launch_ratio * y_max).
  double launch_ratio{1e-12};
};

/// Integrates dp/dy = alpha (p - f'(y)) / f*'(p) from p(0) = p0 over [0, y_max]
/// and reports whether p stays finite, nondecreasing and >= f'.
inline bool alpha_trajectory_feasible(CostModel const& model, double alpha, double y_max, double p0)
{
  auto rhs = [&](double y, double p) {
    if (!(p > 0.0) || !std::isfinite(p))
      return std::numeric_limits<double>::quiet_NaN();
    double const q = eval_conjugate_prime(model, p);
    if (!(q > 0.0))
      return std::numeric_limits<double>::quiet_NaN();
    return alpha * (p - eval_f_prime(model, y)) / q;
  };
  bool ok = true;
  double last = p0;
  auto observe = [&](double y, double p) {
    if (!std::isfinite(p) || p < last || p < eval_f_prime(model, y)) {
      ok = false;
      return false;
    }
    last = p;
    return true;
  };
  double const h0 = std::max(1e-300, 1e-3 * eval_conjugate_prime(model, p0));
  auto const status = integrate_rk4_adaptive(rhs, 0.0, p0, y_max, h0, observe);
  return ok && status == OdeStatus::completed;
}

/// Bisection on alpha over the equality form of the differential condition.
/// Finite-horizon feasibility only ever accepts too much, so the estimate
/// approaches alpha(f) from below as the launch price shrinks relative to
/// f'(y_max).
inline AlphaEstimate estimate_alpha_bracket(CostModel const& model, double y_max, std::optional<double> p0, double tol,
                                            AlphaSearch const& search = {})
{
  if (!model.strictly_convex())
    throw DomainError("estimate_alpha: cost must be strictly convex");
  if (!(y_max > 0.0) || !(tol > 0.0))
    throw DomainError("estimate_alpha: y_max and tol must be positive");
  double const floor_price = eval_f_prime(model, 0.0);
  double const start = p0.value_or(eval_f_prime(model, search.launch_ratio * y_max));
  if (!(start > floor_price))
    throw DomainError("estimate_alpha: p0 must exceed f'(0)");

  AlphaEstimate est;
  est.p0 = start;
  est.lo = search.bracket_lo;
  est.hi = search.bracket_hi;
  if (!alpha_trajectory_feasible(model, est.hi, y_max, start))
    throw NumericalError("estimate_alpha: no feasible alpha below " + std::to_string(est.hi));
  if (alpha_trajectory_feasible(model, est.lo, y_max, start)) {
    est.alpha = est.hi = est.lo;
    return est;
  }
  while (est.hi - est.lo > tol && est.iterations < search.max_iterations) {
    double const mid = 0.5 * (est.lo + est.hi);
    (alpha_trajectory_feasible(model, mid, y_max, start) ? est.hi : est.lo) = mid;
    ++est.iterations;
  }
  est.alpha = 0.5 * (est.lo + est.hi);
  return est;
}

inline double estimate_alpha(CostModel const& model, double y_max, std::optional<double> p0, double tol)
{
  return estimate_alpha_bracket(model, y_max, p0, tol).alpha;
}

/// A competitive guarantee W >= OPT/alpha - m*beta. For the supply-k rule
/// `ratio` is the beta-free form W >= OPT/ratio; otherwise ratio == alpha.
struct Guarantee
{
  double alpha{1.0};
  double beta{0.0};  // per item
  double ratio{1.0};
  double init_y{0.0};
};

/// Starting demand y_j = 1/eps - 1 used by the integral rules.
inline double integral_initial_demand(double epsilon)
{
  if (!(epsilon > 0.0) || !(epsilon <= 1.0))
    throw DomainError("epsilon must lie in (0, 1]");
  return 1.0 / epsilon - 1.0;
}

/// Competitive ratio and additive constant guaranteed for `rule`. Gamma
/// quantities are computed on (0, y_max].
inline Guarantee guaranteed_alpha(PricingRule const& rule, double epsilon, double y_max = 1e4)
{
  auto const& f = rule.cost();
  Guarantee g;

  // beta for rules started at y = 1/eps - 1: D^0/alpha - P^0 per item.
  auto integral_beta = [&](double alpha, double lambda) {
    double const y0 = integral_initial_demand(epsilon);
    return eval_conjugate(f, eval_f_prime(f, lambda / epsilon)) / alpha + eval_f(f, y0);
  };

  std::visit(
      [&](auto const& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PowerRule>) {
          g.alpha = std::pow(k.gamma + 1.0, (k.gamma + 1.0) / k.gamma);
        } else if constexpr (std::is_same_v<K, PowerIntegral>) {
          g.alpha = std::pow(1.0 + epsilon, k.gamma) * std::pow(k.gamma + 1.0, (k.gamma + 1.0) / k.gamma);
          g.init_y = integral_initial_demand(epsilon);
          g.beta = integral_beta(g.alpha, *rule.lambda());
        } else if constexpr (std::is_same_v<K, UnifiedFractional>) {
          auto const gr = gamma_quantities(f, k.lambda, 1.0, y_max);
          g.alpha = k.lambda * k.lambda / (k.lambda - 1.0) * gr.gamma_times;
        } else if constexpr (std::is_same_v<K, ConcaveIntegral>) {
          if (!f.concave_marginal())
            throw UnsupportedRule("concave-integral rule requires a cost with concave f'");
          g.alpha = 4.0 * (1.0 + epsilon);
          g.init_y = integral_initial_demand(epsilon);
          g.beta = integral_beta(g.alpha, 2.0);
        } else if constexpr (std::is_same_v<K, UnifiedIntegral>) {
          g.init_y = integral_initial_demand(epsilon);
          auto const gr = gamma_quantities(f, k.lambda, k.lambda / epsilon, y_max);
          g.alpha = (1.0 + epsilon) * k.lambda * k.lambda / (k.lambda - 1.0) * gr.gamma_plus * gr.gamma_times;
          g.beta = integral_beta(g.alpha, k.lambda);
        } else {
          auto const kk = static_cast<double>(f.as<StepSupply>().k);
          g.alpha = kk * (k.r - 1.0);
          g.beta = kk * k.p0 / g.alpha;
          g.ratio = 2.0 * g.alpha;
          return;
        }
        g.ratio = g.alpha;
      },
      rule.kind());
  return g;
}

}  // namespace pdca
