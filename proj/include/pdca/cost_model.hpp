#pragma once

// Production cost functions f, their derivatives and Fenchel conjugates
// f*(p) = sup_{y >= 0} { p y - f(y) }.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "pdca/errors.hpp"
#include "pdca/faulhaber.hpp"

namespace pdca {

/// f(y) = a y^(gamma+1), gamma >= 1.
struct Power
{
  double a{1.0};
  double gamma{1.0};
};

/// Smooth interpolant of the marginal cost c(y) = a y^d (integer d >= 2):
/// f = a S_d with S_d the Faulhaber power-sum polynomial.
struct PolyMarginal
{
  double a{1.0};
  int d{2};
};

/// Interpolant of c(y) = a y + b: f(y) = (a/2) y^2 + (b + a/2) y.
struct LinearMarginal
{
  double a{1.0};
  double b{0.0};
};

/// Interpolant of c(y) = ln(1 + y) with continuous, piecewise-linear and
/// concave f' whose integral over [i, i+1] is c(i+1).
struct LogMarginal
{
  int segments{4096};
};

/// Supply-k items: f = 0 on [0, k], +infinity beyond (reported as DomainError).
struct StepSupply
{
  std::int64_t k{1};
};

using CostKind = std::variant<Power, PolyMarginal, LinearMarginal, LogMarginal, StepSupply>;

namespace detail {

struct PolyTable
{
  std::vector<double> coef;    // f(y) = sum coef[l] y^l (already scaled by a)
  std::vector<double> dcoef;   // f'
  std::vector<double> ddcoef;  // f''
  double threshold{0.0};       // f' >= 0 and f'' > 0 on (threshold, inf)
  bool monotone{true};         // f' >= 0 on [0, inf)
};

struct LogTable
{
  double delta0{0.0};
  double delta0_lo{0.0};
  double delta0_hi{0.0};
  std::vector<double> delta;  // delta(i), i < N
  std::vector<double> knot;   // f'(i), i <= N
  std::vector<double> cum;    // f(i), i <= N
};

inline double horner(std::vector<double> const& c, double y)
{
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it)
    acc = acc * y + *it;
  return acc;
}

inline std::vector<double> derivative(std::vector<double> const& c)
{
  if (c.size() <= 1)
    return {0.0};
  std::vector<double> out(c.size() - 1);
  for (std::size_t l = 1; l < c.size(); ++l)
    out[l - 1] = c[l] * static_cast<double>(l);
  return out;
}

// Last point in [0, hi] where g <= 0, refined by bisection; 0 if none.
template <class G>
double last_nonpositive(G const& g, double hi, double step)
{
  double last_bad = -1.0;
  for (double y = 0.0; y <= hi; y += step)
    if (g(y) <= 0.0)
      last_bad = y;
  if (last_bad < 0.0)
    return 0.0;
  double lo = last_bad;
  double up = last_bad + step;
  for (int it = 0; it < 100; ++it) {
    double const mid = 0.5 * (lo + up);
    (g(mid) <= 0.0 ? lo : up) = mid;
  }
  return up;
}

inline std::shared_ptr<PolyTable const> make_poly_table(double a, int d)
{
  auto table = std::make_shared<PolyTable>();
  auto c = faulhaber_coefficients(d);
  for (auto& x : c)
    x *= a;
  table->coef = c;
  table->dcoef = derivative(table->coef);
  table->ddcoef = derivative(table->dcoef);

  // Validate the sign convention against the defining power sum.
  double direct = 0.0;
  for (int y = 1; y <= 100; ++y) {
    direct += a * std::pow(static_cast<double>(y), d);
    double const poly = horner(table->coef, y);
    if (std::abs(poly - direct) > 1e-8 * std::abs(direct))
      throw OverflowError("faulhaber: degree " + std::to_string(d) +
                          " loses precision against direct summation at y=" + std::to_string(y));
  }

  auto const& dc = table->dcoef;
  auto const& ddc = table->ddcoef;
  double const t1 = last_nonpositive([&](double y) { return horner(ddc, y); }, 4.0, 1e-3);
  double const t2 = last_nonpositive([&](double y) { return y > 0.0 ? horner(dc, y) : 1.0; }, 4.0, 1e-3);
  table->threshold = std::max(t1, t2);
  for (double y = 0.0; y <= table->threshold; y += 1e-3)
    if (horner(dc, y) < 0.0)
      table->monotone = false;
  return table;
}

inline std::shared_ptr<LogTable const> make_log_table(int segments)
{
  if (segments < 2)
    throw DomainError("log_marginal: need at least 2 segments");
  auto table = std::make_shared<LogTable>();
  auto const n = static_cast<std::size_t>(segments);
  auto c = [](double i) { return std::log1p(i); };
  auto g = [&](double i) { return 0.5 * (c(i + 1) - c(i)); };

  // delta(i) = (-1)^i delta(0) + s_i; intersect the constraints
  // delta(i) in [g(i+1), g(i)] expressed as intervals for delta(0).
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double const di = static_cast<double>(i);
    if (i % 2 == 0) {
      lo = std::max(lo, g(di + 1) - s);
      hi = std::min(hi, g(di) - s);
    } else {
      lo = std::max(lo, s - g(di));
      hi = std::min(hi, s - g(di + 1));
    }
    s = (c(di + 2) - c(di + 1)) - s;
  }
  if (!(lo <= hi))
    throw NumericalError("log_marginal: nested intervals have empty intersection");
  table->delta0_lo = lo;
  table->delta0_hi = hi;
  table->delta0 = 0.5 * (lo + hi);

  table->delta.resize(n);
  table->delta[0] = table->delta0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double const di = static_cast<double>(i);
    table->delta[i + 1] = c(di + 2) - c(di + 1) - table->delta[i];
  }

  table->knot.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i)
    table->knot[i] = c(static_cast<double>(i) + 1) - table->delta[i];
  table->knot[n] = c(static_cast<double>(n)) + table->delta[n - 1];

  table->cum.resize(n + 1);
  table->cum[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    table->cum[i + 1] = table->cum[i] + 0.5 * (table->knot[i] + table->knot[i + 1]);
  return table;
}

}  // namespace detail

/// An immutable production cost function.
class CostModel
{
public:
  CostModel() : CostModel(Power{}) {}

  explicit CostModel(Power p) : kind_(p)
  {
    if (!(p.a > 0.0) || !(p.gamma >= 1.0))
      throw DomainError("power cost requires a > 0 and gamma >= 1");
  }

  explicit CostModel(PolyMarginal p) : kind_(p)
  {
    if (!(p.a > 0.0) || p.d < 2)
      throw DomainError("poly_marginal cost requires a > 0 and integer d >= 2");
    poly_ = detail::make_poly_table(p.a, p.d);
  }

  explicit CostModel(LinearMarginal p) : kind_(p)
  {
    if (!(p.a >= 0.0) || !(p.b >= 0.0))
      throw DomainError("linear_marginal cost requires a >= 0 and b >= 0");
  }

  explicit CostModel(LogMarginal p) : kind_(p) { log_ = detail::make_log_table(p.segments); }

  explicit CostModel(StepSupply p) : kind_(p)
  {
    if (p.k < 1)
      throw DomainError("step_supply cost requires k >= 1");
  }

  CostKind const& kind() const noexcept { return kind_; }

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

  std::string name() const
  {
    return std::visit(
        [](auto const& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Power>)
            return "power";
          else if constexpr (std::is_same_v<K, PolyMarginal>)
            return "poly_marginal";
          else if constexpr (std::is_same_v<K, LinearMarginal>)
            return "linear_marginal";
          else if constexpr (std::is_same_v<K, LogMarginal>)
            return "log_marginal";
          else
            return "step_supply";
        },
        kind_);
  }

  /// f' exists and is strictly increasing, so f' and f*' are inverses.
  bool strictly_convex() const noexcept
  {
    if (auto const* l = std::get_if<LinearMarginal>(&kind_))
      return l->a > 0.0;
    return !is<StepSupply>();
  }

  /// f' is concave on [0, inf).
  bool concave_marginal() const noexcept
  {
    if (auto const* p = std::get_if<Power>(&kind_))
      return p->gamma == 1.0;
    return is<LinearMarginal>() || is<LogMarginal>();
  }

  /// Smallest y above which f' >= 0 and f'' > 0. Zero except for
  /// Faulhaber polynomials of degree >= 4, which dip near the origin.
  double validity_threshold() const noexcept { return poly_ ? poly_->threshold : 0.0; }

  /// f nondecreasing on the whole half-line.
  bool monotone() const noexcept { return !poly_ || poly_->monotone; }

  std::shared_ptr<detail::LogTable const> const& log_table() const noexcept { return log_; }
  std::shared_ptr<detail::PolyTable const> const& poly_table() const noexcept { return poly_; }

private:
  CostKind kind_;
  std::shared_ptr<detail::PolyTable const> poly_;
  std::shared_ptr<detail::LogTable const> log_;
};

namespace detail {

inline void require_nonnegative(double y, char const* what)
{
  if (!(y >= 0.0) || !std::isfinite(y))
    throw DomainError(std::string(what) + ": argument must be finite and >= 0, got " + std::to_string(y));
}

inline void require_supply(StepSupply const& s, double y)
{
  if (y > static_cast<double>(s.k))
    throw DomainError("step_supply: y=" + std::to_string(y) + " exceeds supply k=" + std::to_string(s.k));
}

inline std::size_t log_segment(LogTable const& t, double y)
{
  auto const n = t.delta.size();
  auto const i = static_cast<std::size_t>(std::floor(y));
  return std::min(i, n);
}

}  // namespace detail

/// Total cost f(y) of producing y units.
inline double eval_f(CostModel const& model, double y)
{
  detail::require_nonnegative(y, "eval_f");
  return std::visit(
      [&](auto const& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Power>) {
          return k.a * std::pow(y, k.gamma + 1.0);
        } else if constexpr (std::is_same_v<K, PolyMarginal>) {
          return detail::horner(model.poly_table()->coef, y);
        } else if constexpr (std::is_same_v<K, LinearMarginal>) {
          return 0.5 * k.a * y * y + (k.b + 0.5 * k.a) * y;
        } else if constexpr (std::is_same_v<K, LogMarginal>) {
          auto const& t = *model.log_table();
          auto const n = t.delta.size();
          auto const i = detail::log_segment(t, y);
          double const x = y - static_cast<double>(i);
          double const slope = i < n ? 2.0 * t.delta[i] : 2.0 * t.delta[n - 1];
          return t.cum[i] + t.knot[i] * x + 0.5 * slope * x * x;
        } else {
          detail::require_supply(k, y);
          return 0.0;
        }
      },
      model.kind());
}

/// Marginal cost f'(y).
inline double eval_f_prime(CostModel const& model, double y)
{
  detail::require_nonnegative(y, "eval_f_prime");
  return std::visit(
      [&](auto const& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Power>) {
          return k.a * (k.gamma + 1.0) * std::pow(y, k.gamma);
        } else if constexpr (std::is_same_v<K, PolyMarginal>) {
          return detail::horner(model.poly_table()->dcoef, y);
        } else if constexpr (std::is_same_v<K, LinearMarginal>) {
          return k.a * y + k.b + 0.5 * k.a;
        } else if constexpr (std::is_same_v<K, LogMarginal>) {
          auto const& t = *model.log_table();
          auto const n = t.delta.size();
          auto const i = detail::log_segment(t, y);
          double const slope = i < n ? 2.0 * t.delta[i] : 2.0 * t.delta[n - 1];
          return t.knot[i] + slope * (y - static_cast<double>(i));
        } else {
          detail::require_supply(k, y);
          return 0.0;
        }
      },
      model.kind());
}

/// f''(y). LogMarginal returns the right derivative at knots.
inline double eval_f_second(CostModel const& model, double y)
{
  detail::require_nonnegative(y, "eval_f_second");
  return std::visit(
      [&](auto const& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Power>) {
          return k.a * (k.gamma + 1.0) * k.gamma * std::pow(y, k.gamma - 1.0);
        } else if constexpr (std::is_same_v<K, PolyMarginal>) {
          return detail::horner(model.poly_table()->ddcoef, y);
        } else if constexpr (std::is_same_v<K, LinearMarginal>) {
          return k.a;
        } else if constexpr (std::is_same_v<K, LogMarginal>) {
          auto const& t = *model.log_table();
          auto const n = t.delta.size();
          auto const i = detail::log_segment(t, y);
          return i < n ? 2.0 * t.delta[i] : 2.0 * t.delta[n - 1];
        } else {
          throw DomainError("step_supply: f'' is not defined");
        }
      },
      model.kind());
}

namespace detail {

// Search horizon for bracketing f'(y) = p.
inline constexpr double kInversionHorizon = 1e15;

// Smallest y >= lo with f'(y) = p, for f' increasing on [lo, inf) and f'(lo) < p.
inline double invert_marginal(CostModel const& model, double p, double lo)
{
  double hi = std::max(1.0, 2.0 * lo);
  while (eval_f_prime(model, hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > kInversionHorizon)
      throw NumericalError("conjugate: failed to bracket f'(y) = " + std::to_string(p));
  }
  std::uintmax_t iters = 200;
  auto const fn = [&](double y) { return eval_f_prime(model, y) - p; };
  auto const tol = boost::math::tools::eps_tolerance<double>(52);
  auto const r = boost::math::tools::toms748_solve(fn, lo, hi, tol, iters);
  if (iters >= 200)
    throw NumericalError("conjugate: root finding did not converge");
  return 0.5 * (r.first + r.second);
}

}  // namespace detail

/// f*'(p) = (f')^{-1}(p), the maximizer of p y - f(y) over y >= 0.
inline double eval_conjugate_prime(CostModel const& model, double p)
{
  detail::require_nonnegative(p, "eval_conjugate_prime");
  return std::visit(
      [&](auto const& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Power>) {
          return std::pow(p / (k.a * (k.gamma + 1.0)), 1.0 / k.gamma);
        } else if constexpr (std::is_same_v<K, LinearMarginal>) {
          double const base = k.b + 0.5 * k.a;
          if (p <= base)
            return 0.0;
          if (k.a == 0.0)
            throw DomainError("linear_marginal with a = 0: conjugate is infinite above b");
          return (p - base) / k.a;
        } else if constexpr (std::is_same_v<K, LogMarginal>) {
          auto const& t = *model.log_table();
          if (p <= t.knot.front())
            return 0.0;
          auto const n = t.delta.size();
          if (p >= t.knot.back())
            return static_cast<double>(n) + (p - t.knot.back()) / (2.0 * t.delta[n - 1]);
          auto const it = std::upper_bound(t.knot.begin(), t.knot.end(), p);
          auto const i = static_cast<std::size_t>(it - t.knot.begin()) - 1;
          return static_cast<double>(i) + (p - t.knot[i]) / (2.0 * t.delta[i]);
        } else if constexpr (std::is_same_v<K, PolyMarginal>) {
          double const y0 = model.validity_threshold();
          double const p0 = eval_f_prime(model, y0);
          if (p <= p0) {
            if (y0 == 0.0)
              return 0.0;
            // Below the validity threshold f' is not monotone; maximize directly.
            double best_y = 0.0, best = 0.0;
            for (int s = 1; s <= 4000; ++s) {
              double const y = y0 * s / 4000.0;
              double const v = p * y - eval_f(model, y);
              if (v > best) {
                best = v;
                best_y = y;
              }
            }
            return best_y;
          }
          return detail::invert_marginal(model, p, y0);
        } else {
          return static_cast<double>(k.k);
        }
      },
      model.kind());
}

/// Fenchel conjugate f*(p) = sup_{y >= 0} { p y - f(y) }.
inline double eval_conjugate(CostModel const& model, double p)
{
  detail::require_nonnegative(p, "eval_conjugate");
  return std::visit(
      [&](auto const& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Power>) {
          double const y = eval_conjugate_prime(model, p);
          return k.gamma / (k.gamma + 1.0) * p * y;
        } else if constexpr (std::is_same_v<K, StepSupply>) {
          return static_cast<double>(k.k) * p;
        } else {
          double const y = eval_conjugate_prime(model, p);
          return std::max(0.0, p * y - eval_f(model, y));
        }
      },
      model.kind());
}

/// Faulhaber interpolant f = a S_d of the marginal cost a y^d.
inline CostModel faulhaber_cost(double a, int d)
{
  return CostModel(PolyMarginal{a, d});
}

/// Interpolant of the logarithmic marginal cost ln(1 + y).
inline CostModel log_marginal_cost(int segments = LogMarginal{}.segments)
{
  return CostModel(LogMarginal{segments});
}

struct GammaReport
{
  double gamma_times{1.0};
  double gamma_plus{1.0};
  double lambda{2.0};
  double tau{1.0};
};

namespace detail {

inline constexpr int kGammaGridPoints = 10000;
inline constexpr double kGammaGridMin = 1e-6;

// Max of g over a geometric grid on [lo, hi], refined by golden-section
// search in log-space around the grid argmax.
template <class G>
double geometric_sup(G const& g, double lo, double hi)
{
  if (hi <= lo)
    return g(lo);
  double const llo = std::log(lo);
  double const lhi = std::log(hi);
  int const n = kGammaGridPoints;
  auto at = [&](int i) { return std::exp(llo + (lhi - llo) * i / (n - 1)); };
  double best = -std::numeric_limits<double>::infinity();
  int arg = 0;
  for (int i = 0; i < n; ++i) {
    double const v = g(at(i));
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  double a = std::log(at(std::max(arg - 1, 0)));
  double b = std::log(at(std::min(arg + 1, n - 1)));
  double const phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    double const x1 = b - phi * (b - a);
    double const x2 = a + phi * (b - a);
    double const v1 = g(std::exp(x1));
    double const v2 = g(std::exp(x2));
    best = std::max({best, v1, v2});
    if (v1 > v2)
      b = x2;
    else
      a = x1;
  }
  return best;
}

}  // namespace detail

/// Regularity quantities bounding how fast f'' grows under a multiplicative
/// (gamma_times) or additive (gamma_plus) shift of its argument. Suprema are
/// taken over (0, y_max] and [tau, y_max] respectively.
inline GammaReport gamma_quantities(CostModel const& model, double lambda, double tau, double y_max)
{
  if (model.is<StepSupply>())
    throw DomainError("gamma_quantities: step_supply has no second derivative");
  if (!(lambda > 1.0))
    throw DomainError("gamma_quantities: lambda must exceed 1");
  if (!(tau > 0.0) || !(y_max > 0.0))
    throw DomainError("gamma_quantities: tau and y_max must be positive");

  double const y_lo = std::max(detail::kGammaGridMin, model.validity_threshold());
  auto times = [&](double y) {
    double const num = (lambda - 1.0) * y * eval_f_second(model, lambda * y);
    double const den = eval_f_prime(model, lambda * y) - eval_f_prime(model, y);
    if (!(den > 0.0))
      throw DomainError("gamma_quantities: f' not strictly increasing at y=" + std::to_string(y));
    return num / den;
  };
  auto plus = [&](double y) {
    double const den = eval_f_second(model, y);
    if (!(den > 0.0))
      throw DomainError("gamma_quantities: f'' vanishes at y=" + std::to_string(y));
    return eval_f_second(model, y + lambda) / den;
  };

  GammaReport r;
  r.lambda = lambda;
  r.tau = tau;
  r.gamma_times = std::max(1.0, detail::geometric_sup(times, y_lo, std::max(y_lo, y_max)));
  double const t_lo = std::max(tau, y_lo);
  r.gamma_plus = std::max(1.0, detail::geometric_sup(plus, t_lo, std::max(t_lo, y_max)));
  return r;
}

}  // namespace pdca
