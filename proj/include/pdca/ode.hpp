#pragma once

#include <algorithm>
#include <cmath>

namespace pdca {

struct OdeOptions
{
  double rtol{1e-8};
  double atol{1e-300};
  double h_min{1e-300};
  int max_steps{2'000'000};
};

enum class OdeStatus
{
  completed,  // reached x_end
  stopped,    // observer returned false
  failed      // step size underflow or non-finite state
};

/// Classic fourth-order Runge-Kutta for a scalar ODE u' = rhs(x, u) with
/// step-doubling error control. `observe(x, u)` is called after every
/// accepted step; returning false stops the integration.
template <class Rhs, class Observer>
OdeStatus integrate_rk4_adaptive(Rhs const& rhs, double x, double u, double x_end, double h,
                                 Observer&& observe, OdeOptions const& opt = {})
{
  auto rk4 = [&](double x0, double u0, double step) {
    double const k1 = rhs(x0, u0);
    double const k2 = rhs(x0 + 0.5 * step, u0 + 0.5 * step * k1);
    double const k3 = rhs(x0 + 0.5 * step, u0 + 0.5 * step * k2);
    double const k4 = rhs(x0 + step, u0 + step * k3);
    return u0 + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  for (int steps = 0; steps < opt.max_steps; ++steps) {
    if (x >= x_end)
      return OdeStatus::completed;
    h = std::min(h, x_end - x);

    double const full = rk4(x, u, h);
    double const half = rk4(x, u, 0.5 * h);
    double const fine = rk4(x + 0.5 * h, half, 0.5 * h);
    if (!std::isfinite(full) || !std::isfinite(fine)) {
      h *= 0.25;
      if (h < opt.h_min)
        return OdeStatus::failed;
      continue;
    }

    double const err = std::abs(fine - full) / 15.0;
    double const scale = opt.atol + opt.rtol * std::max(std::abs(u), std::abs(fine));
    if (err <= scale) {
      x += h;
      u = fine + (fine - full) / 15.0;  // local extrapolation
      if (!observe(x, u))
        return OdeStatus::stopped;
      double const grow = err > 0.0 ? 0.9 * std::pow(scale / err, 0.2) : 4.0;
      h *= std::clamp(grow, 0.2, 4.0);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(scale / err, 0.25));
      if (h < opt.h_min)
        return OdeStatus::failed;
    }
  }
  return OdeStatus::failed;
}

}  // namespace pdca
