#pragma once

// Primal and dual objective series of a mechanism run, rebuilt from the
// trace by an independent replay, and the local and weak-duality checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdca/auction.hpp"
#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"
#include "pdca/instance.hpp"
#include "pdca/pricing_rule.hpp"

namespace pdca {

struct LedgerSeries
{
  std::vector<double> primal;  // P^0 .. P^n
  std::vector<double> dual;    // D^0 .. D^n
};

namespace detail {

inline bool close(double a, double b, double rel = 1e-9)
{
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Replays the recorded choices against `inst` and recomputes demands,
/// prices, payments and both objectives. Throws InconsistentTrace if the
/// trace disagrees with the replay.
inline LedgerSeries ledger_from_trace(AuctionTrace const& tr, Instance const& inst)
{
  if (tr.m != inst.m || tr.records.size() != inst.buyers.size() || tr.delta_y != inst.delta_y)
    throw InconsistentTrace("ledger: trace shape does not match the instance");
  if (tr.demands.size() != tr.records.size() * tr.m || tr.prices.size() != tr.demands.size())
    throw InconsistentTrace("ledger: demand or price rows have the wrong size");

  auto const& f = inst.cost;
  auto const& rule = tr.rule;
  std::size_t const m = inst.m;
  std::vector<std::int64_t> count(m, 0);
  auto demand = [&](std::size_t j) { return tr.init_y + static_cast<double>(count[j]) * inst.delta_y; };

  std::vector<double> p(m, posted_price(rule, inst, tr.init_y));
  for (std::size_t j = 0; j < m; ++j)
    if (tr.init_prices.size() != m || !detail::close(tr.init_prices[j], p[j]))
      throw InconsistentTrace("ledger: initial prices disagree with the rule");

  // P^i = sum of accepted values - sum_j f(y_j),  D^i = sum u + sum_j f*(p_j).
  std::vector<double> cost(m, eval_f(f, tr.init_y));
  std::vector<double> conj(m, eval_conjugate(f, p[0]));
  double values = 0.0, utilities = 0.0;
  double cost_sum = static_cast<double>(m) * cost[0];
  double conj_sum = static_cast<double>(m) * conj[0];

  LedgerSeries s;
  s.primal.reserve(tr.records.size() + 1);
  s.dual.reserve(tr.records.size() + 1);
  s.primal.push_back(values - cost_sum);
  s.dual.push_back(utilities + conj_sum);

  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    auto const& rec = tr.records[i];
    auto const& buyer = inst.buyers[i];
    if (rec.buyer != buyer.id)
      throw InconsistentTrace("ledger: buyer " + std::to_string(i) + " id mismatch");
    auto const sel = select_bundle(buyer, p, inst.delta_y);
    if (sel.bundle != rec.bundle)
      throw InconsistentTrace("ledger: buyer '" + buyer.id + "' did not take a utility-maximizing bundle");
    if (!detail::close(sel.payment, rec.payment) || !detail::close(sel.utility, rec.utility))
      throw InconsistentTrace("ledger: buyer '" + buyer.id + "' payment or utility disagrees with posted prices");
    utilities += sel.utility;
    if (sel.bundle) {
      double const v = buyer.bundles[*sel.bundle].value;
      if (!detail::close(v, rec.value))
        throw InconsistentTrace("ledger: buyer '" + buyer.id + "' value mismatch");
      values += v;
      for (auto j : buyer.bundles[*sel.bundle].items) {
        ++count[j];
        p[j] = posted_price(rule, inst, demand(j));
        double const c = eval_f(f, demand(j));
        double const q = eval_conjugate(f, p[j]);
        cost_sum += c - cost[j];
        conj_sum += q - conj[j];
        cost[j] = c;
        conj[j] = q;
      }
    }
    auto const ys = tr.demands_after(i);
    auto const ps = tr.prices_after(i);
    for (std::size_t j = 0; j < m; ++j)
      if (!detail::close(ys[j], demand(j)) || !detail::close(ps[j], p[j]))
        throw InconsistentTrace("ledger: state after buyer '" + buyer.id + "' disagrees with the replay");
    s.primal.push_back(values - cost_sum);
    s.dual.push_back(utilities + conj_sum);
  }
  return s;
}

struct LocalCheck
{
  bool ok{true};
  std::optional<std::size_t> first_violation;  // 1-based arrival index i of the step P^{i-1} -> P^i
  double worst_slack{0.0};                     // min over steps of (dP - dD/alpha), absolute
  double residual{0.0};                        // sum over steps of max(0, dD/alpha - dP)
};

/// Checks  P^i - P^{i-1} >= (D^i - D^{i-1}) / alpha  for every arrival, up to
/// a relative tolerance of 1e-9.
inline LocalCheck check_local(LedgerSeries const& s, double alpha)
{
  if (!(alpha > 0.0))
    throw DomainError("check_local: alpha must be positive");
  if (s.primal.size() != s.dual.size())
    throw InconsistentTrace("check_local: primal and dual series differ in length");
  LocalCheck c;
  for (std::size_t i = 1; i < s.primal.size(); ++i) {
    double const dp = s.primal[i] - s.primal[i - 1];
    double const dd = (s.dual[i] - s.dual[i - 1]) / alpha;
    double const slack = dp - dd;
    c.worst_slack = std::min(c.worst_slack, slack);
    if (slack < 0.0)
      c.residual += -slack;
    double const tol = kFeasibilityTolerance * std::max({1.0, std::abs(dp), std::abs(dd)});
    if (slack < -tol && c.ok) {
      c.ok = false;
      c.first_violation = i;
    }
  }
  return c;
}

/// beta that makes P^0 >= D^0/alpha - beta tight.
inline double beta_actual(LedgerSeries const& s, double alpha)
{
  return s.dual.front() / alpha - s.primal.front();
}

/// Additive constant the matching guarantee allows, summed over items.
inline double beta_theorem(AuctionTrace const& tr, double epsilon)
{
  return static_cast<double>(tr.m) * guaranteed_alpha(tr.rule, epsilon).beta;
}

/// epsilon implied by an integral rule's starting demand 1/eps - 1.
inline double epsilon_from_init(double init_y)
{
  return 1.0 / (init_y + 1.0);
}

struct DualState
{
  std::vector<double> u;  // per buyer
  std::vector<double> p;  // per item, final posted prices
  double objective{0.0};  // sum u + sum_j f*(p_j)
};

struct PrimalState
{
  std::vector<std::optional<std::size_t>> x;  // chosen bundle per buyer
  std::vector<double> y;                      // per item, final demand
  double objective{0.0};                      // sum of values - sum_j f(y_j)
};

inline DualState dual_state(AuctionTrace const& tr)
{
  DualState d;
  for (auto const& r : tr.records)
    d.u.push_back(r.utility);
  if (tr.records.empty())
    d.p = tr.init_prices;
  else {
    auto const ps = tr.prices_after(tr.records.size() - 1);
    d.p.assign(ps.begin(), ps.end());
  }
  d.objective = tr.dual.back();
  return d;
}

inline PrimalState primal_state(AuctionTrace const& tr)
{
  PrimalState x;
  for (auto const& r : tr.records)
    x.x.push_back(r.bundle);
  if (tr.records.empty())
    x.y.assign(tr.m, tr.init_y);
  else {
    auto const ys = tr.final_demands();
    x.y.assign(ys.begin(), ys.end());
  }
  x.objective = tr.primal.back();
  return x;
}

/// Dual constraints u_i + delta_y * sum_{j in S} p_j >= v_i(S) with the
/// prices each buyer faced on arrival; returns the first violating buyer.
inline std::optional<std::size_t> dual_violation(AuctionTrace const& tr, Instance const& inst)
{
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    auto const faced = tr.prices_faced(i);
    double const u = tr.records[i].utility;
    if (u < 0.0)
      return i;
    for (auto const& bv : inst.buyers[i].bundles) {
      double pay = 0.0;
      for (auto j : bv.items)
        pay += faced[j] * inst.delta_y;
      if (u + pay < bv.value - 1e-9 * std::max(1.0, bv.value))
        return i;
    }
  }
  return std::nullopt;
}

/// D >= OPT up to a relative tolerance of 1e-9.
inline bool check_weak_duality(DualState const& dual, double opt)
{
  return dual.objective >= opt - 1e-9 * std::max({1.0, std::abs(opt), std::abs(dual.objective)});
}

}  // namespace pdca
