#pragma once

// The posted-price mechanism: items are offered at p(y_j), each arriving
// buyer takes a utility-maximizing bundle and pays the posted total.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"
#include "pdca/instance.hpp"
#include "pdca/pricing_rule.hpp"

namespace pdca {

struct Selection
{
  std::optional<std::size_t> bundle;  // index into Buyer::bundles; empty bundle if unset
  double utility{0.0};
  double payment{0.0};
};

namespace detail {

// Empty first, then fewer items, then lexicographic item order.
inline bool tie_precedes(Bundle const& a, Bundle const& b)
{
  if (a.size() != b.size())
    return a.size() < b.size();
  return a < b;
}

}  // namespace detail

/// Utility-maximizing choice among the listed bundles and the empty bundle.
/// Ties resolve deterministically, with the empty bundle winning any tie at 0.
inline Selection select_bundle(Buyer const& buyer, std::span<double const> prices, double delta_y)
{
  Selection best;
  Bundle const* best_items = nullptr;
  for (std::size_t s = 0; s < buyer.bundles.size(); ++s) {
    auto const& bv = buyer.bundles[s];
    double pay = 0.0;
    for (auto j : bv.items)
      pay += prices[j] * delta_y;
    double const u = bv.value - pay;
    bool better = u > best.utility;
    if (!better && u == best.utility && best_items)
      better = detail::tie_precedes(bv.items, *best_items);
    if (better) {
      best.bundle = s;
      best.utility = u;
      best.payment = pay;
      best_items = &bv.items;
    }
  }
  return best;
}

/// Price posted for the next unit of an item with y units sold. Under a
/// supply-k cost the (k+1)-th unit is posted at v_max, which no buyer
/// strictly prefers to the empty bundle.
inline double posted_price(PricingRule const& rule, Instance const& inst, double y)
{
  if (auto const* s = std::get_if<StepSupply>(&inst.cost.kind()))
    if (y + inst.delta_y > static_cast<double>(s->k) * (1.0 + 1e-12))
      return *inst.v_max;
  return price(rule, y);
}

struct TraceRecord
{
  std::string buyer;
  std::optional<std::size_t> bundle;
  double value{0.0};
  double payment{0.0};
  double utility{0.0};
};

struct AuctionTrace
{
  explicit AuctionTrace(PricingRule r) : rule(std::move(r)) {}

  PricingRule rule;
  std::size_t m{0};
  double delta_y{1.0};
  double init_y{0.0};
  std::vector<double> init_prices;
  std::vector<TraceRecord> records;
  std::vector<double> demands;  // row i: y_j after buyer i (row-major, m columns)
  std::vector<double> prices;   // row i: posted p_j after buyer i
  std::vector<double> primal;   // P^0 .. P^n
  std::vector<double> dual;     // D^0 .. D^n

  std::size_t size() const noexcept { return records.size(); }

  std::span<double const> demands_after(std::size_t i) const { return {demands.data() + i * m, m}; }
  std::span<double const> prices_after(std::size_t i) const { return {prices.data() + i * m, m}; }

  /// Prices buyer i faced on arrival.
  std::span<double const> prices_faced(std::size_t i) const
  {
    return i == 0 ? std::span<double const>(init_prices) : prices_after(i - 1);
  }

  std::span<double const> final_demands() const
  {
    if (records.empty())
      return {};
    return demands_after(records.size() - 1);
  }
};

/// Runs the mechanism over the arrival order of `inst`, starting every item
/// at init_y units.
inline AuctionTrace run_mechanism(Instance const& inst, PricingRule const& rule, double init_y = 0.0)
{
  validate(inst);
  detail::require_nonnegative(init_y, "run_mechanism: init_y");
  auto const& f = inst.cost;
  std::size_t const m = inst.m;
  std::size_t const n = inst.buyers.size();

  AuctionTrace tr(rule);
  tr.m = m;
  tr.delta_y = inst.delta_y;
  tr.init_y = init_y;
  tr.records.reserve(n);
  tr.demands.reserve(n * m);
  tr.prices.reserve(n * m);
  tr.primal.reserve(n + 1);
  tr.dual.reserve(n + 1);

  // Demand is init_y + count * delta_y, recomputed from integer counts.
  std::vector<std::int64_t> count(m, 0);
  auto demand = [&](std::size_t j) { return init_y + static_cast<double>(count[j]) * inst.delta_y; };

  std::vector<double> p(m, posted_price(rule, inst, init_y));
  tr.init_prices = p;
  double const md = static_cast<double>(m);
  double primal = -md * eval_f(f, init_y);
  double dual = md * eval_conjugate(f, p[0]);
  tr.primal.push_back(primal);
  tr.dual.push_back(dual);

  auto const* supply = std::get_if<StepSupply>(&f.kind());
  for (auto const& buyer : inst.buyers) {
    auto const sel = select_bundle(buyer, p, inst.delta_y);
    TraceRecord rec{buyer.id, sel.bundle, 0.0, sel.payment, sel.utility};
    double d_primal = 0.0, d_dual = sel.utility;
    if (sel.bundle) {
      rec.value = buyer.bundles[*sel.bundle].value;
      d_primal = rec.value;
      for (auto j : buyer.bundles[*sel.bundle].items) {
        double const before = demand(j);
        ++count[j];
        double const after = demand(j);
        if (supply && after > static_cast<double>(supply->k) * (1.0 + 1e-12))
          throw SupplyViolation("run_mechanism: item " + std::to_string(j) + " sold beyond supply");
        double const p_new = posted_price(rule, inst, after);
        d_primal -= eval_f(f, after) - eval_f(f, before);
        d_dual += eval_conjugate(f, p_new) - eval_conjugate(f, p[j]);
        p[j] = p_new;
      }
    }
    primal += d_primal;
    dual += d_dual;
    tr.records.push_back(std::move(rec));
    for (std::size_t j = 0; j < m; ++j)
      tr.demands.push_back(demand(j));
    tr.prices.insert(tr.prices.end(), p.begin(), p.end());
    tr.primal.push_back(primal);
    tr.dual.push_back(dual);
  }
  return tr;
}

/// Sum of accepted values less the production cost incurred during the run;
/// the cost of the initial y is excluded.
inline double welfare(AuctionTrace const& tr, Instance const& inst)
{
  double total = 0.0;
  for (auto const& r : tr.records)
    total += r.value;
  if (tr.records.empty())
    return total;
  double const base = eval_f(inst.cost, tr.init_y);
  for (double y : tr.final_demands())
    total -= eval_f(inst.cost, y) - base;
  return total;
}

}  // namespace pdca
