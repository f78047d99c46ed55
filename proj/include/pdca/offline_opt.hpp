#pragma once

// Offline optimum: exact search for small instances and closed forms for
// the structured lower-bound families.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"
#include "pdca/instance.hpp"

namespace pdca {

struct OptResult
{
  double value{0.0};
  std::vector<std::optional<std::size_t>> allocation;  // bundle index per buyer
  std::string method;
};

struct OptLimits
{
  std::size_t max_states{4'000'000};
};

/// Exact welfare maximum  max sum v_i(S_i) - sum_j f(y_j)  by memoized search
/// over (buyer, units sold per item). Throws TooLarge once the number of
/// distinct states exceeds `limits.max_states`.
inline OptResult brute_force_opt(Instance const& inst, OptLimits limits = {})
{
  validate(inst);
  std::size_t const n = inst.buyers.size();
  std::size_t const m = inst.m;
  auto const& f = inst.cost;
  std::optional<std::int64_t> cap;
  if (auto const* s = std::get_if<StepSupply>(&f.kind()))
    cap = static_cast<std::int64_t>(std::floor(static_cast<double>(s->k) / inst.delta_y + 1e-9));

  // f(c * delta_y) memo, shared by all items.
  std::vector<double> cost_at;
  auto cost = [&](std::int64_t c) {
    while (static_cast<std::int64_t>(cost_at.size()) <= c)
      cost_at.push_back(eval_f(f, static_cast<double>(cost_at.size()) * inst.delta_y));
    return cost_at[static_cast<std::size_t>(c)];
  };

  using Key = std::string;
  std::vector<std::unordered_map<Key, double>> memo(n + 1);
  std::size_t states = 0;
  std::vector<std::int64_t> counts(m, 0);

  auto key_of = [&] {
    Key k(m * sizeof(std::int64_t), '\0');
    std::memcpy(k.data(), counts.data(), k.size());
    return k;
  };

  // Best value-to-go from buyer i with the current counts; the terminal
  // state pays the production cost.
  auto best = [&](auto&& self, std::size_t i) -> double {
    if (i == n) {
      double c = 0.0;
      for (auto x : counts)
        c -= cost(x);
      return c;
    }
    auto key = key_of();
    if (auto it = memo[i].find(key); it != memo[i].end())
      return it->second;
    if (++states > limits.max_states)
      throw TooLarge("brute_force_opt: more than " + std::to_string(limits.max_states) + " search states");

    double v = self(self, i + 1);
    for (auto const& bv : inst.buyers[i].bundles) {
      bool fits = true;
      for (auto j : bv.items)
        if (cap && counts[j] + 1 > *cap)
          fits = false;
      if (!fits)
        continue;
      for (auto j : bv.items)
        ++counts[j];
      v = std::max(v, bv.value + self(self, i + 1));
      for (auto j : bv.items)
        --counts[j];
    }
    memo[i].emplace(std::move(key), v);
    return v;
  };

  OptResult r;
  r.method = "brute_force";
  r.value = best(best, 0);

  // Walk the memo forward to recover one optimal allocation, preferring the
  // empty bundle, then earlier listed bundles.
  std::fill(counts.begin(), counts.end(), 0);
  double remaining = r.value;
  for (std::size_t i = 0; i < n; ++i) {
    auto tol = [&](double x) { return 1e-9 * std::max(1.0, std::abs(x)); };
    std::optional<std::size_t> pick;
    double const skip = best(best, i + 1);
    if (std::abs(skip - remaining) > tol(remaining)) {
      for (std::size_t s = 0; s < inst.buyers[i].bundles.size(); ++s) {
        auto const& bv = inst.buyers[i].bundles[s];
        bool fits = true;
        for (auto j : bv.items)
          if (cap && counts[j] + 1 > *cap)
            fits = false;
        if (!fits)
          continue;
        for (auto j : bv.items)
          ++counts[j];
        double const take = bv.value + best(best, i + 1);
        if (std::abs(take - remaining) <= tol(remaining)) {
          pick = s;
          remaining -= bv.value;
          break;
        }
        for (auto j : bv.items)
          --counts[j];
      }
    }
    r.allocation.push_back(pick);
  }
  return r;
}

/// Welfare of an explicit allocation; throws DomainError if it breaks supply.
inline double allocation_welfare(Instance const& inst, std::vector<std::optional<std::size_t>> const& alloc)
{
  if (alloc.size() != inst.buyers.size())
    throw DomainError("allocation_welfare: allocation size mismatch");
  std::vector<double> y(inst.m, 0.0);
  double w = 0.0;
  for (std::size_t i = 0; i < alloc.size(); ++i) {
    if (!alloc[i])
      continue;
    auto const& bv = inst.buyers[i].bundles.at(*alloc[i]);
    w += bv.value;
    for (auto j : bv.items)
      y[j] += inst.delta_y;
  }
  for (double yj : y)
    w -= eval_f(inst.cost, yj);
  return w;
}

/// OPT of the staged single-item family in the limit of fine stages: f*(v*).
inline double opt_single_item_staged(CostModel const& f, double v_star)
{
  if (!(v_star > 0.0))
    throw DomainError("opt_single_item_staged: v* must be positive");
  return eval_conjugate(f, v_star);
}

/// OPT of the bundle-stage family stopped after stage i: k r^i. Exact only
/// when r^i divides m; otherwise the last stage's bundles cannot tile the
/// supply and the value is rejected.
inline double opt_limited_supply_staged(std::int64_t m, std::int64_t k, double r, std::int64_t i)
{
  if (m < 1 || k < 1 || !(r > 1.0) || i < 0)
    throw DomainError("opt_limited_supply_staged: need m, k >= 1, r > 1, i >= 0");
  double const ri = std::pow(r, static_cast<double>(i));
  if (ri != std::floor(ri) || std::fmod(static_cast<double>(m), ri) != 0.0)
    throw DomainError("opt_limited_supply_staged: closed form needs r^i to divide m");
  return static_cast<double>(k) * std::pow(r, static_cast<double>(i));
}

}  // namespace pdca
