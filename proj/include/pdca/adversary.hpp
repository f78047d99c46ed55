#pragma once

// Instance generators: the staged lower-bound families, discretized, plus
// seeded random small instances for property checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"
#include "pdca/instance.hpp"

namespace pdca {

inline constexpr std::size_t kDefaultBuyerCap = 1'000'000;

namespace detail {

// Stage values delta_v, 2 delta_v, ... up to `top` (inclusive within 1e-9).
inline std::vector<double> stage_grid(double first, double step, double top)
{
  std::vector<double> v;
  for (std::int64_t s = 0;; ++s) {
    double const x = first + static_cast<double>(s) * step;
    if (x > top * (1.0 + 1e-9) + 1e-12)
      break;
    v.push_back(x);
  }
  return v;
}

inline std::string stage_id(std::size_t stage, std::size_t idx)
{
  return "s" + std::to_string(stage) + "-" + std::to_string(idx);
}

}  // namespace detail

/// Single item; stage v in {dv, 2dv, ..., v*} brings ceil(f*'(v)/dy) buyers,
/// each wanting dy units at value v*dy. Stages arrive in increasing order.
inline Instance gen_staged_single_item(CostModel const& cost, double v_star, double delta_v, double delta_y,
                                       std::size_t buyer_cap = kDefaultBuyerCap)
{
  if (!cost.strictly_convex())
    throw DomainError("gen_staged_single_item: cost must be strictly convex");
  if (!(delta_v > 0.0) || !(delta_y > 0.0) || !(v_star > 0.0))
    throw DomainError("gen_staged_single_item: v*, delta_v and delta_y must be positive");

  auto const stages = detail::stage_grid(delta_v, delta_v, v_star);
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  for (double v : stages) {
    double const q = std::ceil(eval_conjugate_prime(cost, v) / delta_y - 1e-9);
    if (q + static_cast<double>(total) > static_cast<double>(buyer_cap))
      throw TooLarge("gen_staged_single_item: more than " + std::to_string(buyer_cap) + " buyers");
    counts.push_back(static_cast<std::size_t>(std::max(0.0, q)));
    total += counts.back();
  }

  Instance inst{1, delta_y, cost, {}, std::nullopt, std::nullopt};
  inst.buyers.reserve(total);
  for (std::size_t s = 0; s < stages.size(); ++s)
    for (std::size_t b = 0; b < counts[s]; ++b)
      inst.buyers.push_back(Buyer{detail::stage_id(s, b), {BundleValue{{0}, stages[s] * delta_y}}});
  if (!inst.buyers.empty()) {
    inst.v_min = delta_v * delta_y;
    inst.v_max = stages.back() * delta_y;
  }
  return inst;
}

/// Single item with supply k; each stage v in {v_min, v_min + dv, ..., v_max}
/// brings k unit-demand buyers of value v.
inline Instance gen_limited_supply_value_chain(std::int64_t k, double v_min, double v_max, double delta_v,
                                               std::size_t buyer_cap = kDefaultBuyerCap)
{
  if (k < 1 || !(v_min > 0.0) || !(v_max >= v_min) || !(delta_v > 0.0))
    throw DomainError("gen_limited_supply_value_chain: need k >= 1, 0 < v_min <= v_max, delta_v > 0");
  auto const stages = detail::stage_grid(v_min, delta_v, v_max);
  if (stages.size() * static_cast<std::size_t>(k) > buyer_cap)
    throw TooLarge("gen_limited_supply_value_chain: more than " + std::to_string(buyer_cap) + " buyers");

  Instance inst{1, 1.0, CostModel(StepSupply{k}), {}, v_min, v_max};
  for (std::size_t s = 0; s < stages.size(); ++s)
    for (std::int64_t b = 0; b < k; ++b)
      inst.buyers.push_back(Buyer{detail::stage_id(s, static_cast<std::size_t>(b)),
                                  {BundleValue{{0}, std::min(stages[s], v_max)}}});
  return inst;
}

struct BundleStages
{
  Instance instance;
  std::int64_t r{2};                 // stage growth factor actually used
  std::vector<std::size_t> sizes;    // bundle size per stage
  std::vector<bool> sampled;         // per stage: bundle lists were sampled
};

struct BundleStagesParams
{
  std::int64_t m{4};
  std::int64_t k{1};
  std::int64_t i{0};
  double v_min{1.0};
  double v_max{1.0};
  std::uint64_t seed{1};
  std::size_t buyer_cap{kDefaultBuyerCap};
};

/// Growth factor for m items: log2(m) rounded, at least 2.
inline std::int64_t bundle_stage_ratio(std::int64_t m)
{
  return std::max<std::int64_t>(2, std::llround(std::log2(static_cast<double>(m))));
}

namespace detail {

inline double binomial_double(std::int64_t n, std::int64_t s)
{
  double c = 1.0;
  for (std::int64_t t = 1; t <= s; ++t)
    c = c * static_cast<double>(n - s + t) / static_cast<double>(t);
  return c;
}

inline void all_subsets(std::size_t m, std::size_t s, std::vector<Bundle>& out)
{
  Bundle cur(s);
  std::iota(cur.begin(), cur.end(), 0);
  for (;;) {
    out.push_back(cur);
    std::size_t t = s;
    while (t > 0 && cur[t - 1] == m - s + t - 1)
      --t;
    if (t == 0)
      return;
    ++cur[t - 1];
    for (std::size_t u = t; u < s; ++u)
      cur[u] = cur[u - 1] + 1;
  }
}

inline Bundle random_subset(std::size_t m, std::size_t s, std::mt19937_64& rng)
{
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t t = 0; t < s; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, m - 1);
    std::swap(pool[t], pool[pick(rng)]);
  }
  Bundle b(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
  std::sort(b.begin(), b.end());
  return b;
}

}  // namespace detail

/// m items with supply k; stage j = 0..i brings k r^j buyers of value 1 for
/// any bundle of size ceil(m / r^j). Bundle lists are complete when they fit
/// the per-buyer cap and otherwise a seeded sample.
inline BundleStages gen_limited_supply_bundle_stages(BundleStagesParams const& prm)
{
  if (prm.m < 1 || prm.k < 1 || prm.i < 0)
    throw DomainError("gen_limited_supply_bundle_stages: need m, k >= 1 and i >= 0");
  if (!(prm.v_min > 0.0) || prm.v_min > 1.0 || prm.v_max < 1.0)
    throw DomainError("gen_limited_supply_bundle_stages: need v_min <= 1 <= v_max");
  BundleStages out;
  out.instance = Instance{static_cast<std::size_t>(prm.m), 1.0, CostModel(StepSupply{prm.k}), {}, prm.v_min, prm.v_max};
  out.r = bundle_stage_ratio(prm.m);
  double const rd = static_cast<double>(out.r);
  double const md = static_cast<double>(prm.m);
  if (std::pow(rd, static_cast<double>(prm.i)) > md)
    throw DomainError("gen_limited_supply_bundle_stages: r^i exceeds m");

  double total = 0.0;
  for (std::int64_t j = 0; j <= prm.i; ++j)
    total += static_cast<double>(prm.k) * std::pow(rd, static_cast<double>(j));
  if (total > static_cast<double>(prm.buyer_cap))
    throw TooLarge("gen_limited_supply_bundle_stages: more than " + std::to_string(prm.buyer_cap) + " buyers");

  std::mt19937_64 rng(prm.seed);
  auto const m = static_cast<std::size_t>(prm.m);
  for (std::int64_t j = 0; j <= prm.i; ++j) {
    double const rj = std::pow(rd, static_cast<double>(j));
    auto const s = static_cast<std::size_t>(std::ceil(md / rj - 1e-9));
    bool const sample = detail::binomial_double(prm.m, static_cast<std::int64_t>(s)) >
                        static_cast<double>(kMaxBundlesPerBuyer);
    out.sizes.push_back(s);
    out.sampled.push_back(sample);

    std::vector<Bundle> full;
    if (!sample)
      detail::all_subsets(m, s, full);
    auto const buyers = static_cast<std::size_t>(std::llround(static_cast<double>(prm.k) * rj));
    for (std::size_t b = 0; b < buyers; ++b) {
      Buyer buyer{detail::stage_id(static_cast<std::size_t>(j), b), {}};
      if (!sample) {
        for (auto const& items : full)
          buyer.bundles.push_back({items, 1.0});
      } else {
        std::vector<Bundle> seen;
        while (seen.size() < kMaxBundlesPerBuyer) {
          auto items = detail::random_subset(m, s, rng);
          if (std::find(seen.begin(), seen.end(), items) == seen.end())
            seen.push_back(std::move(items));
        }
        std::sort(seen.begin(), seen.end());
        for (auto& items : seen)
          buyer.bundles.push_back({std::move(items), 1.0});
      }
      out.instance.buyers.push_back(std::move(buyer));
    }
  }
  return out;
}

struct RandomInstanceParams
{
  std::size_t m{3};
  std::size_t n{6};
  std::size_t max_bundles{3};
  std::size_t max_bundle_size{2};
  double v_lo{0.0};
  double v_hi{1.0};
  bool per_item{true};  // scale values by bundle size
  double delta_y{1.0};
  std::optional<double> v_min;
  std::optional<double> v_max;
};

/// Seeded random multi-minded instance. Bundle values are drawn uniformly
/// from [v_lo, v_hi], times the bundle size when `per_item` is set.
inline Instance gen_random_small(CostModel const& cost, RandomInstanceParams const& prm, std::uint64_t seed)
{
  if (prm.m == 0 || prm.max_bundles == 0 || prm.max_bundle_size == 0 || !(prm.v_hi >= prm.v_lo) ||
      prm.v_lo < 0.0)
    throw DomainError("gen_random_small: invalid parameters");
  if (prm.max_bundles > kMaxBundlesPerBuyer)
    throw DomainError("gen_random_small: too many bundles per buyer");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> value(prm.v_lo, prm.v_hi);
  std::uniform_int_distribution<std::size_t> nb(1, prm.max_bundles);
  std::uniform_int_distribution<std::size_t> sz(1, std::min(prm.max_bundle_size, prm.m));

  Instance inst{prm.m, prm.delta_y, cost, {}, prm.v_min, prm.v_max};
  for (std::size_t b = 0; b < prm.n; ++b) {
    Buyer buyer{"b" + std::to_string(b), {}};
    std::size_t const want = nb(rng);
    for (std::size_t t = 0; t < want * 4 && buyer.bundles.size() < want; ++t) {
      auto items = detail::random_subset(prm.m, sz(rng), rng);
      bool dup = false;
      for (auto const& bv : buyer.bundles)
        dup = dup || bv.items == items;
      if (dup)
        continue;
      double const v = value(rng) * (prm.per_item ? static_cast<double>(items.size()) : 1.0);
      buyer.bundles.push_back({std::move(items), v});
    }
    inst.buyers.push_back(std::move(buyer));
  }
  return inst;
}

}  // namespace pdca
