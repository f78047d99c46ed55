#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"

namespace pdca {

/// Item indices, sorted and unique, 0-based.
using Bundle = std::vector<std::size_t>;

struct BundleValue
{
  Bundle items;
  double value{0.0};
};

/// A multi-minded buyer: listed bundles carry values, every other bundle
/// (including the empty one) is worth 0.
struct Buyer
{
  std::string id;
  std::vector<BundleValue> bundles;
};

inline constexpr std::size_t kMaxBundlesPerBuyer = 64;

struct Instance
{
  std::size_t m{1};
  double delta_y{1.0};
  CostModel cost;
  std::vector<Buyer> buyers;
  std::optional<double> v_min;
  std::optional<double> v_max;
};

/// Throws DomainError describing the first violated invariant.
inline void validate(Instance const& inst)
{
  if (inst.m == 0)
    throw DomainError("instance: m must be positive");
  if (!(inst.delta_y > 0.0))
    throw DomainError("instance: delta_y must be positive");
  if (inst.cost.is<StepSupply>() && !inst.v_max)
    throw DomainError("instance: step_supply instances require v_max");
  if (inst.v_min && inst.v_max && *inst.v_min > *inst.v_max)
    throw DomainError("instance: v_min exceeds v_max");

  for (auto const& b : inst.buyers) {
    if (b.bundles.size() > kMaxBundlesPerBuyer)
      throw DomainError("instance: buyer '" + b.id + "' lists more than " + std::to_string(kMaxBundlesPerBuyer) +
                        " bundles");
    for (std::size_t s = 0; s < b.bundles.size(); ++s) {
      auto const& bv = b.bundles[s];
      if (bv.items.empty())
        throw DomainError("instance: buyer '" + b.id + "' lists the empty bundle");
      if (!std::is_sorted(bv.items.begin(), bv.items.end()) ||
          std::adjacent_find(bv.items.begin(), bv.items.end()) != bv.items.end())
        throw DomainError("instance: buyer '" + b.id + "' has an unsorted or repeated bundle");
      if (bv.items.back() >= inst.m)
        throw DomainError("instance: buyer '" + b.id + "' references item outside [0, m)");
      if (!(bv.value >= 0.0))
        throw DomainError("instance: buyer '" + b.id + "' has a negative value");
      if (inst.v_max && bv.value > *inst.v_max)
        throw DomainError("instance: buyer '" + b.id + "' value exceeds v_max");
      if (inst.v_min && bv.value > 0.0 && bv.value < *inst.v_min)
        throw DomainError("instance: buyer '" + b.id + "' positive value below v_min");
      for (std::size_t t = 0; t < s; ++t)
        if (b.bundles[t].items == bv.items)
          throw DomainError("instance: buyer '" + b.id + "' lists a bundle twice");
    }
  }
}

/// Sorts and deduplicates item lists in place.
inline Bundle normalized(Bundle b)
{
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

}  // namespace pdca
