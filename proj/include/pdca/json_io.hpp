#pragma once

// JSON encodings of cost models, rules, instances, traces and results.
// Field names are listed in schema/formats.md.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pdca/auction.hpp"
#include "pdca/cost_model.hpp"
#include "pdca/errors.hpp"
#include "pdca/instance.hpp"
#include "pdca/offline_opt.hpp"
#include "pdca/pricing_rule.hpp"

namespace pdca {

using json = nlohmann::json;

namespace detail {

template <class T>
T field(json const& j, char const* key, char const* what)
{
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string(what) + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (json::exception const& e) {
    throw ParseError(std::string(what) + ": bad field '" + key + "': " + e.what());
  }
}

template <class T>
std::optional<T> opt_field(json const& j, char const* key, char const* what)
{
  if (!j.contains(key) || j.at(key).is_null())
    return std::nullopt;
  return field<T>(j, key, what);
}

inline json opt_to_json(std::optional<double> v)
{
  return v ? json(*v) : json(nullptr);
}

inline json index_to_json(std::optional<std::size_t> v)
{
  return v ? json(*v) : json(nullptr);
}

}  // namespace detail

inline json cost_to_json(CostModel const& c)
{
  return std::visit(
      [](auto const& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Power>)
          return {{"kind", "power"}, {"a", k.a}, {"gamma", k.gamma}};
        else if constexpr (std::is_same_v<K, PolyMarginal>)
          return {{"kind", "poly_marginal"}, {"a", k.a}, {"d", k.d}};
        else if constexpr (std::is_same_v<K, LinearMarginal>)
          return {{"kind", "linear_marginal"}, {"a", k.a}, {"b", k.b}};
        else if constexpr (std::is_same_v<K, LogMarginal>)
          return {{"kind", "log_marginal"}, {"segments", k.segments}};
        else
          return {{"kind", "step_supply"}, {"k", k.k}};
      },
      c.kind());
}

inline CostModel cost_from_json(json const& j)
{
  auto const kind = detail::field<std::string>(j, "kind", "cost");
  if (kind == "power")
    return CostModel(Power{detail::field<double>(j, "a", "cost"), detail::field<double>(j, "gamma", "cost")});
  if (kind == "poly_marginal")
    return faulhaber_cost(detail::field<double>(j, "a", "cost"), detail::field<int>(j, "d", "cost"));
  if (kind == "linear_marginal")
    return CostModel(LinearMarginal{detail::field<double>(j, "a", "cost"), detail::field<double>(j, "b", "cost")});
  if (kind == "log_marginal")
    return log_marginal_cost(detail::opt_field<int>(j, "segments", "cost").value_or(LogMarginal{}.segments));
  if (kind == "step_supply")
    return CostModel(StepSupply{detail::field<std::int64_t>(j, "k", "cost")});
  throw ParseError("cost: unknown kind '" + kind + "'");
}

inline json rule_to_json(PricingRule const& r)
{
  json j{{"kind", r.name()}};
  std::visit(
      [&](auto const& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PowerRule> || std::is_same_v<K, PowerIntegral>)
          j["gamma"] = k.gamma;
        else if constexpr (std::is_same_v<K, UnifiedFractional> || std::is_same_v<K, UnifiedIntegral>)
          j["lambda"] = k.lambda;
        else if constexpr (std::is_same_v<K, ExponentialSupply>) {
          j["p0"] = k.p0;
          j["r"] = k.r;
        }
      },
      r.kind());
  return j;
}

/// Builds a rule over `cost`. Power rules take gamma from the cost when not
/// given; the supply rule takes either {p0, r} or {m, v_min, v_max}.
inline PricingRule rule_from_json(json const& j, CostModel const& cost)
{
  auto const kind = detail::field<std::string>(j, "kind", "rule");
  auto gamma = [&] {
    if (auto g = detail::opt_field<double>(j, "gamma", "rule"))
      return *g;
    if (!cost.is<Power>())
      throw DomainError("rule: power rules require a power cost");
    return cost.as<Power>().gamma;
  };
  if (kind == "power")
    return PricingRule(PowerRule{gamma()}, cost);
  if (kind == "power-integral")
    return PricingRule(PowerIntegral{gamma()}, cost);
  if (kind == "unified-fractional")
    return PricingRule(UnifiedFractional{detail::field<double>(j, "lambda", "rule")}, cost);
  if (kind == "unified-integral")
    return PricingRule(UnifiedIntegral{detail::field<double>(j, "lambda", "rule")}, cost);
  if (kind == "concave-integral")
    return PricingRule(ConcaveIntegral{}, cost);
  if (kind == "exponential-supply") {
    if (j.contains("p0"))
      return PricingRule(ExponentialSupply{detail::field<double>(j, "p0", "rule"), detail::field<double>(j, "r", "rule")},
                         cost);
    if (!cost.is<StepSupply>())
      throw DomainError("rule: exponential-supply requires a step_supply cost");
    return exponential_supply_rule(detail::field<std::int64_t>(j, "m", "rule"), cost.as<StepSupply>().k,
                                   detail::field<double>(j, "v_min", "rule"), detail::field<double>(j, "v_max", "rule"));
  }
  throw ParseError("rule: unknown kind '" + kind + "'");
}

inline json instance_to_json(Instance const& inst)
{
  json buyers = json::array();
  for (auto const& b : inst.buyers) {
    json bundles = json::array();
    for (auto const& bv : b.bundles)
      bundles.push_back({{"items", bv.items}, {"value", bv.value}});
    buyers.push_back({{"id", b.id}, {"bundles", std::move(bundles)}});
  }
  return {{"m", inst.m},
          {"delta_y", inst.delta_y},
          {"cost", cost_to_json(inst.cost)},
          {"v_min", detail::opt_to_json(inst.v_min)},
          {"v_max", detail::opt_to_json(inst.v_max)},
          {"buyers", std::move(buyers)}};
}

inline Instance instance_from_json(json const& j)
{
  Instance inst{detail::field<std::size_t>(j, "m", "instance"),
                detail::opt_field<double>(j, "delta_y", "instance").value_or(1.0),
                cost_from_json(detail::field<json>(j, "cost", "instance")),
                {},
                detail::opt_field<double>(j, "v_min", "instance"),
                detail::opt_field<double>(j, "v_max", "instance")};
  for (auto const& b : detail::field<json>(j, "buyers", "instance")) {
    Buyer buyer{detail::field<std::string>(b, "id", "buyer"), {}};
    for (auto const& bv : detail::field<json>(b, "bundles", "buyer"))
      buyer.bundles.push_back({normalized(detail::field<Bundle>(bv, "items", "bundle")),
                               detail::field<double>(bv, "value", "bundle")});
    inst.buyers.push_back(std::move(buyer));
  }
  validate(inst);
  return inst;
}

inline json trace_to_json(AuctionTrace const& tr, Instance const& inst)
{
  json records = json::array();
  for (std::size_t i = 0; i < tr.records.size(); ++i) {
    auto const& r = tr.records[i];
    auto const ys = tr.demands_after(i);
    auto const ps = tr.prices_after(i);
    records.push_back({{"buyer", r.buyer},
                       {"bundle", detail::index_to_json(r.bundle)},
                       {"value", r.value},
                       {"payment", r.payment},
                       {"utility", r.utility},
                       {"demands", std::vector<double>(ys.begin(), ys.end())},
                       {"prices", std::vector<double>(ps.begin(), ps.end())}});
  }
  return {{"instance", instance_to_json(inst)},
          {"rule", rule_to_json(tr.rule)},
          {"init_y", tr.init_y},
          {"initial_prices", tr.init_prices},
          {"records", std::move(records)},
          {"primal", tr.primal},
          {"dual", tr.dual}};
}

struct LoadedTrace
{
  Instance instance;
  AuctionTrace trace;
};

inline LoadedTrace trace_from_json(json const& j)
{
  auto inst = instance_from_json(detail::field<json>(j, "instance", "trace"));
  AuctionTrace tr(rule_from_json(detail::field<json>(j, "rule", "trace"), inst.cost));
  tr.m = inst.m;
  tr.delta_y = inst.delta_y;
  tr.init_y = detail::field<double>(j, "init_y", "trace");
  tr.init_prices = detail::field<std::vector<double>>(j, "initial_prices", "trace");
  for (auto const& r : detail::field<json>(j, "records", "trace")) {
    tr.records.push_back({detail::field<std::string>(r, "buyer", "record"),
                          detail::opt_field<std::size_t>(r, "bundle", "record"),
                          detail::field<double>(r, "value", "record"), detail::field<double>(r, "payment", "record"),
                          detail::field<double>(r, "utility", "record")});
    auto const ys = detail::field<std::vector<double>>(r, "demands", "record");
    auto const ps = detail::field<std::vector<double>>(r, "prices", "record");
    if (ys.size() != tr.m || ps.size() != tr.m)
      throw ParseError("trace: record state has the wrong length");
    tr.demands.insert(tr.demands.end(), ys.begin(), ys.end());
    tr.prices.insert(tr.prices.end(), ps.begin(), ps.end());
  }
  tr.primal = detail::field<std::vector<double>>(j, "primal", "trace");
  tr.dual = detail::field<std::vector<double>>(j, "dual", "trace");
  return {std::move(inst), std::move(tr)};
}

inline json opt_to_json(OptResult const& r)
{
  json alloc = json::array();
  for (auto const& a : r.allocation)
    alloc.push_back(detail::index_to_json(a));
  return {{"value", r.value}, {"method", r.method}, {"allocation", std::move(alloc)}};
}

inline json verdict_to_json(FeasibilityVerdict const& v)
{
  return {{"feasible", v.feasible},
          {"alpha", v.alpha},
          {"beta", v.beta},
          {"worst_slack", v.worst_slack},
          {"worst_point", v.worst_point}};
}

inline json read_json_file(std::string const& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (json::parse_error const& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(std::string const& path, std::string const& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out)
    throw IoError("write failed for '" + path + "'");
}

}  // namespace pdca
