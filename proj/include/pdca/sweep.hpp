#pragma once

// Experiment sweeps over instance families and ratio reports.

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdca/adversary.hpp"
#include "pdca/auction.hpp"
#include "pdca/json_io.hpp"
#include "pdca/ledger.hpp"
#include "pdca/offline_opt.hpp"
#include "pdca/pricing_rule.hpp"

namespace pdca {

struct RunEvaluation
{
  double welfare{0.0};
  double opt{0.0};
  double alpha{1.0};  // ratio the guarantee is stated with
  double beta{0.0};   // additive constant used in the check, all items
  double ratio{0.0};  // opt / max(welfare, 1e-12)
  bool guarantee_ok{false};
  double beta_actual{0.0};
  LocalCheck local;
};

inline constexpr double kWelfareFloor = 1e-12;

/// Runs `rule` from its guaranteed starting demand and checks
/// W >= OPT/alpha - beta. beta is the ledger's D^0/alpha - P^0; fractional
/// rules add the per-step discretization residual, and the supply rule is
/// checked in its beta-free form W >= OPT/(2 alpha).
inline RunEvaluation evaluate_run(Instance const& inst, PricingRule const& rule, double epsilon, double opt)
{
  auto const g = guaranteed_alpha(rule, epsilon);
  auto const tr = run_mechanism(inst, rule, g.init_y);
  auto const series = ledger_from_trace(tr, inst);

  RunEvaluation e;
  e.local = check_local(series, g.alpha);
  e.beta_actual = beta_actual(series, g.alpha);
  e.welfare = welfare(tr, inst);
  e.opt = opt;
  if (rule.is<ExponentialSupply>()) {
    e.alpha = g.ratio;
    e.beta = 0.0;
  } else {
    e.alpha = g.alpha;
    e.beta = e.beta_actual + (rule.integral() ? 0.0 : e.local.residual);
  }
  e.ratio = opt / std::max(e.welfare, kWelfareFloor);
  double const bound = opt / e.alpha - e.beta;
  e.guarantee_ok = e.welfare >= bound - 1e-9 * std::max({1.0, std::abs(bound), std::abs(e.welfare)});
  return e;
}

struct RatioReport
{
  std::string family;
  std::string params;
  std::string rule;
  double alpha{std::numeric_limits<double>::quiet_NaN()};
  double beta{std::numeric_limits<double>::quiet_NaN()};
  double welfare{std::numeric_limits<double>::quiet_NaN()};
  double opt{std::numeric_limits<double>::quiet_NaN()};
  double ratio{std::numeric_limits<double>::quiet_NaN()};
  bool guarantee_ok{false};
  std::string opt_method;
  std::string error;  // set when the point failed
};

namespace detail {

inline std::string format_real(double x, int digits)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

// key=value pairs joined by ';' in key order; no commas, so CSV-safe.
inline std::string params_string(json const& p)
{
  std::string out;
  for (auto it = p.begin(); it != p.end(); ++it) {
    if (!out.empty())
      out += ';';
    out += it.key() + '=';
    auto const& v = it.value();
    if (v.is_number_float())
      out += format_real(v.get<double>(), 9);
    else if (v.is_string())
      out += v.get<std::string>();
    else
      out += v.dump();
  }
  return out;
}

template <class T>
T param(json const& p, char const* key, T fallback)
{
  if (!p.contains(key))
    return fallback;
  return field<T>(p, key, "sweep params");
}

template <class T>
T need(json const& p, char const* key)
{
  return field<T>(p, key, "sweep params");
}

struct Point
{
  Instance instance;
  std::optional<double> closed_form;
  std::string closed_method;
};

inline Point make_point(std::string const& family, json const& cfg, json const& p)
{
  auto const cap = param<std::size_t>(cfg, "buyer_cap", kDefaultBuyerCap);
  if (family == "staged-single") {
    auto const cost = cost_from_json(field<json>(cfg, "cost", "sweep"));
    double const v_star = need<double>(p, "v_star");
    auto inst = gen_staged_single_item(cost, v_star, need<double>(p, "delta_v"), need<double>(p, "delta_y"), cap);
    return {std::move(inst), opt_single_item_staged(cost, v_star), "closed_form_single_item"};
  }
  if (family == "value-chain") {
    return {gen_limited_supply_value_chain(need<std::int64_t>(p, "k"), need<double>(p, "v_min"),
                                           need<double>(p, "v_max"), need<double>(p, "delta_v"), cap),
            std::nullopt,
            {}};
  }
  if (family == "bundle-stages") {
    BundleStagesParams b;
    b.m = need<std::int64_t>(p, "m");
    b.k = need<std::int64_t>(p, "k");
    b.i = need<std::int64_t>(p, "i");
    b.v_min = param<double>(p, "v_min", 1.0);
    b.v_max = param<double>(p, "v_max", 1.0);
    b.seed = field<std::uint64_t>(cfg, "seed", "sweep");
    b.buyer_cap = cap;
    auto gen = gen_limited_supply_bundle_stages(b);
    auto const ri = static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(gen.r), static_cast<double>(b.i))));
    if (b.m % ri != 0)
      return {std::move(gen.instance), std::nullopt, {}};
    double const opt = opt_limited_supply_staged(b.m, b.k, static_cast<double>(gen.r), b.i);
    return {std::move(gen.instance), opt, "closed_form_limited_supply"};
  }
  if (family == "random") {
    auto const cost = cost_from_json(field<json>(cfg, "cost", "sweep"));
    RandomInstanceParams r;
    r.m = param<std::size_t>(p, "m", r.m);
    r.n = param<std::size_t>(p, "n", r.n);
    r.max_bundles = param<std::size_t>(p, "max_bundles", r.max_bundles);
    r.max_bundle_size = param<std::size_t>(p, "max_bundle_size", r.max_bundle_size);
    r.v_lo = param<double>(p, "v_lo", r.v_lo);
    r.v_hi = param<double>(p, "v_hi", r.v_hi);
    r.per_item = param<bool>(p, "per_item", r.per_item);
    r.delta_y = param<double>(p, "delta_y", r.delta_y);
    if (p.contains("v_min"))
      r.v_min = need<double>(p, "v_min");
    if (p.contains("v_max"))
      r.v_max = need<double>(p, "v_max");
    auto const seed = field<std::uint64_t>(cfg, "seed", "sweep") + param<std::uint64_t>(p, "seed_offset", 0);
    return {gen_random_small(cost, r, seed), std::nullopt, {}};
  }
  throw ParseError("sweep: unknown family '" + family + "'");
}

// Supply rules given without p0 are derived from the instance.
inline PricingRule rule_for(json rule, Instance const& inst)
{
  if (field<std::string>(rule, "kind", "rule") == "exponential-supply" && !rule.contains("p0")) {
    if (!rule.contains("m"))
      rule["m"] = inst.m;
    if (!rule.contains("v_min") && inst.v_min)
      rule["v_min"] = *inst.v_min;
    if (!rule.contains("v_max") && inst.v_max)
      rule["v_max"] = *inst.v_max;
  }
  return rule_from_json(rule, inst.cost);
}

}  // namespace detail

/// One report per sweep point, in config order. Errors at a point are
/// recorded in that row and do not stop the sweep.
inline std::vector<RatioReport> experiment_sweep(json const& cfg)
{
  auto const family = detail::field<std::string>(cfg, "family", "sweep");
  auto const rule_cfg = detail::field<json>(cfg, "rule", "sweep");
  double const epsilon = detail::param<double>(cfg, "epsilon", 1.0);
  auto const opt_mode = detail::param<std::string>(cfg, "opt", "auto");
  if (opt_mode != "auto" && opt_mode != "brute_force" && opt_mode != "closed_form")
    throw ParseError("sweep: opt must be auto, brute_force or closed_form");
  if ((family == "bundle-stages" || family == "random") && !cfg.contains("seed"))
    throw ParseError("sweep: family '" + family + "' requires a seed");
  json const base = detail::param<json>(cfg, "params", json::object());

  std::vector<json> points;
  if (cfg.contains("sweep")) {
    auto const& sw = cfg.at("sweep");
    auto const key = detail::field<std::string>(sw, "param", "sweep");
    for (auto const& v : detail::field<json>(sw, "values", "sweep")) {
      json p = base;
      p[key] = v;
      points.push_back(std::move(p));
    }
  } else {
    points.push_back(base);
  }

  std::vector<RatioReport> out;
  for (auto const& p : points) {
    RatioReport row;
    row.family = family;
    row.params = detail::params_string(p);
    row.rule = detail::field<std::string>(rule_cfg, "kind", "rule");
    try {
      auto pt = detail::make_point(family, cfg, p);
      auto const rule = detail::rule_for(rule_cfg, pt.instance);
      double opt = 0.0;
      bool const closed = pt.closed_form && opt_mode != "brute_force";
      if (opt_mode == "closed_form" && !pt.closed_form)
        throw UnsupportedRule("sweep: family '" + family + "' has no closed-form optimum");
      if (closed) {
        opt = *pt.closed_form;
        row.opt_method = pt.closed_method;
      } else {
        opt = brute_force_opt(pt.instance).value;
        row.opt_method = "brute_force";
      }
      auto const e = evaluate_run(pt.instance, rule, epsilon, opt);
      row.alpha = e.alpha;
      row.beta = e.beta;
      row.welfare = e.welfare;
      row.opt = e.opt;
      row.ratio = e.ratio;
      row.guarantee_ok = e.guarantee_ok;
      if (e.welfare <= kWelfareFloor) {
        row.guarantee_ok = row.guarantee_ok && opt <= kWelfareFloor;
        if (!row.guarantee_ok)
          row.error = "zero welfare";
      }
    } catch (Error const& err) {
      row.error = err.what();
      row.guarantee_ok = false;
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline constexpr char const* kCsvHeader = "family,params,rule,alpha,beta,welfare,opt,ratio,guarantee_ok";

inline std::string reports_to_csv(std::vector<RatioReport> const& rows)
{
  std::string s = std::string(kCsvHeader) + "\n";
  for (auto const& r : rows) {
    s += r.family + ',' + r.params + ',' + r.rule + ',' + detail::format_real(r.alpha, 9) + ',' +
         detail::format_real(r.beta, 9) + ',' + detail::format_real(r.welfare, 9) + ',' +
         detail::format_real(r.opt, 9) + ',' + detail::format_real(r.ratio, 9) + ',' +
         (r.guarantee_ok ? "true" : "false") + '\n';
  }
  return s;
}

namespace detail {

inline std::string json_real(double x)
{
  return std::isfinite(x) ? format_real(x, 17) : "null";
}

inline std::string json_string(std::string const& s)
{
  return json(s).dump();
}

}  // namespace detail

/// JSON array of rows; reals printed with 17 significant digits.
inline std::string reports_to_json(std::vector<RatioReport> const& rows)
{
  std::string s = "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto const& r = rows[i];
    s += i ? ",\n  {" : "\n  {";
    s += "\"family\": " + detail::json_string(r.family);
    s += ", \"params\": " + detail::json_string(r.params);
    s += ", \"rule\": " + detail::json_string(r.rule);
    s += ", \"alpha\": " + detail::json_real(r.alpha);
    s += ", \"beta\": " + detail::json_real(r.beta);
    s += ", \"welfare\": " + detail::json_real(r.welfare);
    s += ", \"opt\": " + detail::json_real(r.opt);
    s += ", \"ratio\": " + detail::json_real(r.ratio);
    s += std::string(", \"guarantee_ok\": ") + (r.guarantee_ok ? "true" : "false");
    s += ", \"opt_method\": " + detail::json_string(r.opt_method);
    if (!r.error.empty())
      s += ", \"error\": " + detail::json_string(r.error);
    s += "}";
  }
  s += rows.empty() ? "]\n" : "\n]\n";
  return s;
}

inline std::vector<RatioReport> reports_from_json(json const& j)
{
  std::vector<RatioReport> rows;
  auto real = [](json const& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  for (auto const& r : j) {
    RatioReport row;
    row.family = r.at("family").get<std::string>();
    row.params = r.at("params").get<std::string>();
    row.rule = r.at("rule").get<std::string>();
    row.alpha = real(r.at("alpha"));
    row.beta = real(r.at("beta"));
    row.welfare = real(r.at("welfare"));
    row.opt = real(r.at("opt"));
    row.ratio = real(r.at("ratio"));
    row.guarantee_ok = r.at("guarantee_ok").get<bool>();
    row.opt_method = r.value("opt_method", "");
    row.error = r.value("error", "");
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Writes rows as "csv" or "json" to `path`.
inline void report_emit(std::vector<RatioReport> const& rows, std::string const& format, std::string const& path)
{
  if (format == "csv")
    write_text_file(path, reports_to_csv(rows));
  else if (format == "json")
    write_text_file(path, reports_to_json(rows));
  else
    throw DomainError("report_emit: format must be csv or json");
}

}  // namespace pdca
