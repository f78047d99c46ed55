// Command-line front end: run, opt, gen, audit, verify-diffeq,
// estimate-alpha, sweep. Exit 0 when every check passes, 1 when a check
// fails, 2 on usage or input errors.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdca/pdca.hpp"
#include "pdca/json_io.hpp"
#include "pdca/sweep.hpp"

namespace {

using pdca::json;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kError = 2;

// Accepts a path to a JSON file or an inline JSON text.
json json_arg(std::string const& arg)
{
  if (std::filesystem::exists(arg))
    return pdca::read_json_file(arg);
  try {
    return json::parse(arg);
  } catch (json::parse_error const&) {
    throw pdca::IoError("'" + arg + "' is neither a readable file nor JSON");
  }
}

void emit(json const& j, std::string const& out)
{
  if (out.empty() || out == "-")
    std::cout << j.dump(2) << '\n';
  else
    pdca::write_text_file(out, j.dump(2) + "\n");
}

struct RuleArgs
{
  std::string kind;
  std::optional<double> gamma, lambda, p0, r;

  void add(CLI::App* app)
  {
    app->add_option("--rule", kind, "power | power-integral | unified-fractional | unified-integral | "
                                    "concave-integral | exponential-supply")
        ->required();
    app->add_option("--gamma", gamma, "power rule exponent (defaults to the cost's)");
    app->add_option("--lambda", lambda, "unified rule scale");
    app->add_option("--p0", p0, "exponential-supply starting price");
    app->add_option("--r", r, "exponential-supply growth factor");
  }

  json to_json() const
  {
    json j{{"kind", kind}};
    if (gamma)
      j["gamma"] = *gamma;
    if (lambda)
      j["lambda"] = *lambda;
    if (p0)
      j["p0"] = *p0;
    if (r)
      j["r"] = *r;
    return j;
  }
};

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Posted-price online combinatorial auctions with production costs"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run the posted-price mechanism on an instance");
  std::string run_instance, run_out;
  RuleArgs run_rule;
  std::optional<double> run_init, run_eps;
  run->add_option("--instance", run_instance, "instance JSON")->required();
  run_rule.add(run);
  run->add_option("--init-y", run_init, "starting demand per item");
  run->add_option("--epsilon", run_eps, "start integral rules at 1/epsilon - 1");
  run->add_option("--out", run_out, "trace JSON output")->required();

  // opt
  auto* opt = app.add_subcommand("opt", "offline optimum by exhaustive search");
  std::string opt_instance, opt_out;
  double opt_states = 4e6;
  opt->add_option("--instance", opt_instance, "instance JSON")->required();
  opt->add_option("--max-states", opt_states, "memo state cap");
  opt->add_option("--out", opt_out, "output file (stdout if omitted)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate an adversarial instance");
  std::string gen_family, gen_params, gen_out;
  gen->add_option("--family", gen_family, "staged-single | value-chain | bundle-stages | random")->required();
  gen->add_option("--params", gen_params, "params JSON or file; cost, seed and buyer_cap go here too")->required();
  gen->add_option("--out", gen_out, "instance JSON output")->required();

  // audit
  auto* audit = app.add_subcommand("audit", "replay a trace and check the primal-dual ledger");
  std::string audit_trace;
  double audit_alpha = 0.0;
  std::optional<double> audit_eps;
  double audit_states = 4e6;
  audit->add_option("--trace", audit_trace, "trace JSON")->required();
  audit->add_option("--alpha", audit_alpha, "ratio for the local check")->required();
  audit->add_option("--epsilon", audit_eps, "epsilon for the constant (default from init_y)");
  audit->add_option("--max-states", audit_states, "state cap for the weak-duality optimum");

  // verify-diffeq
  auto* verify = app.add_subcommand("verify-diffeq", "check a rule's feasibility conditions on a grid");
  std::string verify_cost;
  RuleArgs verify_rule;
  double verify_alpha = 0.0, verify_beta = 0.0, verify_ymax = 100.0, verify_step = 0.01;
  std::optional<std::int64_t> verify_from;
  verify->add_option("--cost", verify_cost, "cost JSON or file")->required();
  verify_rule.add(verify);
  verify->add_option("--alpha", verify_alpha, "ratio")->required();
  verify->add_option("--beta", verify_beta, "additive constant (continuous condition)")->required();
  verify->add_option("--ymax", verify_ymax, "upper end of the checked range");
  verify->add_option("--step", verify_step, "grid step for continuous rules");
  verify->add_option("--y-from", verify_from, "first integer demand for integral rules (default 0)");

  // estimate-alpha
  auto* est = app.add_subcommand("estimate-alpha", "smallest ratio a continuous price curve admits");
  std::string est_cost;
  double est_ymax = 1e4, est_tol = 1e-4;
  std::optional<double> est_p0;
  est->add_option("--cost", est_cost, "cost JSON or file")->required();
  est->add_option("--ymax", est_ymax, "demand horizon");
  est->add_option("--tol", est_tol, "bisection tolerance");
  est->add_option("--p0", est_p0, "launch price (default f'(1e-12 * ymax))");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "ratio table over an instance family");
  std::string sweep_cfg, sweep_out, sweep_fmt = "csv";
  sweep->add_option("--config", sweep_cfg, "sweep config JSON")->required();
  sweep->add_option("--out", sweep_out, "report file")->required();
  sweep->add_option("--format", sweep_fmt, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const code = app.exit(e);
    return code == 0 ? kPass : kError;
  }

  try {
    if (*run) {
      auto const inst = pdca::instance_from_json(pdca::read_json_file(run_instance));
      auto const rule = pdca::detail::rule_for(run_rule.to_json(), inst);
      double init = run_init.value_or(0.0);
      if (run_eps) {
        if (run_init)
          throw pdca::DomainError("run: give --init-y or --epsilon, not both");
        init = rule.integral() ? pdca::integral_initial_demand(*run_eps) : 0.0;
      }
      auto const tr = pdca::run_mechanism(inst, rule, init);
      pdca::write_text_file(run_out, pdca::trace_to_json(tr, inst).dump(2) + "\n");
      std::cout << json{{"welfare", pdca::welfare(tr, inst)},
                        {"primal", tr.primal.back()},
                        {"dual", tr.dual.back()},
                        {"buyers", tr.size()}}
                       .dump()
                << '\n';
      return kPass;
    }
    if (*opt) {
      auto const inst = pdca::instance_from_json(pdca::read_json_file(opt_instance));
      auto const r = pdca::brute_force_opt(inst, pdca::OptLimits{static_cast<std::size_t>(opt_states)});
      emit(pdca::opt_to_json(r), opt_out);
      return kPass;
    }
    if (*gen) {
      auto const params = json_arg(gen_params);
      if (!params.is_object())
        throw pdca::ParseError("gen: params must be a JSON object");
      if (gen_family == "random" || gen_family == "bundle-stages")
        if (!params.contains("seed"))
          throw pdca::ParseError("gen: family '" + gen_family + "' requires a seed");
      auto const pt = pdca::detail::make_point(gen_family, params, params);
      pdca::write_text_file(gen_out, pdca::instance_to_json(pt.instance).dump(2) + "\n");
      json summary{{"buyers", pt.instance.buyers.size()}, {"m", pt.instance.m}};
      if (pt.closed_form)
        summary["opt_closed_form"] = *pt.closed_form;
      std::cout << summary.dump() << '\n';
      return kPass;
    }
    if (*audit) {
      auto const loaded = pdca::trace_from_json(pdca::read_json_file(audit_trace));
      auto const& inst = loaded.instance;
      auto const& tr = loaded.trace;
      auto const series = pdca::ledger_from_trace(tr, inst);
      auto const local = pdca::check_local(series, audit_alpha);
      double const eps = audit_eps.value_or(tr.rule.integral() ? pdca::epsilon_from_init(tr.init_y) : 1.0);

      json out{{"local_ok", local.ok},
               {"beta_actual", pdca::beta_actual(series, audit_alpha)},
               {"beta_theorem", pdca::beta_theorem(tr, eps)},
               {"residual", local.residual},
               {"first_violation", local.first_violation ? json(*local.first_violation) : json(nullptr)}};
      bool ok = local.ok;
      auto const dv = pdca::dual_violation(tr, inst);
      out["dual_feasible"] = !dv;
      ok = ok && !dv;
      try {
        auto const r = pdca::brute_force_opt(inst, pdca::OptLimits{static_cast<std::size_t>(audit_states)});
        bool const wd = pdca::check_weak_duality(pdca::dual_state(tr), r.value);
        out["weak_duality_ok"] = wd;
        out["opt"] = r.value;
        ok = ok && wd;
      } catch (pdca::TooLarge const&) {
        out["weak_duality_ok"] = nullptr;
      }
      std::cout << out.dump(2) << '\n';
      return ok ? kPass : kFail;
    }
    if (*verify) {
      auto const cost = pdca::cost_from_json(json_arg(verify_cost));
      auto const rule = pdca::rule_from_json(verify_rule.to_json(), cost);
      pdca::FeasibilityVerdict v;
      if (rule.integral()) {
        auto const to = static_cast<std::int64_t>(std::floor(verify_ymax));
        v = pdca::check_eq2_range(rule, verify_alpha, verify_from.value_or(0), to);
        v.beta = verify_beta;
      } else {
        if (!(verify_step > 0.0) || !(verify_ymax > 0.0))
          throw pdca::DomainError("verify-diffeq: --step and --ymax must be positive");
        std::vector<double> grid;
        auto const n = static_cast<std::size_t>(std::llround(verify_ymax / verify_step));
        for (std::size_t i = 0; i <= n; ++i)
          grid.push_back(std::min(verify_ymax, static_cast<double>(i) * verify_step));
        v = pdca::check_eq1(rule, verify_alpha, verify_beta, grid);
      }
      std::cout << pdca::verdict_to_json(v).dump(2) << '\n';
      return v.feasible ? kPass : kFail;
    }
    if (*est) {
      auto const cost = pdca::cost_from_json(json_arg(est_cost));
      auto const e = pdca::estimate_alpha_bracket(cost, est_ymax, est_p0, est_tol);
      std::cout << json{{"alpha", e.alpha}, {"lo", e.lo}, {"hi", e.hi}, {"p0", e.p0}, {"iterations", e.iterations}}
                       .dump(2)
                << '\n';
      return kPass;
    }
    if (*sweep) {
      auto const rows = pdca::experiment_sweep(pdca::read_json_file(sweep_cfg));
      pdca::report_emit(rows, sweep_fmt, sweep_out);
      bool ok = true;
      for (auto const& r : rows) {
        ok = ok && r.guarantee_ok;
        if (!r.error.empty())
          std::cerr << "point " << r.params << ": " << r.error << '\n';
      }
      std::cout << json{{"points", rows.size()}, {"all_ok", ok}}.dump() << '\n';
      return ok ? kPass : kFail;
    }
  } catch (pdca::Error const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  } catch (json::exception const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
