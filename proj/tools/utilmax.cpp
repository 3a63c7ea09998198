// utilmax command-line front end.

#include "utilmax/errors.hpp"
#include "utilmax/measure.hpp"
#include "utilmax/report.hpp"
#include "utilmax/verification.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

using namespace utilmax;

namespace {

enum Exit { kOk = 0, kInput = 1, kArbitrage = 2, kNonAttainment = 3 };

struct Common {
  std::string tree;
  std::string utility;
  std::string cone;
  std::string claim;
  double capital = 0.0;
  std::string ae_policy = "warn";
  int grid = 513;
  double phimax = 1e3;
  int threads = 0;
  bool exact = false;
  Config config;
};

void add_model(CLI::App* cmd, Common& c, bool need_utility) {
  cmd->add_option("tree", c.tree, "scenario tree JSON")->required();
  auto* u = cmd->add_option("--utility", c.utility, "utility JSON");
  auto* k = cmd->add_option("--capital", c.capital, "initial capital");
  if (need_utility) {
    u->required();
    k->required();
  }
  cmd->add_option("--cone", c.cone, "cone constraint JSON {\"rays\": [[...]]}");
  cmd->add_option("--phimax", c.phimax, "strategy bound")->check(CLI::PositiveNumber);
  cmd->add_option("--grid", c.grid, "wealth grid points")->check(CLI::Range(3, 1 << 20));
  cmd->add_option("--require-ae", c.ae_policy, "growth-condition policy")->check(CLI::IsMember({"strict", "warn", "off"}));
  cmd->add_option("--threads", c.threads, "worker threads (UTILMAX_THREADS overrides)");
  cmd->add_flag("--exact", c.exact, "solve the whole tree directly, without the wealth grid");
  cmd->add_option("--fo-tol", c.config.fo_tol, "first-order residual tolerance");
  cmd->add_option("--value-tol", c.config.solve.value_tol, "grid refinement tolerance");
  cmd->add_option("--seed", c.config.seed, "seed for randomized checks");
}

struct Loaded {
  ScenarioTree tree;
  std::optional<Utility> u;
  std::optional<Claim> claim;
};

Loaded load(Common& c) {
  Loaded l{load_tree(std::filesystem::path(c.tree)), std::nullopt, std::nullopt};
  auto& s = c.config.solve;
  s.grid_points = static_cast<std::size_t>(c.grid);
  s.phi_max = c.phimax;
  s.threads = c.threads;
  s.exact_only = c.exact;
  c.config.ae_policy = parse_ae_policy(c.ae_policy);
  if (!c.cone.empty()) s.cone = cone_from_json_text(l.tree.dim(), read_text_file(c.cone));
  if (!c.utility.empty()) l.u = utility_from_json_text(read_text_file(c.utility));
  if (!c.claim.empty()) l.claim = claim_from_json_text(l.tree, read_text_file(c.claim));
  c.config.validate();
  return l;
}

// Returns false when the strict policy refuses the utility.
bool apply_ae(const Common& c, const Utility& u, AeStatus& ae) {
  if (c.config.ae_policy == AePolicy::Off) return true;
  ae = check_declared_ae(u);
  if (ae.pass) return true;
  std::cerr << "utilmax: " << ae.message << "\n";
  return c.config.ae_policy != AePolicy::Strict;
}

int cmd_validate(Common& c) {
  auto l = load(c);
  CertificateOptions co;
  co.sphere_tol = c.config.sphere_tol;
  co.seed = c.config.seed;
  const auto* cone = c.config.solve.cone ? &*c.config.solve.cone : nullptr;
  const auto rep = validate_tree(l.tree, cone, co, c.config.solve.rank_tol);
  std::cout << na_report_json(l.tree, rep);
  return rep.arbitrage_free ? kOk : kArbitrage;
}

int cmd_solve(Common& c, const std::string& out_dir) {
  auto l = load(c);
  c.config.output_dir = out_dir;
  AeStatus ae;
  if (!apply_ae(c, *l.u, ae)) return kNonAttainment;
  const auto r = solve(l.tree, *l.u, c.capital, c.config.solve, l.claim ? &*l.claim : nullptr);
  std::cout << solve_report_json(l.tree, *l.u, r, c.config, ae);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream vf(std::filesystem::path(out_dir) / "value_functions.csv");
    write_value_functions_csv(vf, l.tree, r);
    std::ofstream sf(std::filesystem::path(out_dir) / "strategy.csv");
    write_strategy_csv(sf, l.tree, r);
    if (!vf || !sf) throw Error(ErrorCode::MalformedInput, "cannot write CSV output to " + out_dir);
  }
  if (r.boundary && c.config.ae_policy == AePolicy::Strict) {
    std::cerr << "utilmax: optimum touches the strategy bound; not attained\n";
    return kNonAttainment;
  }
  return kOk;
}

int cmd_measure(Common& c, bool force) {
  auto l = load(c);
  AeStatus ae;
  if (!apply_ae(c, *l.u, ae)) return kNonAttainment;
  const auto r = solve(l.tree, *l.u, c.capital, c.config.solve, l.claim ? &*l.claim : nullptr);
  MeasureOptions mo;
  mo.fo_tol = c.config.fo_tol;
  mo.force = force;
  const auto m = martingale_measure(r, l.tree, *l.u, mo);
  std::cout << measure_report_json(l.tree, m, c.config);
  return kOk;
}

int cmd_price(Common& c) {
  auto l = load(c);
  AeStatus ae;
  if (!apply_ae(c, *l.u, ae)) return kNonAttainment;
  if (!l.claim) throw Error(ErrorCode::MalformedInput, "price needs --claim");
  const auto p = price_claim(l.tree, *l.u, c.capital, *l.claim, c.config.solve, c.config.price_tol);
  std::cout << price_report_json(p, c.config);
  return kOk;
}

int cmd_verify(Common& c) {
  auto l = load(c);
  AeStatus ae;
  if (!apply_ae(c, *l.u, ae)) return kNonAttainment;
  const Claim* claim = l.claim ? &*l.claim : nullptr;
  const auto r = solve(l.tree, *l.u, c.capital, c.config.solve, claim);
  OptimalityOptions oo;
  oo.trials = c.config.trials;
  oo.seed = c.config.seed;
  const auto o = verify_optimality(r, l.tree, *l.u, c.capital, oo, claim);
  const auto q = verify_uniqueness(r, l.tree, *l.u, c.config.solve, c.config.restarts, c.config.strategy_tol, claim);
  std::optional<ScalingParams> sp;
  if (ae.plus && ae.pass) sp = ScalingParams{*l.u->ae().gamma, ae.plus->C};
  const auto s = check_structure(r, l.tree, *l.u, sp);
  std::cout << verify_report_json(o, q, s, c.config);
  return kOk;
}

int cmd_demo(const std::string& which, int phimax, int N, Config& config) {
  if (which != "example73") throw Error(ErrorCode::MalformedInput, "unknown demo '" + which + "'");
  config.solve.phi_max = phimax;
  const auto d = run_example73(phimax, N, config.solve);
  std::cout << std::setprecision(15);
  std::cout << "n, EU(nS1), partial_sum, error\n";
  for (const auto& r : d.rows) std::cout << r.n << ", " << r.expected_utility << ", " << r.partial_sum << ", " << r.error << '\n';
  std::cout << "max_error " << d.max_error << (d.max_error <= 1e-12 ? " (exact)" : " (MISMATCH)") << '\n';
  std::cout << "pi^2/6 - U_0(0) at phimax " << phimax << ": " << d.gap << '\n';
  std::cout << "boundary " << (d.boundary ? "yes: optimum not attained inside the bound" : "no") << '\n';
  std::cout << example73_json(d, config);
  return d.max_error <= 1e-12 && d.increasing ? kOk : kNonAttainment;
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ArbitrageDetected: return kArbitrage;
    case ErrorCode::ValueDiverged:
    case ErrorCode::BoundaryOptimum:
    case ErrorCode::GridNotConverged:
    case ErrorCode::UnboundedObjective: return kNonAttainment;
    default: return kInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Utility maximization on finite scenario trees"};
  app.require_subcommand(1);

  Common validate_opts, solve_opts, measure_opts, price_opts, verify_opts;
  std::string out_dir;
  bool force = false;

  auto* v = app.add_subcommand("validate", "certify no-arbitrage at every node");
  v->add_option("tree", validate_opts.tree, "scenario tree JSON")->required();
  v->add_option("--cone", validate_opts.cone, "cone constraint JSON");
  v->add_option("--sphere-tol", validate_opts.config.sphere_tol, "angular resolution for d >= 3");

  auto* s = app.add_subcommand("solve", "optimal strategy and value functions");
  add_model(s, solve_opts, true);
  s->add_option("--claim", solve_opts.claim, "claim JSON paid at the leaves");
  s->add_option("--out", out_dir, "directory for value_functions.csv and strategy.csv");

  auto* m = app.add_subcommand("measure", "martingale measure from the optimal strategy");
  add_model(m, measure_opts, true);
  m->add_option("--claim", measure_opts.claim, "claim JSON paid at the leaves");
  m->add_flag("--force", force, "build the measure even on a boundary optimum");

  auto* p = app.add_subcommand("price", "indifference price of a claim");
  add_model(p, price_opts, true);
  p->add_option("--claim", price_opts.claim, "claim JSON")->required();
  p->add_option("--price-tol", price_opts.config.price_tol, "bisection tolerance");

  auto* w = app.add_subcommand("verify", "brute-force, restart and structural checks");
  add_model(w, verify_opts, true);
  w->add_option("--claim", verify_opts.claim, "claim JSON paid at the leaves");
  w->add_option("--trials", verify_opts.config.trials, "random competitor strategies");
  w->add_option("--restarts", verify_opts.config.restarts, "restart solves");

  std::string demo_name;
  int demo_phimax = 200;
  int demo_n = 0;
  Config demo_config;
  auto* d = app.add_subcommand("demo", "built-in demonstrations");
  d->add_option("name", demo_name, "demo name (example73)")->required();
  d->add_option("--phimax", demo_phimax, "largest position")->check(CLI::PositiveNumber);
  d->add_option("--N", demo_n, "utility truncation (default 4 * phimax)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*v) return cmd_validate(validate_opts);
    if (*s) return cmd_solve(solve_opts, out_dir);
    if (*m) return cmd_measure(measure_opts, force);
    if (*p) return cmd_price(price_opts);
    if (*w) return cmd_verify(verify_opts);
    if (*d) return cmd_demo(demo_name, demo_phimax, demo_n > 0 ? demo_n : 4 * demo_phimax, demo_config);
  } catch (const Error& e) {
    std::cerr << "utilmax: " << e.what() << '\n';
    return exit_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "utilmax: " << e.what() << '\n';
    return kInput;
  }
  return kInput;
}
