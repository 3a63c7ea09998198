#include "utilmax/report.hpp"

#include "utilmax/errors.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace utilmax {

using ojson = nlohmann::ordered_json;

namespace {

ojson parse(const std::string& text, const char* what) {
  try {
    return ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    raise(ErrorCode::MalformedInput, std::string("invalid ") + what + " JSON: " + e.what());
  }
}

double number(const ojson& j, const char* key, const char* what) {
  if (!j.contains(key) || !j[key].is_number())
    raise(ErrorCode::MalformedInput, std::string(what) + ": missing numeric field '" + key + "'");
  return j[key].get<double>();
}

std::vector<double> numbers(const ojson& j, const char* key, const char* what) {
  if (!j.contains(key) || !j[key].is_array())
    raise(ErrorCode::MalformedInput, std::string(what) + ": missing array '" + key + "'");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) raise(ErrorCode::MalformedInput, std::string(what) + ": '" + key + "' must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

ojson vec(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ojson ae_json(const AeCheckReport& r) {
  return ojson{{"pass", r.pass},           {"max_violation", r.max_violation}, {"worst_x", r.worst_x},
               {"worst_lambda", r.worst_lambda}, {"elasticity", r.elasticity}, {"C", r.C},
               {"samples", r.samples},     {"skipped", r.skipped}};
}

ojson config_obj(const Config& c) {
  const auto& s = c.solve;
  ojson j;
  j["grid_points"] = s.grid_points;
  j["range_phi"] = s.range_phi;
  j["phi_max"] = s.phi_max;
  j["value_tol"] = s.value_tol;
  j["fo_tol"] = c.fo_tol;
  j["price_tol"] = c.price_tol;
  j["strategy_tol"] = c.strategy_tol;
  j["rank_tol"] = s.rank_tol;
  j["sphere_tol"] = c.sphere_tol;
  j["divergence_tol"] = s.divergence_tol;
  j["refine_rounds"] = s.refine_rounds;
  j["check_divergence"] = s.check_divergence;
  j["polish"] = s.polish;
  j["exact_only"] = s.exact_only;
  j["ae_policy"] = to_string(c.ae_policy);
  j["threads"] = resolve_threads(s.threads);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["restarts"] = c.restarts;
  j["cone"] = s.cone ? ojson(s.cone->rays.cols()) : ojson(nullptr);
  j["output_dir"] = c.output_dir;
  return j;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

}  // namespace

AePolicy parse_ae_policy(const std::string& s) {
  if (s == "strict") return AePolicy::Strict;
  if (s == "warn") return AePolicy::Warn;
  if (s == "off") return AePolicy::Off;
  raise(ErrorCode::InvalidArgument, "AE policy must be strict, warn or off");
}

const char* to_string(AePolicy p) {
  switch (p) {
    case AePolicy::Strict: return "strict";
    case AePolicy::Warn: return "warn";
    case AePolicy::Off: return "off";
  }
  return "warn";
}

void Config::validate() const {
  const double tols[] = {solve.value_tol, fo_tol, price_tol, strategy_tol, solve.rank_tol, sphere_tol,
                         solve.divergence_tol};
  for (double t : tols)
    if (!(t > 0.0)) raise(ErrorCode::InvalidArgument, "tolerances must be positive");
  if (solve.grid_points < 3) raise(ErrorCode::InvalidArgument, "grid size must be at least 3");
  if (!(solve.phi_max > 0.0)) raise(ErrorCode::InvalidArgument, "phi_max must be positive");
}

Utility utility_from_json_text(const std::string& text) {
  const ojson j = parse(text, "utility");
  if (!j.is_object() || !j.contains("variant") || !j["variant"].is_string())
    raise(ErrorCode::MalformedInput, "utility: missing string field 'variant'");
  const auto variant = j["variant"].get<std::string>();
  const ojson params = j.value("params", ojson::object());
  if (!params.is_object()) raise(ErrorCode::MalformedInput, "utility: 'params' must be an object");
  auto build = [&]() -> Utility {
    try {
      if (variant == "exponential") return Utility::exponential(params.value("a", 1.0));
      if (variant == "piecewise_linear")
        return Utility::piecewise_linear(numbers(params, "breakpoints", "utility"), numbers(params, "slopes", "utility"));
      if (variant == "example73") return Utility::example73(params.value("N", 1000));
      if (variant == "linear_below_power_above") return Utility::linear_below_power_above(params.value("gamma", 0.5));
      if (variant == "linear_above_exponential_below") return Utility::linear_above_exponential_below();
    } catch (const ojson::type_error& e) {
      raise(ErrorCode::MalformedInput, std::string("utility params: ") + e.what());
    } catch (const Error& e) {
      raise(ErrorCode::MalformedInput, e.what());
    }
    raise(ErrorCode::MalformedInput, "unknown utility variant '" + variant + "'");
  };
  Utility u = build();
  if (params.contains("shift")) u = u.shift(number(params, "shift", "utility"));
  if (j.contains("ae")) {
    const auto& a = j["ae"];
    if (!a.is_object()) raise(ErrorCode::MalformedInput, "utility: 'ae' must be an object");
    AeParams ae;
    if (a.contains("gamma") && !a["gamma"].is_null()) ae.gamma = number(a, "gamma", "utility ae");
    if (a.contains("alpha") && !a["alpha"].is_null()) ae.alpha = number(a, "alpha", "utility ae");
    if (a.contains("xtilde") && !a["xtilde"].is_null()) ae.xtilde = number(a, "xtilde", "utility ae");
    u = u.with_ae(ae);
  }
  return u;
}

std::string utility_to_json_text(const Utility& u) {
  ojson j;
  j["variant"] = u.variant_name();
  ojson p = ojson::object();
  switch (u.kind()) {
    case Utility::Kind::Exponential: p["a"] = u.param_a(); break;
    case Utility::Kind::PiecewiseLinear:
      p["breakpoints"] = u.pl_breakpoints();
      p["slopes"] = u.pl_slopes();
      break;
    case Utility::Kind::Example73: p["N"] = u.param_n(); break;
    case Utility::Kind::LinearBelowPowerAbove: p["gamma"] = u.param_gamma(); break;
    case Utility::Kind::LinearAboveExponentialBelow: break;
  }
  if (u.shift_offset() != 0.0) p["shift"] = u.shift_offset();
  j["params"] = p;
  ojson a;
  a["gamma"] = u.ae().gamma ? ojson(*u.ae().gamma) : ojson(nullptr);
  a["alpha"] = u.ae().alpha ? ojson(*u.ae().alpha) : ojson(nullptr);
  a["xtilde"] = u.ae().xtilde ? ojson(*u.ae().xtilde) : ojson(nullptr);
  j["ae"] = a;
  return j.dump();
}

Claim claim_from_json_text(const ScenarioTree& tree, const std::string& text) {
  const ojson j = parse(text, "claim");
  if (!j.is_object()) raise(ErrorCode::MalformedInput, "claim must be a JSON object");
  if (!j.contains("payoffs") || !j["payoffs"].is_array()) raise(ErrorCode::MalformedInput, "claim: missing 'payoffs' array");
  std::vector<std::pair<NodeId, double>> pay;
  double largest = 0.0;
  for (const auto& e : j["payoffs"]) {
    if (!e.is_object() || !e.contains("node") || !e["node"].is_number_integer())
      raise(ErrorCode::MalformedInput, "claim: payoff entries need an integer 'node'");
    const double v = number(e, "value", "claim payoff");
    pay.emplace_back(e["node"].get<NodeId>(), v);
    largest = std::max(largest, std::abs(v));
  }
  const double bound = j.contains("bound") ? number(j, "bound", "claim") : largest;
  try {
    return make_claim(tree, pay, bound);
  } catch (const Error& e) {
    raise(ErrorCode::MalformedInput, e.what());
  }
}

Cone cone_from_json_text(int d, const std::string& text) {
  const ojson j = parse(text, "cone");
  if (!j.is_object() || !j.contains("rays") || !j["rays"].is_array() || j["rays"].empty())
    raise(ErrorCode::MalformedInput, "cone: missing non-empty 'rays' array");
  Cone c{Eigen::MatrixXd(d, static_cast<Eigen::Index>(j["rays"].size()))};
  Eigen::Index k = 0;
  for (const auto& r : j["rays"]) {
    if (!r.is_array() || static_cast<int>(r.size()) != d)
      raise(ErrorCode::MalformedInput, "cone: every ray needs " + std::to_string(d) + " entries");
    for (int i = 0; i < d; ++i) {
      if (!r[static_cast<std::size_t>(i)].is_number()) raise(ErrorCode::MalformedInput, "cone: rays must hold numbers");
      c.rays(i, k) = r[static_cast<std::size_t>(i)].get<double>();
    }
    ++k;
  }
  return c;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::MalformedInput, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

AeStatus check_declared_ae(const Utility& u) {
  AeStatus s;
  const auto& ae = u.ae();
  std::ostringstream msg;
  if (ae.gamma) {
    s.checked = true;
    s.plus = check_ae_plus(u, *ae.gamma, ae.xtilde.value_or(1.0));
    if (!s.plus->pass) {
      s.pass = false;
      msg << "growth condition at +inf fails (gamma " << *ae.gamma << ", worst x " << s.plus->worst_x << ") ";
    }
  }
  if (ae.alpha) {
    s.checked = true;
    s.minus = check_ae_minus(u, *ae.alpha, ae.xtilde.value_or(-1.0));
    if (!s.minus->pass) {
      s.pass = false;
      msg << "growth condition at -inf fails (alpha " << *ae.alpha << ", worst x " << s.minus->worst_x << ")";
    }
  }
  if (!s.checked) {
    s.pass = false;
    msg << "utility declares no growth-condition parameters";
  }
  s.message = msg.str();
  while (!s.message.empty() && s.message.back() == ' ') s.message.pop_back();
  return s;
}

std::string config_json(const Config& c) { return dump(config_obj(c)); }

std::string node_label(const ScenarioTree& tree, NodeIndex n) {
  return n == tree.root() ? std::string("root") : std::to_string(tree.node(n).id);
}

std::string na_report_json(const ScenarioTree& tree, const TreeNaReport& rep) {
  ojson j;
  j["verdict"] = rep.arbitrage_free ? "no_arbitrage" : "arbitrage";
  if (rep.first_arbitrage) j["first_arbitrage_node"] = tree.node(*rep.first_arbitrage).id;
  ojson nodes = ojson::array();
  for (const auto& n : rep.nodes) {
    ojson e;
    e["node"] = tree.node(n.node).id;
    e["time"] = tree.node(n.node).time;
    e["dim"] = n.dim;
    e["arbitrage"] = n.arbitrage;
    if (n.arbitrage) {
      e["witness"] = vec(n.witness);
      ojson gains = ojson::array();
      for (NodeIndex c : tree.children(n.node)) gains.push_back(n.witness.dot(tree.increment(c)));
      e["witness_gains"] = gains;
    }
    if (n.certificate) {
      e["beta"] = n.certificate->beta;
      e["kappa"] = n.certificate->kappa;
      ojson dirs = ojson::array();
      for (const auto& v : n.certificate->witness_directions) dirs.push_back(vec(v));
      e["worst_directions"] = dirs;
    }
    nodes.push_back(e);
  }
  j["nodes"] = nodes;
  return dump(j);
}

std::string solve_report_json(const ScenarioTree& tree, const Utility& u, const SolveResult& r, const Config& c,
                              const AeStatus& ae) {
  ojson j;
  j["config"] = config_obj(c);
  j["utility"] = ojson::parse(utility_to_json_text(u));
  ojson a;
  a["checked"] = ae.checked;
  a["pass"] = ae.pass;
  if (ae.plus) a["plus"] = ae_json(*ae.plus);
  if (ae.minus) a["minus"] = ae_json(*ae.minus);
  if (!ae.message.empty()) a["message"] = ae.message;
  j["ae"] = a;
  j["capital"] = r.capital;
  j["phi_max"] = r.phi_max;
  j["root_value"] = r.root_value;
  j["root_value_grid"] = r.root_value_grid;
  j["polished"] = r.polished;
  j["boundary"] = r.boundary;
  j["grid"] = ojson{{"points", r.grid.size()},
                    {"lo", r.grid.empty() ? 0.0 : r.grid.front()},
                    {"hi", r.grid.empty() ? 0.0 : r.grid.back()}};
  ojson hist = ojson::array();
  for (const auto& h : r.history) hist.push_back(ojson{{"grid_points", h.grid_points}, {"root_value", h.root_value}});
  j["refinement"] = hist;
  j["divergence_values"] = r.divergence_values;
  ojson nodes = ojson::array();
  for (NodeIndex n = 0; n < tree.size(); ++n) {
    const auto& node = tree.node(n);
    ojson e;
    e["node"] = node.id;
    e["time"] = node.time;
    e["wealth"] = r.wealth[n];
    if (!node.is_leaf()) {
      e["strategy"] = vec(r.strategy[n]);
      e["support_dim"] = r.D[n].dim();
      e["attained_interior"] = r.attained_interior[n] != 0;
    }
    nodes.push_back(e);
  }
  j["nodes"] = nodes;
  return dump(j);
}

std::string measure_report_json(const ScenarioTree& tree, const MeasureReport& m, const Config& c) {
  ojson j;
  j["config"] = config_obj(c);
  j["expected_marginal"] = m.expected_marginal;
  j["density_bounds"] = ojson{{"min", m.density_min}, {"max", m.density_max}};
  j["max_residual"] = m.max_residual;
  j["within_tol"] = m.within_tol;
  if (m.subdifferential) {
    j["subdifferential"] = ojson{{"feasible", m.subdifferential_feasible},
                                 {"max_residual", m.selection_max_residual},
                                 {"density", m.selection_density}};
  }
  const auto leaves = tree.leaves();
  ojson lv = ojson::array();
  for (std::size_t k = 0; k < leaves.size(); ++k)
    lv.push_back(ojson{{"node", tree.node(leaves[k]).id}, {"density", m.density[k]}, {"q", m.leaf_Q[k]}});
  j["leaves"] = lv;
  ojson res = ojson::array();
  for (NodeIndex n : tree.interior_nodes())
    res.push_back(ojson{{"node", tree.node(n).id}, {"drift", vec(m.residuals[n])}});
  j["residuals"] = res;
  return dump(j);
}

std::string price_report_json(const PriceReport& p, const Config& c) {
  ojson j;
  j["price"] = p.price;
  j["iterations"] = p.iterations;
  j["residual"] = p.residual;
  j["bracket"] = ojson::array({p.lo, p.hi});
  j["base_value"] = p.base_value;
  j["config"] = config_obj(c);
  return dump(j);
}

std::string verify_report_json(const OptimalityReport& o, const UniquenessReport& q, const StructureReport& s,
                               const Config& c) {
  ojson j;
  j["config"] = config_obj(c);
  j["optimality"] = ojson{{"pass", o.pass},
                          {"root_value", o.root_value},
                          {"trials", o.trials},
                          {"max_random", o.max_random},
                          {"lattice_run", o.lattice_run},
                          {"max_lattice", o.lattice_run ? ojson(o.max_lattice) : ojson(nullptr)},
                          {"pl_error_bound", o.pl_error_bound}};
  j["uniqueness"] = ojson{{"pass", q.pass},
                          {"restarts", q.restarts},
                          {"strict", q.strict},
                          {"max_strategy_gap", q.max_strategy_gap},
                          {"max_value_gap", q.max_value_gap},
                          {"max_orthogonal", q.max_orthogonal}};
  j["structure"] = ojson{{"concave_nondecreasing", s.concave_nondecreasing},
                         {"chain_violation", s.chain_violation},
                         {"orthogonal_max", s.orthogonal_max},
                         {"scaling_checked", s.scaling_checked},
                         {"scaling_violation", s.scaling_violation},
                         {"scaling_samples", s.scaling_samples}};
  return dump(j);
}

void write_value_functions_csv(std::ostream& out, const ScenarioTree& tree, const SolveResult& r) {
  out << "node,x,value\n" << std::setprecision(17);
  for (NodeIndex n : tree.interior_nodes()) {
    if (!r.value_fns[n]) continue;
    const auto& f = *r.value_fns[n];
    for (std::size_t i = 0; i < f.size(); ++i)
      out << node_label(tree, n) << ',' << f.breakpoints()[i] << ',' << f.values()[i] << '\n';
  }
}

void write_strategy_csv(std::ostream& out, const ScenarioTree& tree, const SolveResult& r) {
  out << "node";
  for (int i = 0; i < tree.dim(); ++i) out << ", xi_" << (i + 1);
  out << '\n' << std::setprecision(12);
  for (NodeIndex n : tree.interior_nodes()) {
    out << node_label(tree, n);
    for (Eigen::Index i = 0; i < r.strategy[n].size(); ++i) out << ", " << r.strategy[n][i];
    out << '\n';
  }
}

ScenarioTree example73_tree() {
  std::vector<NodeSpec> s;
  s.push_back({0, std::nullopt, 1.0, Eigen::VectorXd::Constant(1, 0.0)});
  s.push_back({1, 0, 0.75, Eigen::VectorXd::Constant(1, 1.0)});
  s.push_back({2, 0, 0.25, Eigen::VectorXd::Constant(1, -1.0)});
  return ScenarioTree(1, 1, std::move(s));
}

Example73Demo run_example73(int phi_max, int N, const SolveConfig& cfg) {
  if (phi_max < 1) raise(ErrorCode::InvalidArgument, "phi_max must be at least 1");
  if (N < 2) raise(ErrorCode::InvalidArgument, "example73 needs N >= 2");
  const auto t0 = std::chrono::steady_clock::now();
  const auto tree = example73_tree();
  const auto u = Utility::example73(N);
  Example73Demo d;
  double s = 0.0;
  double prev = -std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> strat(tree.size());
  for (int n = 1; n <= phi_max; ++n) {
    s += 1.0 / (static_cast<double>(n) * n);
    strat[0] = Eigen::VectorXd::Constant(1, static_cast<double>(n));
    Example73Row row{n, expected_utility(tree, u, 0.0, strat), s, 0.0};
    row.error = std::abs(row.expected_utility - row.partial_sum);
    d.max_error = std::max(d.max_error, row.error);
    if (!(row.expected_utility > prev)) d.increasing = false;
    prev = row.expected_utility;
    d.rows.push_back(row);
  }
  SolveConfig c = cfg;
  c.phi_max = phi_max;
  const auto r = solve(tree, u, 0.0, c);
  d.root_value = r.root_value;
  d.gap = std::numbers::pi * std::numbers::pi / 6.0 - r.root_value;
  d.boundary = r.boundary;
  d.divergence_values = r.divergence_values;
  d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

std::string example73_json(const Example73Demo& d, const Config& c) {
  ojson j;
  j["config"] = config_obj(c);
  ojson rows = ojson::array();
  for (const auto& r : d.rows)
    rows.push_back(ojson{{"n", r.n}, {"expected_utility", r.expected_utility}, {"partial_sum", r.partial_sum},
                         {"error", r.error}});
  j["rows"] = rows;
  j["max_error"] = d.max_error;
  j["increasing"] = d.increasing;
  j["root_value"] = d.root_value;
  j["gap_to_pi2_over_6"] = d.gap;
  j["boundary"] = d.boundary;
  j["attained_interior"] = !d.boundary;
  j["divergence_values"] = d.divergence_values;
  return dump(j);
}

}  // namespace utilmax
