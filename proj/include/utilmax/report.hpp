#pragma once

// Input parsing for utilities, claims and cones, and deterministic JSON / CSV
// emission of solver results. Every JSON report embeds the resolved Config.

#include "utilmax/dp_engine.hpp"
#include "utilmax/geometry.hpp"
#include "utilmax/measure.hpp"
#include "utilmax/verification.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace utilmax {

enum class AePolicy { Strict, Warn, Off };

AePolicy parse_ae_policy(const std::string& s);
const char* to_string(AePolicy p);

struct Config {
  SolveConfig solve;
  double fo_tol = 1e-6;
  double price_tol = 1e-6;
  double strategy_tol = 1e-6;
  double sphere_tol = 1e-4;
  AePolicy ae_policy = AePolicy::Warn;
  std::uint64_t seed = 42;
  std::size_t trials = 10000;
  std::size_t restarts = 3;
  std::string output_dir;

  /// Throws InvalidArgument unless all tolerances are positive and grid >= 3.
  void validate() const;
};

Utility utility_from_json_text(const std::string& text);
std::string utility_to_json_text(const Utility& u);
Claim claim_from_json_text(const ScenarioTree& tree, const std::string& text);
Cone cone_from_json_text(int d, const std::string& text);
std::string read_text_file(const std::string& path);

struct AeStatus {
  bool checked = false;
  bool pass = true;
  std::optional<AeCheckReport> plus;
  std::optional<AeCheckReport> minus;
  std::string message;
};

/// Runs the growth-condition checks declared in u.ae(); a utility that
/// declares none is reported as unchecked.
AeStatus check_declared_ae(const Utility& u);

std::string config_json(const Config& c);
std::string na_report_json(const ScenarioTree& tree, const TreeNaReport& rep);
std::string solve_report_json(const ScenarioTree& tree, const Utility& u, const SolveResult& r, const Config& c,
                              const AeStatus& ae = {});
std::string measure_report_json(const ScenarioTree& tree, const MeasureReport& m, const Config& c);
std::string price_report_json(const PriceReport& p, const Config& c);
std::string verify_report_json(const OptimalityReport& o, const UniquenessReport& q, const StructureReport& s,
                               const Config& c);

/// Node label used in tables: "root" for the root, the node id otherwise.
std::string node_label(const ScenarioTree& tree, NodeIndex n);

/// Long format: node, x, value for every interior node's U_t on its breakpoints.
void write_value_functions_csv(std::ostream& out, const ScenarioTree& tree, const SolveResult& r);
/// One row per interior node: label, xi_1, ..., xi_d.
void write_strategy_csv(std::ostream& out, const ScenarioTree& tree, const SolveResult& r);

struct Example73Row {
  int n = 0;
  double expected_utility = 0.0;
  double partial_sum = 0.0;
  double error = 0.0;
};

struct Example73Demo {
  std::vector<Example73Row> rows;
  double max_error = 0.0;
  bool increasing = true;
  double root_value = 0.0;
  double gap = 0.0;   // pi^2/6 - root_value
  bool boundary = false;
  std::vector<double> divergence_values;
  double seconds = 0.0;
};

/// EU(n S_1) for n = 1..phi_max on the non-attainment binomial tree, then a
/// bounded solve at phi_max.
Example73Demo run_example73(int phi_max, int N, const SolveConfig& cfg = {});
ScenarioTree example73_tree();
std::string example73_json(const Example73Demo& d, const Config& c);

}  // namespace utilmax
