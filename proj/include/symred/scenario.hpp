#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "symred/numeric.hpp"
#include "symred/parser.hpp"
#include "symred/symmetry.hpp"

namespace symred {

using Json = nlohmann::ordered_json;

/// func(vars) := body, applied symbolically before numeric work.
struct Instantiation {
  int func = 0;
  std::vector<Atom> vars;
  Expr body;
  std::string text;
};

Expr apply_instantiations(const Expr& e, const std::vector<Instantiation>& insts);

struct TrajectoryRecord {
  ExplicitSystem system;
  Trajectory trajectory;
  std::vector<Instantiation> instantiations;
};

struct Scenario;

/// Mutable state shared by the steps of one run.
struct RunState {
  std::map<std::string, TrajectoryRecord> trajectories;
};

struct StepOutcome {
  bool passed = false;
  Json detail = Json::object();
  std::string summary;
};

struct Step {
  std::string kind;
  std::string label;
  std::function<StepOutcome(const Scenario&, RunState&)> run;
};

/// A loaded scenario: declarations, named objects and the ordered checks.
struct Scenario {
  std::string name;
  Context ctx;
  std::vector<Constraint> constraints;
  std::map<std::string, EvolutionaryField> fields;
  std::map<std::string, PointField> pointfields;
  std::map<std::string, Expr> equations;
  std::map<std::string, Ansatz> ansatze;
  std::map<std::string, std::vector<Expr>> systems;
  std::vector<Instantiation> instantiations;
  NumericEnv numeric;
  std::vector<Step> steps;

  const Constraint* constraint(const std::string& name) const;
  /// Field by name; point fields are converted to their evolutionary representative.
  std::optional<EvolutionaryField> field(const std::string& name) const;
};

/// Parses a scenario completely and resolves every reference. Throws
/// ParseError (with position) on syntax or resolution errors.
Scenario load_scenario(std::string_view text, const std::string& name);

struct RunResult {
  bool passed = true;
  Json report;
  std::vector<std::string> lines;
};

RunResult run_scenario(const Scenario& sc);

/// Names to declare up front when inferring declarations from bare expressions.
struct DeclarationHints {
  std::vector<std::string> indep;
  std::vector<std::string> dep;
  std::vector<std::string> params;
  /// Unary functions written bare, with the time variable as default argument.
  std::vector<std::string> reduced;
  std::string time = "t";
};

/// Declarations read off expression texts: names subscripted with [..] are
/// dependent variables and the subscripts independent ones, called names are
/// functions, and every other name is a parameter.
Context infer_context(const std::vector<std::string>& texts, const DeclarationHints& hints = {});

/// Removes every "timing" member, recursively; used for determinism comparisons.
Json strip_timing(const Json& j);

}  // namespace symred
