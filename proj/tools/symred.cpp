#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "symred/scenario.hpp"

using namespace symred;

namespace {

/// Exit codes: 0 pass, 1 check failure or computation error, 2 input error.
constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kInput = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

/// Shared options for the expression subcommands.
struct Decls {
  std::string scenario;
  std::string indep;
  std::string dep = "u";
  std::string params;
  std::string functions;
  std::string time = "t";
  std::optional<Scenario> loaded;

  void add_to(CLI::App* app, bool with_functions = false) {
    app->add_option("--scenario", scenario, "Take declarations and named objects from a scenario file");
    app->add_option("--indep", indep, "Independent variables, in order (default: inferred)");
    app->add_option("--dep", dep, "Dependent variables (default: u)");
    app->add_option("--params", params, "Extra parameter names");
    if (with_functions) {
      app->add_option("--functions", functions, "Reduced functions of the time variable, e.g. phi1,phi2");
      app->add_option("--time", time, "Time variable of the reduced functions (default: t)");
    }
  }

  const Context& context(const std::vector<std::string>& texts) {
    if (!scenario.empty()) {
      loaded = load_scenario(read_file(scenario), std::filesystem::path(scenario).stem().string());
      return loaded->ctx;
    }
    DeclarationHints h;
    h.indep = split_list(indep);
    h.dep = split_list(dep);
    h.params = split_list(params);
    h.reduced = split_list(functions);
    h.time = time;
    loaded.emplace();
    loaded->ctx = infer_context(texts, h);
    return loaded->ctx;
  }
};

/// Parses an option value, tagging errors with the option name.
Expr parse_opt(const std::string& opt, const std::string& text, const Context& ctx) {
  try {
    return parse(text, ctx);
  } catch (const ParseError& e) {
    throw InputError(opt + ": " + e.what());
  }
}

Expr parse_equation(const std::string& opt, const std::string& text, const Context& ctx) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) return parse_opt(opt, text, ctx);
  return parse_opt(opt, text.substr(0, eq), ctx) - parse_opt(opt, text.substr(eq + 1), ctx);
}

Constraint parse_constraint(const std::string& name, const std::string& text, const Context& ctx) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw InputError("--constraint: expected 'leader = rhs' in '" + text + "'");
  try {
    return make_constraint(name, parse_opt("--constraint", text.substr(0, eq), ctx),
                           parse_opt("--constraint", text.substr(eq + 1), ctx));
  } catch (const JetError& e) {
    throw InputError(std::string("--constraint: ") + e.what());
  }
}

/// Named object of the loaded scenario, or an inline expression.
Expr equation_arg(const std::string& opt, const std::string& text, Decls& d, const Context& ctx) {
  if (d.loaded && !d.scenario.empty()) {
    if (auto it = d.loaded->equations.find(text); it != d.loaded->equations.end()) return it->second;
    if (const Constraint* c = d.loaded->constraint(text)) return c->as_zero();
  }
  return parse_equation(opt, text, ctx);
}

EvolutionaryField field_arg(const std::string& opt, const std::string& text, Decls& d, const Context& ctx) {
  if (d.loaded && !d.scenario.empty()) {
    if (auto f = d.loaded->field(text)) return *f;
  }
  return EvolutionaryField{opt.substr(2), parse_opt(opt, text, ctx), 0};
}

void set_values(NumericEnv& env, const std::vector<std::string>& sets, const Context& ctx) {
  for (const std::string& s : sets) {
    for (const std::string& item : split_list(s)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InputError("--set: expected name=value in '" + item + "'");
      std::string name = item.substr(0, eq);
      name.erase(name.find_last_not_of(" \t") + 1);
      const Expr var = parse_opt("--set", name, ctx);
      auto atom = var.as_atom();
      if (!atom) throw InputError("--set: '" + name + "' is not a single symbol");
      try {
        TokenCursor cur(tokenize(item.substr(eq + 1)));
        env.values[*atom] = parse_number(cur);
      } catch (const ParseError& e) {
        throw InputError("--set: " + std::string(e.what()));
      }
    }
  }
}

std::vector<Instantiation> instantiations(const std::vector<std::string>& items, Context& ctx) {
  std::vector<Instantiation> out;
  for (const std::string& text : items) {
    const std::vector<Token> toks = tokenize(text);
    TokenCursor cur(toks);
    try {
      Instantiation in;
      const Token& f = cur.peek();
      const std::string fname = cur.expect_identifier();
      auto ref = ctx.lookup(fname);
      if (!ref || ref->kind != SymbolKind::Func) cur.fail_at(f, "undeclared function '" + fname + "'");
      in.func = ref->index;
      cur.expect_symbol("(");
      do {
        const std::string v = cur.expect_identifier();
        auto vr = ctx.lookup(v);
        if (!vr) in.vars.push_back(ctx.param_atom(ctx.add_param(v)));
        else if (vr->kind == SymbolKind::Param) in.vars.push_back(ctx.param_atom(vr->index));
        else if (vr->kind == SymbolKind::Indep) in.vars.push_back(ctx.indep_atom(vr->index));
        else cur.fail("'" + v + "' cannot be used as a bound variable");
      } while (cur.accept_symbol(","));
      cur.expect_symbol(")");
      cur.expect_symbol("=");
      in.body = parse_expression(cur, ctx);
      if (!cur.at_end()) cur.fail("unexpected '" + cur.peek().text + "'");
      in.text = text;
      out.push_back(in);
    } catch (const ParseError& e) {
      throw InputError("--instantiate: " + std::string(e.what()));
    }
  }
  return out;
}

// ------------------------------------------------------------ run

int cmd_run(const std::string& file, const std::string& json_path, bool quiet) {
  const std::string text = read_file(file);
  Scenario sc;
  try {
    sc = load_scenario(text, std::filesystem::path(file).stem().string());
  } catch (const ParseError& e) {
    std::cerr << file << ":" << e.what() << "\n";
    return kInput;
  }
  const RunResult r = run_scenario(sc);
  if (!quiet) {
    for (const auto& l : r.lines) std::cout << l << "\n";
  }
  std::cout << "scenario " << sc.name << ": " << r.report["summary"]["passed"].get<int>() << "/"
            << r.report["summary"]["checks"].get<int>() << " checks passed\n";
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw InputError("cannot write '" + json_path + "'");
    out << r.report.dump(2) << "\n";
  }
  return r.passed ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic Lie-Backlund symmetries and ODE reduction of evolution equations"};
  app.require_subcommand(1);
  std::function<int()> action;

  // run
  std::string run_file, run_json;
  bool run_quiet = false;
  auto* run = app.add_subcommand("run", "Run a scenario file and report each check");
  run->add_option("file", run_file, "Scenario file")->required();
  run->add_option("--json", run_json, "Write the JSON report to this path");
  run->add_flag("--quiet", run_quiet, "Only print the summary line");
  run->callback([&] { action = [&] { return cmd_run(run_file, run_json, run_quiet); }; });

  // check
  Decls check_d;
  std::string check_field;
  std::vector<std::string> check_cs;
  auto* check = app.add_subcommand("check", "Invariance defect of a constraint under a field");
  check_d.add_to(check);
  check->add_option("--field", check_field, "Characteristic, or a field name of --scenario")->required();
  check->add_option("--constraint", check_cs, "leader = rhs; further occurrences are adjoined")->required();
  check->callback([&] {
    action = [&] {
      std::vector<std::string> texts{check_field};
      texts.insert(texts.end(), check_cs.begin(), check_cs.end());
      const Context& ctx = check_d.context(texts);
      const EvolutionaryField Q = field_arg("--field", check_field, check_d, ctx);
      std::vector<Constraint> cs;
      for (std::size_t i = 0; i < check_cs.size(); ++i) {
        const Constraint* named = check_d.scenario.empty() ? nullptr : check_d.loaded->constraint(check_cs[i]);
        cs.push_back(named ? *named : parse_constraint("c" + std::to_string(i + 1), check_cs[i], ctx));
      }
      const DefectReport r = invariance_defect(cs.front().as_zero(), Q, ConstraintSet(ctx, cs), ctx);
      std::cout << "defect: " << to_string(r.defect, ctx) << "\n";
      if (r.factors) {
        std::cout << "factors: " << r.factors->content.get_str() << " * (" << to_string(r.factors->monomial, ctx)
                  << ") * (" << to_string(r.factors->primitive, ctx) << ")\n";
      }
      std::cout << (r.is_invariant ? "invariant" : "not invariant") << "\n";
      return r.is_invariant ? kPass : kFail;
    };
  });

  // linearize
  Decls lin_d;
  std::string lin_eq, lin_aux = "w";
  auto* lin = app.add_subcommand("linearize", "Frechet derivative of an equation");
  lin_d.add_to(lin);
  lin->add_option("--eq", lin_eq, "Equation (expression or lhs = rhs)")->required();
  lin->add_option("--aux", lin_aux, "Name of the linearized variable (default: w)");
  lin->callback([&] {
    action = [&] {
      lin_d.dep = lin_d.dep + "," + lin_aux;
      const Context& ctx = lin_d.context({lin_eq});
      const Expr eq = equation_arg("--eq", lin_eq, lin_d, ctx);
      std::cout << to_string(frechet(eq, ctx.dep_index(split_list(lin_d.dep).front()), ctx.dep_index(lin_aux), ctx), ctx)
                << "\n";
      return kPass;
    };
  });

  // map-solution
  Decls map_d;
  std::string map_field, map_seed;
  auto* map = app.add_subcommand("map-solution", "Apply a field to a known solution");
  map_d.add_to(map);
  map->add_option("--field", map_field, "Characteristic, or a field name of --scenario")->required();
  map->add_option("--seed", map_seed, "Solution u = seed")->required();
  map->callback([&] {
    action = [&] {
      const Context& ctx = map_d.context({map_field, map_seed});
      const EvolutionaryField Q = field_arg("--field", map_field, map_d, ctx);
      const Expr seed = parse_opt("--seed", map_seed, ctx);
      std::cout << to_string(map_solution(Q, solution_bindings(seed, Q.eta, Q.dep, ctx)), ctx) << "\n";
      return kPass;
    };
  });

  // commutator
  Decls com_d;
  std::string com_f1, com_f2;
  auto* com = app.add_subcommand("commutator", "Characteristic of [Q1, Q2]");
  com_d.add_to(com);
  com->add_option("--f1", com_f1, "First characteristic")->required();
  com->add_option("--f2", com_f2, "Second characteristic")->required();
  com->callback([&] {
    action = [&] {
      const Context& ctx = com_d.context({com_f1, com_f2});
      const EvolutionaryField a = field_arg("--f1", com_f1, com_d, ctx);
      const EvolutionaryField b = field_arg("--f2", com_f2, com_d, ctx);
      std::cout << to_string(commutator(a, b, ctx).eta, ctx) << "\n";
      return kPass;
    };
  });

  // determine
  Decls det_d;
  std::string det_templ, det_unknowns;
  std::vector<std::string> det_cs;
  auto* det = app.add_subcommand("determine", "Solve the linear determining equations of a template");
  det_d.add_to(det);
  det->add_option("--template", det_templ, "Characteristic linear in the unknowns")->required();
  det->add_option("--unknowns", det_unknowns, "Comma-separated unknown parameters")->required();
  det->add_option("--constraint", det_cs, "leader = rhs; further occurrences are adjoined")->required();
  det->callback([&] {
    action = [&] {
      std::vector<std::string> texts{det_templ};
      texts.insert(texts.end(), det_cs.begin(), det_cs.end());
      const Context& ctx = det_d.context(texts);
      std::vector<Atom> unknowns;
      for (const auto& n : split_list(det_unknowns)) {
        auto a = parse_opt("--unknowns", n, ctx).as_atom();
        if (!a || a->kind() != AtomKind::Param) throw InputError("--unknowns: '" + n + "' is not a parameter");
        unknowns.push_back(*a);
      }
      std::vector<Constraint> cs;
      for (std::size_t i = 0; i < det_cs.size(); ++i) {
        cs.push_back(parse_constraint("c" + std::to_string(i + 1), det_cs[i], ctx));
      }
      const EvolutionaryField templ{"template", parse_opt("--template", det_templ, ctx), 0};
      const DeterminingSolution sol =
          solve_determining(ConstraintSet(ctx, cs), cs.front().as_zero(), templ, unknowns, ctx);
      if (!sol.consistent) {
        std::cout << "inconsistent\n";
        return kFail;
      }
      std::cout << "dimension: " << sol.basis.size() << "\nfree:";
      for (const Atom& a : sol.free_unknowns) std::cout << " " << a.name();
      std::cout << "\n";
      for (const auto& v : sol.basis) std::cout << "basis: " << to_string(instantiate_unknowns(templ.eta, unknowns, v), ctx) << "\n";
      return kPass;
    };
  });

  // reduce
  Decls red_d;
  std::string red_eq, red_ansatz, red_elim;
  auto* red = app.add_subcommand("reduce", "Reduce an equation by an ansatz to a system of ODEs");
  red_d.add_to(red, true);
  red->add_option("--eq", red_eq, "Equation, or an equation name of --scenario")->required();
  red->add_option("--ansatz", red_ansatz, "u = F, or an ansatz name of --scenario")->required();
  red->add_option("--eliminate", red_elim, "Variable removed by collection (default: the non-time variable)");
  red->callback([&] {
    action = [&] {
      const Context& ctx = red_d.context({red_eq, red_ansatz});
      const Expr eq = equation_arg("--eq", red_eq, red_d, ctx);
      Ansatz a;
      if (!red_d.scenario.empty() && red_d.loaded->ansatze.count(red_ansatz)) {
        a = red_d.loaded->ansatze.at(red_ansatz);
      } else {
        const auto pos = red_ansatz.find('=');
        if (pos == std::string::npos) throw InputError("--ansatz: expected 'u = F' or an ansatz name");
        auto u = parse_opt("--ansatz", red_ansatz.substr(0, pos), ctx).as_atom();
        if (!u || u->kind() != AtomKind::Jet || !u->multi_index().empty()) {
          throw InputError("--ansatz: left-hand side must be a dependent variable");
        }
        a.name = "ansatz";
        a.dep = u->index();
        a.F = parse_opt("--ansatz", red_ansatz.substr(pos + 1), ctx);
        for (const auto& f : split_list(red_d.functions)) a.reduced_functions.push_back(ctx.func_index(f));
        if (a.reduced_functions.empty()) throw InputError("--functions: reduced functions are required for an inline ansatz");
        const int t = ctx.indep_index(red_d.time);
        a.eliminated = -1;
        if (!red_elim.empty()) {
          a.eliminated = ctx.indep_index(red_elim);
        } else {
          for (int v = 0; v < static_cast<int>(ctx.indep_count()); ++v) {
            if (v != t) {
              a.eliminated = v;
              break;
            }
          }
        }
        if (a.eliminated < 0) throw InputError("--ansatz: no variable to eliminate");
      }
      const ReducedSystem rs = collect_system(apply_ansatz(eq, a, ctx), a, ctx);
      for (const Expr& e : rs.equations) std::cout << to_string(e, ctx) << " = 0\n";
      std::cout << "k1: " << rs.k1 << "\n";
      return kPass;
    };
  });

  // solve-reduced
  Decls sol_d;
  std::vector<std::string> sol_eqs, sol_sets, sol_inst;
  std::string sol_init;
  double sol_from = 0, sol_to = 1, sol_step = 1e-3;
  int sol_rows = 10;
  auto* sol = app.add_subcommand("solve-reduced", "Integrate a reduced ODE system with fixed-step RK4");
  sol_d.add_to(sol, true);
  sol->add_option("--eq", sol_eqs, "Reduced equation (repeat for each)")->required();
  sol->add_option("--init", sol_init, "Initial values, in --functions order")->required();
  sol->add_option("--from", sol_from, "Start time (default 0)");
  sol->add_option("--to", sol_to, "End time (default 1)");
  sol->add_option("--step", sol_step, "Step size (default 0.001)");
  sol->add_option("--set", sol_sets, "Parameter values name=value,...");
  sol->add_option("--instantiate", sol_inst, "Function instantiation, e.g. 'h(z) = z^2'");
  sol->add_option("--rows", sol_rows, "Number of printed intervals (default 10)");
  sol->callback([&] {
    action = [&] {
      std::vector<std::string> texts = sol_eqs;
      const Context& cctx = sol_d.context(texts);
      Context& ctx = sol_d.loaded->ctx;
      (void)cctx;
      const auto insts = instantiations(sol_inst, ctx);
      std::vector<Expr> eqs;
      for (const auto& e : sol_eqs) eqs.push_back(apply_instantiations(parse_equation("--eq", e, ctx), insts));
      std::vector<int> funcs;
      for (const auto& f : split_list(sol_d.functions)) funcs.push_back(ctx.func_index(f));
      std::vector<double> y0;
      for (const auto& v : split_list(sol_init)) {
        TokenCursor cur(tokenize(v));
        y0.push_back(parse_number(cur));
      }
      NumericEnv env;
      set_values(env, sol_sets, ctx);
      const ExplicitSystem sys = explicit_form(eqs, funcs, ctx.indep_index(sol_d.time), ctx);
      const Trajectory tr = integrate_reduced(sys, env, y0, sol_from, sol_to, sol_step);
      std::cout << sol_d.time;
      for (const Atom& s : sys.state) std::cout << "," << s.name();
      std::cout << "\n" << std::setprecision(12);
      const std::size_t n = tr.t.size() - 1;
      const std::size_t rows = static_cast<std::size_t>(std::max(1, sol_rows));
      for (std::size_t r = 0; r <= rows; ++r) {
        const std::size_t k = n * r / rows;
        if (r > 0 && k == n * (r - 1) / rows) continue;
        std::cout << tr.t[k];
        for (double y : tr.y[k]) std::cout << "," << y;
        std::cout << "\n";
      }
      return kPass;
    };
  });

  // residual
  Decls res_d;
  std::string res_eq, res_solution;
  std::vector<std::string> res_at, res_sets, res_inst;
  double res_tol = -1;
  auto* res = app.add_subcommand("residual", "Numeric residual of a closed-form solution");
  res_d.add_to(res);
  res->add_option("--eq", res_eq, "Equation (expression or lhs = rhs)")->required();
  res->add_option("--solution", res_solution, "Candidate u = expression")->required();
  res->add_option("--at", res_at, "Evaluation point name=value,... (repeat for more points)")->required();
  res->add_option("--set", res_sets, "Parameter values name=value,...");
  res->add_option("--instantiate", res_inst, "Function instantiation, e.g. 'h(z) = z'");
  res->add_option("--tol", res_tol, "Fail (exit 1) when the max residual reaches this value");
  res->callback([&] {
    action = [&] {
      res_d.context({res_eq, res_solution});
      Context& ctx = res_d.loaded->ctx;
      const auto insts = instantiations(res_inst, ctx);
      const Expr eq = apply_instantiations(equation_arg("--eq", res_eq, res_d, ctx), insts);
      const Expr u = apply_instantiations(parse_opt("--solution", res_solution, ctx), insts);
      NumericEnv base = res_d.loaded->numeric;
      set_values(base, res_sets, ctx);
      std::vector<NumericEnv> pts;
      for (const auto& p : res_at) {
        NumericEnv env = base;
        set_values(env, {p}, ctx);
        pts.push_back(env);
      }
      const double r = residual_closed_form(eq, ctx.dep_index(split_list(res_d.dep).front()), u, pts, {}, ctx);
      std::cout << "max residual: " << std::setprecision(6) << r << " on " << pts.size() << " point(s)\n";
      return res_tol > 0 && !(r < res_tol) ? kFail : kPass;
    };
  });

  // verdict
  Theorem2Input vin;
  auto* ver = app.add_subcommand("verdict", "Invariance verdict from counts and invariance flags");
  ver->add_option("--s", vin.s, "Number of generators")->required();
  ver->add_option("--k1", vin.k1, "Number of independent reduced equations")->required();
  ver->add_flag("--eq-invariant", vin.equation_invariant, "The equation is invariant under the generators");
  ver->add_flag("--sys-invariant", vin.system_invariant, "The defining system is invariant under the generators");
  ver->callback([&] {
    action = [&] {
      std::cout << theorem2_verdict(vin) << "\n";
      return kPass;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInput;
  }
  try {
    return action();
  } catch (const InputError& e) {
    std::cerr << "symred: " << e.what() << "\n";
    return kInput;
  } catch (const ParseError& e) {
    std::cerr << "symred: " << e.what() << "\n";
    return kInput;
  } catch (const ContextError& e) {
    std::cerr << "symred: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "symred: error: " << e.what() << "\n";
    return kFail;
  }
}
