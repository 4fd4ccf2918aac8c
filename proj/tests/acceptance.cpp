// Acceptance criteria 1-9; one PASS/FAIL line each.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "symred/numeric.hpp"
#include "symred/parser.hpp"
#include "symred/symmetry.hpp"

using namespace symred;

namespace {

constexpr double kInvarianceSeconds = 5;
constexpr double kRk4Tolerance = 1e-8;
constexpr double kExplicitTolerance = 1e-8;
constexpr double kRadicandMin = 0.5;
constexpr double kPropertySeconds = 60;
constexpr double kRoundTripTolerance = 1e-6;

const char* kPde = "u[t] - (A/u[x]^3 + B/u[x]^2)*u[x,x] - lambda*u*u[x] - lambda1*h(u + u[x]^-1)";
const char* kPhi2 = "C*exp(lambda1*t) - (A - lambda)/lambda1";
const char* kPhi1 = "-(2*(B - (A - lambda)*lambda/lambda1)*t + 2*lambda*C*exp(lambda1*t)/lambda1 - C1)";

/// u_t = f(u_x) u_xx + lambda u u_x + lambda1 h(u + 1/u_x) with the square-root ansatz.
struct Family {
  Context ctx;
  Ansatz ansatz;
  NumericEnv params;

  Family() {
    ctx.add_indep("x");
    ctx.add_indep("t");
    ctx.add_dep("u");
    for (const char* p : {"A", "B", "lambda", "lambda1", "C", "C1", "z"}) ctx.add_param(p);
    ctx.add_func("h", 1);
    for (const char* f : {"phi1", "phi2"}) ctx.set_default_args(ctx.add_func(f, 1), {p("t")});
    const int r = ctx.declare_atom("r");
    ctx.set_relation(r, p("r^2 - phi1 + 2*x"));
    ctx.add_derivative_rule(r, 0, p("-1/r"));
    ctx.add_derivative_rule(r, 1, p("d(phi1,1)/(2*r)"));
    ansatz = {"sqrt_family", 0, p("phi2 - r"), 0, {ctx.func_index("phi1"), ctx.func_index("phi2")}};
    const std::pair<const char*, double> values[] = {{"A", 2}, {"B", 0}, {"lambda", 1}, {"lambda1", 1},
                                                     {"C", 1}, {"C1", 10}};
    for (const auto& [name, v] : values) params.values[ctx.param_atom(ctx.param_index(name))] = v;
  }
  Expr p(const std::string& s) const { return parse(s, ctx); }
  Expr pde(const std::string& h_body) const {
    return instantiate_function(p(kPde), ctx.func_index("h"), {ctx.param_atom(ctx.param_index("z"))}, p(h_body));
  }
  ExplicitSystem reduced(const std::string& h_body) const {
    const ReducedSystem rs = collect_system(apply_ansatz(pde(h_body), ansatz, ctx), ansatz, ctx);
    return explicit_form(rs.equations, ansatz.reduced_functions, 1, ctx);
  }
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Outcome()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  criterion %d: %s -- %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", n, title.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

int main() {
  report(1, "K1, K2, K3 leave u_xx = u_x^3 invariant", [] {
    const auto t0 = std::chrono::steady_clock::now();
    Family F;
    const Constraint c = make_constraint("ode", F.p("u[x,x]"), F.p("u[x]^3"));
    std::string defects;
    bool all = true;
    for (const char* eta : {"(A*u[x]^-3 + B*u[x]^-2)*u[x,x]", "u*u[x]", "h(u + u[x]^-1)"}) {
      const DefectReport r = invariance_defect(c, {"K", F.p(eta), 0}, F.ctx);
      all = all && r.is_invariant;
      defects += (defects.empty() ? "" : ", ") + to_string(r.defect, F.ctx);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return Outcome{all && secs < kInvarianceSeconds, "defects " + defects + " in " + num(secs) + " s"};
  });

  report(2, "determining equations over u_x^-5..u_x^2 leave exactly a_-3, a_-2 free", [] {
    Family F;
    std::vector<Atom> unknowns;
    std::string templ;
    for (int k = -5; k <= 2; ++k) {
      const std::string name = k < 0 ? "a_m" + std::to_string(-k) : "a_" + std::to_string(k);
      unknowns.push_back(F.ctx.param_atom(F.ctx.add_param(name)));
      templ += (templ.empty() ? "" : " + ") + name + "*u[x]^" + (k < 0 ? "(" + std::to_string(k) + ")" : std::to_string(k));
    }
    const Constraint c = make_constraint("ode", F.p("u[x,x]"), F.p("u[x]^3"));
    const EvolutionaryField Q{"template", F.p("(" + templ + ")*u[x,x]"), 0};
    const DeterminingSolution sol = solve_determining(ConstraintSet(F.ctx, {c}), c.as_zero(), Q, unknowns, F.ctx);
    std::set<std::string> free;
    for (const Atom& a : sol.free_unknowns) free.insert(a.name());
    bool supported = sol.basis.size() == 2;
    for (const auto& v : sol.basis) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != 0 && unknowns[i].name() != "a_m3" && unknowns[i].name() != "a_m2") supported = false;
      }
    }
    for (Rational q : sol.particular) supported = supported && q == 0;
    const bool ok = sol.consistent && supported && free == std::set<std::string>{"a_m3", "a_m2"};
    std::string f;
    for (const auto& n : free) f += (f.empty() ? "" : ", ") + n;
    return Outcome{ok, std::to_string(sol.basis.size()) + "-dimensional, free {" + f + "}"};
  });

  report(3, "the square-root ansatz reduces the equation to the expected two ODEs", [] {
    Family F;
    const ReducedSystem rs = collect_system(apply_ansatz(F.p(kPde), F.ansatz, F.ctx), F.ansatz, F.ctx);
    std::set<std::string> got, want;
    for (const Expr& e : rs.equations) got.insert(to_string(scale_normal(e), F.ctx));
    for (const char* e : {"d(phi2,1) - (A - lambda + lambda1*h(phi2))", "d(phi1,1) + 2*(B + lambda*phi2)"}) {
      want.insert(to_string(scale_normal(F.p(e)), F.ctx));
    }
    std::string g;
    for (const auto& s : got) g += (g.empty() ? "" : "; ") + s;
    return Outcome{got == want && rs.k1 == 2, g};
  });

  report(4, "RK4 with step 1e-3 matches the closed form on [0, 1]", [] {
    Family F;
    const ExplicitSystem sys = F.reduced("z");
    NumericEnv env = F.params;
    env.values[F.ctx.indep_atom(1)] = 0;
    const Expr phi1 = F.p(kPhi1), phi2 = F.p(kPhi2);
    const Trajectory tr = integrate_reduced(sys, F.params, {evaluate(phi1, env), evaluate(phi2, env)}, 0, 1, 1e-3);
    double worst = 0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
      env.values[F.ctx.indep_atom(1)] = tr.t[k];
      worst = std::max(worst, std::abs(tr.y[k][0] - evaluate(phi1, env)));
      worst = std::max(worst, std::abs(tr.y[k][1] - evaluate(phi2, env)));
    }
    return Outcome{worst < kRk4Tolerance, "max error " + num(worst) + " over " + std::to_string(tr.t.size()) + " points"};
  });

  report(5, "explicit solution residual on 50 points", [] {
    Family F;
    const std::string radicand = std::string("C1 - 2*(B - (A - lambda)*lambda/lambda1)*t") +
                                 " - 2*lambda*C*exp(lambda1*t)/lambda1 - 2*x";
    const Expr u = F.p(std::string(kPhi2) + " - sqrt(" + radicand + ")");
    std::vector<NumericEnv> pts;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 10; ++j) {
        NumericEnv env = F.params;
        env.values[F.ctx.indep_atom(1)] = 0.5 * i / 4;
        env.values[F.ctx.indep_atom(0)] = -2 + 5.0 * j / 9;
        pts.push_back(env);
      }
    }
    const double r = residual_closed_form(F.pde("z"), 0, u, pts, {{F.p(radicand), kRadicandMin, "radicand >= 1/2"}},
                                          F.ctx);
    return Outcome{r < kExplicitTolerance && pts.size() == 50, "max residual " + num(r)};
  });

  report(6, "KdV condition for u_xx = f(t,x) u", [] {
    Context ctx;
    ctx.add_indep("x");
    ctx.add_indep("t");
    ctx.add_dep("u");
    ctx.add_func("f", 2);
    ctx.add_func("alpha", 1);
    auto p = [&](const char* s) { return parse(s, ctx); };
    const Constraint c = make_constraint("schrodinger", p("u[x,x]"), p("f(t,x)*u"));
    const EvolutionaryField Q{"Q1", p("u[t] + u[x,x,x] - 3*u[x,x]*u[x]/u + alpha(t)*u"), 0};
    const EvolutionaryField Q0{"Q1", p("u[t] + u[x,x,x] - 3*u[x,x]*u[x]/u"), 0};
    const Expr defect = invariance_defect(c, Q, ctx).defect;
    const Expr kdv = p("u*(d(f,1,0)(t,x) + d(f,0,3)(t,x) - 6*f(t,x)*d(f,0,1)(t,x))");
    std::optional<Poly> q;
    if (defect.den() == kdv.den()) q = exact_divide(defect.num(), kdv.num());
    const bool divides = q && q->is_constant() && !q->is_zero();
    const bool alpha_free = invariance_defect(c, Q0, ctx).defect == defect;
    const Constraint rule = make_constraint("kdv", p("d(f,1,0)(t,x)"), p("6*f(t,x)*d(f,0,1)(t,x) - d(f,0,3)(t,x)"));
    const bool vanishes = invariance_defect(c.as_zero(), Q, ConstraintSet(ctx, {c, rule}), ctx).is_invariant;
    return Outcome{divides && alpha_free && vanishes,
                   "c0 = " + (q && q->is_constant() ? q->constant()->get_str() : std::string("none")) +
                       ", alpha-independent " + (alpha_free ? "yes" : "no") + ", zero with KdV adjoined " +
                       (vanishes ? "yes" : "no")};
  });

  report(7, "Liouville solutions map to Moutard solutions", [] {
    Context ctx;
    ctx.add_indep("x");
    ctx.add_indep("y");
    ctx.add_dep("u");
    ctx.add_dep("w");
    for (const char* f : {"X", "Y", "f", "g"}) ctx.add_func(f, 1);
    auto p = [&](const char* s) { return parse(s, ctx); };
    const EvolutionaryField Q =
        evolutionary_rep({"Q1", {p("f(x)"), p("g(y)")}, p("-(d(f,1)(x) + d(g,1)(y))"), 0}, ctx);
    const Expr seed = p("ln(d(X,1)(x)*d(Y,1)(y)/(X(x) + Y(y))^2)");
    const Expr w = map_solution(Q, solution_bindings(seed, Q.eta, 0, ctx));
    const Expr x1 = p("(d(f,1)(x)*d(X,1)(x) + f(x)*d(X,2)(x))/d(X,1)(x) + (d(g,1)(y)*d(Y,1)(y) + g(y)*d(Y,2)(y))/d(Y,1)(y)"
                      " - 2*(f(x)*d(X,1)(x) + g(y)*d(Y,1)(y))/(X(x) + Y(y))");
    const bool plus = (w - x1).is_zero(), minus = (w + x1).is_zero();
    const Expr lin = frechet(p("u[x,y] - 2*exp(u)"), 0, 1, ctx);
    Bindings b = solution_bindings(seed, lin, 0, ctx);
    const Bindings wb = solution_bindings(w, lin, 1, ctx);
    b.insert(wb.begin(), wb.end());
    const bool solves = substitute(lin, b, SubstMode::Total).is_zero();
    return Outcome{(plus || minus) && solves, std::string("sign ") + (plus ? "+" : minus ? "-" : "none") +
                                                  ", linearized residual " + (solves ? "0" : "nonzero")};
  });

  report(8, "property suites", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string cmd = std::string("\"") + SYMRED_PROPERTIES_BIN + "\" --minimal > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return Outcome{rc == 0 && secs < kPropertySeconds,
                   std::string(rc == 0 ? "all suites pass" : "failures") + " in " + num(secs) + " s"};
  });

  report(9, "quadratic h trajectory through the ansatz solves the equation", [] {
    Family F;
    const ExplicitSystem sys = F.reduced("z^2");
    const Trajectory tr = integrate_reduced(sys, F.params, {10, 0}, 0, 1, 1e-3);
    std::vector<std::size_t> times;
    for (std::size_t k = 0; k < tr.t.size(); k += 100) times.push_back(k);
    std::vector<double> xs;
    for (int j = 0; j < 6; ++j) xs.push_back(-2 + j);
    const double r = residual_trajectory(F.pde("z^2"), F.ansatz, sys, tr, times, xs, F.params,
                                         {{F.p("phi1 - 2*x"), kRadicandMin, "phi1 - 2*x >= 1/2"}}, F.ctx);
    return Outcome{r < kRoundTripTolerance, "max residual " + num(r) + " on " +
                                                std::to_string(times.size() * xs.size()) + " points"};
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
