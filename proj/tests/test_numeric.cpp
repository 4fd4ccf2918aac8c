#include <doctest.h>

#include <cmath>

#include "symred/numeric.hpp"
#include "symred/parser.hpp"

using namespace symred;

namespace {

struct Family {
  Context ctx;
  Ansatz ansatz;
  Expr pde;
  NumericEnv params;

  explicit Family(const std::string& h_body) {
    ctx.add_indep("x");
    ctx.add_indep("t");
    ctx.add_dep("u");
    for (const char* p : {"A", "B", "lambda", "lambda1", "C", "C1", "z"}) ctx.add_param(p);
    const int h = ctx.add_func("h", 1);
    for (const char* f : {"phi1", "phi2"}) ctx.set_default_args(ctx.add_func(f, 1), {p("t")});
    const int r = ctx.declare_atom("r");
    ctx.set_relation(r, p("r^2 - phi1 + 2*x"));
    ctx.add_derivative_rule(r, 0, p("-1/r"));
    ctx.add_derivative_rule(r, 1, p("d(phi1,1)/(2*r)"));
    ansatz = {"a", 0, p("phi2 - r"), 0, {ctx.func_index("phi1"), ctx.func_index("phi2")}};
    pde = instantiate_function(
        p("u[t] - (A/u[x]^3 + B/u[x]^2)*u[x,x] - lambda*u*u[x] - lambda1*h(u + u[x]^-1)"), h,
        {ctx.param_atom(ctx.param_index("z"))}, p(h_body));
    const std::pair<const char*, double> values[] = {{"A", 2}, {"B", 0}, {"lambda", 1}, {"lambda1", 1},
                                                     {"C", 1}, {"C1", 10}};
    for (const auto& [name, v] : values) params.values[ctx.param_atom(ctx.param_index(name))] = v;
  }
  Expr p(const std::string& s) const { return parse(s, ctx); }
  ExplicitSystem reduce() const {
    const Expr e = apply_ansatz(pde, ansatz, ctx);
    return explicit_form(collect_system(e, ansatz, ctx).equations, ansatz.reduced_functions, 1, ctx);
  }
  double at(const std::string& s, double t) const {
    NumericEnv env = params;
    env.values[ctx.indep_atom(1)] = t;
    return evaluate(p(s), env);
  }
};

const char* kPhi2 = "C*exp(lambda1*t) - (A - lambda)/lambda1";
const char* kPhi1 = "-(2*(B - (A - lambda)*lambda/lambda1)*t + 2*lambda*C*exp(lambda1*t)/lambda1 - C1)";

double closed_form_error(const Family& F, const Trajectory& tr) {
  double worst = 0;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    worst = std::max(worst, std::abs(tr.y[k][0] - F.at(kPhi1, tr.t[k])));
    worst = std::max(worst, std::abs(tr.y[k][1] - F.at(kPhi2, tr.t[k])));
  }
  return worst;
}

}  // namespace

TEST_CASE("evaluation") {
  Family F("z");
  NumericEnv env = F.params;
  env.values[F.ctx.indep_atom(0)] = 1.5;
  CHECK(evaluate(F.p("x^2 + A/4"), env) == doctest::Approx(2.75));
  CHECK(evaluate(F.p("exp(ln(x + 1)) + sqrt(x + 5/2)"), env) == doctest::Approx(4.5));
  CHECK_THROWS_AS(evaluate(F.p("sqrt(-x)"), env), NumericError);
  CHECK_THROWS_AS(evaluate(F.p("phi1"), env), NumericError);
}

TEST_CASE("explicit form and RK4 against the closed form") {
  Family F("z");
  const ExplicitSystem sys = F.reduce();
  REQUIRE(sys.rhs.size() == 2);
  const Trajectory tr = integrate_reduced(sys, F.params, {F.at(kPhi1, 0), F.at(kPhi2, 0)}, 0, 1, 1e-3);
  CHECK(tr.t.size() == 1001);
  CHECK(tr.y.back()[1] == doctest::Approx(std::exp(1.0) - 1).epsilon(1e-12));
  CHECK(closed_form_error(F, tr) < 1e-8);

  const auto coarse = integrate_reduced(sys, F.params, {F.at(kPhi1, 0), F.at(kPhi2, 0)}, 0, 1, 0.1);
  const auto fine = integrate_reduced(sys, F.params, {F.at(kPhi1, 0), F.at(kPhi2, 0)}, 0, 1, 0.05);
  const double ratio = closed_form_error(F, coarse) / closed_form_error(F, fine);
  CHECK(ratio >= 12);
  CHECK(ratio <= 20);
}

TEST_CASE("constant trajectory") {
  Context ctx;
  ctx.add_indep("t");
  const int f = ctx.add_func("phi", 1);
  const ExplicitSystem sys = explicit_form({parse("d(phi,1)(t)", ctx)}, {f}, 0, ctx);
  const auto tr = integrate_reduced(sys, {}, {3.5}, 0, 1, 0.25);
  for (const auto& y : tr.y) CHECK(y[0] == 3.5);
  CHECK_THROWS_AS(integrate_reduced(sys, {}, {3.5}, 0, 1, 0.3), NumericError);
  CHECK_THROWS_AS(explicit_form({parse("d(phi,1)(t)^2 - 1", ctx)}, {f}, 0, ctx), NumericError);
  CHECK_THROWS_AS(explicit_form({parse("d(phi,2)(t)", ctx)}, {f}, 0, ctx), NumericError);
}

TEST_CASE("explicit solution residual") {
  Family F("z");
  const Expr u = F.p(
      "C*exp(lambda1*t) - (A - lambda)/lambda1 - sqrt(2*((A - lambda)*lambda/lambda1 - B)*t"
      " - 2*lambda*C*exp(lambda1*t)/lambda1 + C1 - 2*x)");
  const Guard radicand{F.p("C1 - 2*x + 2*((A - lambda)*lambda/lambda1 - B)*t - 2*lambda*C*exp(lambda1*t)/lambda1"),
                       0.5, "radicand >= 0.5"};
  std::vector<NumericEnv> points;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 10; ++j) {
      NumericEnv env = F.params;
      env.values[F.ctx.indep_atom(1)] = 0.5 * i / 4;
      env.values[F.ctx.indep_atom(0)] = -2 + 5.0 * j / 9;
      points.push_back(env);
    }
  }
  CHECK(residual_closed_form(F.pde, 0, u, points, {radicand}, F.ctx) < 1e-8);
  NumericEnv bad = F.params;
  bad.values[F.ctx.indep_atom(1)] = 0;
  bad.values[F.ctx.indep_atom(0)] = 4;
  CHECK_THROWS_AS(residual_closed_form(F.pde, 0, u, {bad}, {radicand}, F.ctx), NumericError);
}

TEST_CASE("simple residuals") {
  Context ctx;
  ctx.add_indep("x");
  ctx.add_indep("y");
  ctx.add_dep("u");
  NumericEnv env;
  env.values[ctx.indep_atom(0)] = 0.3;
  env.values[ctx.indep_atom(1)] = 0.9;
  CHECK(residual_closed_form(parse("u[y] - u[x]", ctx), 0, parse("x + y", ctx), {env}, {}, ctx) < 1e-15);
  CHECK(residual_closed_form(parse("u[x,y] - 2*exp(u)", ctx), 0, parse("ln(1/(x + y)^2)", ctx), {env}, {}, ctx) <
        1e-10);
}

TEST_CASE("non-integrable instantiation round trip") {
  Family F("z^2");
  const ExplicitSystem sys = F.reduce();
  const auto tr = integrate_reduced(sys, F.params, {10, 0}, 0, 1, 1e-3);
  CHECK(tr.y.back()[1] == doctest::Approx(std::tan(1.0)).epsilon(1e-10));
  std::vector<std::size_t> times;
  for (std::size_t k = 0; k <= 1000; k += 100) times.push_back(k);
  const Guard radicand{F.p("phi1 - 2*x"), 0.5, "phi1 - 2*x >= 0.5"};
  const double res = residual_trajectory(F.pde, F.ansatz, sys, tr, times, {-2, -1, 0, 1, 2, 3}, F.params,
                                         {radicand}, F.ctx);
  CHECK(res < 1e-6);
}

TEST_CASE("finite-difference checks") {
  Family F("z");
  Context ctx;
  ctx.add_indep("x");
  ctx.add_dep("u");
  NumericEnv env;
  const Atom ux = *parse("u[x]", ctx).as_atom();
  env.values[ux] = 2;
  auto c = fd_check(parse("u[x]^3", ctx), ux, env, 1e-6, ctx);
  CHECK(c.symbolic == doctest::Approx(12));
  CHECK(c.abs_diff < 1e-6);
  const Atom u = *parse("u", ctx).as_atom();
  env.values[u] = 0;
  c = fd_check(parse("exp(u)", ctx), u, env, 1e-6, ctx);
  CHECK(c.symbolic == doctest::Approx(1));
  CHECK(c.abs_diff < 1e-6);

  NumericEnv at = F.params;
  at.values[F.ctx.indep_atom(0)] = 0.5;
  at.values[F.ctx.indep_atom(1)] = 0.2;
  at.values[F.ctx.func_atom(F.ctx.func_index("phi1"), {F.p("t")})] = 2;
  at.values[F.ctx.func_atom(F.ctx.func_index("phi2"), {F.p("t")})] = 0.7;
  c = fd_check(F.ansatz.F, F.ctx.indep_atom(0), at, 1e-6, F.ctx);
  CHECK(c.symbolic == doctest::Approx(1));
  CHECK(c.abs_diff < 1e-6);
}
