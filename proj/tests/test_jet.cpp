#include <doctest.h>

#include "symred/jet.hpp"
#include "symred/parser.hpp"

using namespace symred;

namespace {

struct Fixture {
  Context ctx;
  Fixture() {
    ctx.add_indep("x");
    ctx.add_indep("t");
    ctx.add_dep("u");
    ctx.add_param("A");
    ctx.add_func("h", 1);
    ctx.add_func("f", 2);
  }
  Expr p(const std::string& s) const { return parse(s, ctx); }
  std::string str(const Expr& e) const { return to_string(e, ctx); }
  bool same(const Expr& a, const std::string& b) const { return (a - p(b)).is_zero(); }
  Constraint constraint(const std::string& lhs, const std::string& rhs) const {
    return make_constraint("c", p(lhs), p(rhs));
  }
};

}  // namespace

TEST_CASE("total derivatives") {
  Fixture F;
  CHECK(F.same(total_derivative(F.p("u"), 0, F.ctx), "u[x]"));
  CHECK(F.same(total_derivative(F.p("u[x]^2"), 0, F.ctx), "2*u[x]*u[x,x]"));
  CHECK(F.same(total_derivative(F.p("h(u + u[x]^-1)"), 0, F.ctx),
               "d(h,1)(u + 1/u[x]) * (u[x] - u[x,x]/u[x]^2)"));
  CHECK(F.same(total_derivative(F.p("A*x^2 + exp(u)"), 0, F.ctx), "2*A*x + exp(u)*u[x]"));
  CHECK(F.same(total_derivative(F.p("ln(u)"), 1, F.ctx), "u[t]/u"));
  CHECK(F.same(total_derivative(F.p("f(t, x)"), 0, F.ctx), "d(f,0,1)(t, x)"));
  CHECK(F.same(total_derivative(F.p("sqrt(u)"), 0, F.ctx), "u[x]/(2*sqrt(u))"));
  CHECK(F.same(total_derivative(F.p("u"), MultiIndex{2, 1}, F.ctx), "u[x,x,t]"));
}

TEST_CASE("defined atom derivative rules") {
  Fixture F;
  F.ctx.add_func("phi1", 1);
  F.ctx.set_default_args(F.ctx.func_index("phi1"), {F.p("t")});
  const int r = F.ctx.declare_atom("r");
  F.ctx.set_relation(r, F.p("r^2 - phi1 + 2*x"));
  F.ctx.add_derivative_rule(r, 0, F.p("-1/r"));
  F.ctx.add_derivative_rule(r, 1, F.p("d(phi1,1)(t)/(2*r)"));
  CHECK_NOTHROW(validate_defined_atoms(F.ctx));
  CHECK(F.same(total_derivative(F.p("r^3"), 0, F.ctx), "-3*r"));

  Fixture G;
  const int s = G.ctx.declare_atom("s");
  G.ctx.set_relation(s, G.p("s^2 - x"));
  G.ctx.add_derivative_rule(s, 0, G.p("1/s"));
  CHECK_THROWS_AS(validate_defined_atoms(G.ctx), JetError);
  CHECK_THROWS_AS(total_derivative(G.p("s"), 1, G.ctx), JetError);
}

TEST_CASE("diff_atom") {
  Fixture F;
  const Atom ux = *F.p("u[x]").as_atom();
  const Atom u = *F.p("u").as_atom();
  CHECK(F.same(diff_atom(F.p("u[x]^3"), ux), "3*u[x]^2"));
  CHECK(F.same(diff_atom(F.p("h(u + u[x]^-1)"), ux), "-d(h,1)(u + 1/u[x])/u[x]^2"));
  CHECK(F.same(diff_atom(F.p("2*exp(u)"), u), "2*exp(u)"));
  CHECK(diff_atom(F.p("u[x,x]"), ux).is_zero());
}

TEST_CASE("substitute") {
  Fixture F;
  F.ctx.add_func("phi1", 1);
  const int r = F.ctx.declare_atom("r");
  F.ctx.set_relation(r, F.p("r^2 - phi1(t) + 2*x"));
  Bindings b{{*F.p("u[x]").as_atom(), F.p("1/r")}, {*F.p("u[x,x]").as_atom(), F.p("r^-3")}};
  CHECK(substitute(F.p("u[x,x] - u[x]^3"), b).is_zero());
  CHECK(F.same(substitute(F.p("h(u + u[x])"), b), "h(u + 1/r)"));
  CHECK(F.same(substitute(F.p("exp(u[x])*exp(u)"), {{*F.p("u[x]").as_atom(), F.p("-u")}}), "1"));
  CHECK(F.same(substitute(F.p("u"), {{*F.p("u").as_atom(), F.p("u")}}), "u"));
  CHECK_THROWS_AS(substitute(F.p("u + u[x]"), {{*F.p("u").as_atom(), F.p("x")}}, SubstMode::Total), JetError);
}

TEST_CASE("constraints: solved form") {
  Fixture F;
  CHECK_NOTHROW(F.constraint("u[x,x]", "u[x]^3"));
  CHECK_THROWS_AS(F.constraint("u[x]", "u[x,x]"), JetError);
  CHECK_THROWS_AS(F.constraint("u[x,x]", "u[x,x,t]"), JetError);
  CHECK_THROWS_AS(F.constraint("u[x] + u", "0"), JetError);
  CHECK_NOTHROW(F.constraint("d(f,1,0)(t, x)", "6*f(t,x)*d(f,0,1)(t,x) - d(f,0,3)(t,x)"));
}

TEST_CASE("prolongation and reduction") {
  Fixture F;
  std::vector<Constraint> cs{F.constraint("u[x,x]", "u[x]^3")};
  auto pro = prolong_constraints(cs, MultiIndex{3, 0}, F.ctx);
  REQUIRE(pro.size() == 2);
  CHECK(F.str(Expr(pro[1].leader)) == "u[x,x,x]");
  CHECK(F.same(pro[1].rhs, "3*u[x]^5"));
  auto pro_t = prolong_constraints(cs, MultiIndex{2, 1}, F.ctx);
  REQUIRE(pro_t.size() == 2);
  CHECK(F.same(pro_t[1].rhs, "3*u[x]^2*u[x,t]"));

  CHECK(reduce_mod(F.p("u[x,x] - u[x]^3"), cs, F.ctx).is_zero());
  CHECK(F.same(reduce_mod(F.p("u[x,x,x]"), cs, F.ctx), "3*u[x]^5"));
  CHECK(F.same(reduce_mod(F.p("h(u[x,x])"), cs, F.ctx), "h(u[x]^3)"));

  std::vector<Constraint> lin{F.constraint("u[x,x]", "f(t,x)*u")};
  CHECK(F.same(reduce_mod(F.p("u[x,x]*u[x]/u"), lin, F.ctx), "f(t,x)*u[x]"));
  auto pro_lin = prolong_constraints(lin, MultiIndex{3}, F.ctx);
  CHECK(F.same(pro_lin[1].rhs, "d(f,0,1)(t,x)*u + f(t,x)*u[x]"));
}

TEST_CASE("function-symbol constraints") {
  Fixture F;
  std::vector<Constraint> cs{F.constraint("d(f,1,0)(t, x)", "6*f(t,x)*d(f,0,1)(t,x) - d(f,0,3)(t,x)")};
  CHECK(reduce_mod(F.p("d(f,1,0)(t,x) + d(f,0,3)(t,x) - 6*f(t,x)*d(f,0,1)(t,x)"), cs, F.ctx).is_zero());
  const Expr ftx = reduce_mod(F.p("d(f,1,1)(t,x)"), cs, F.ctx);
  CHECK(F.same(ftx, "6*d(f,0,1)(t,x)^2 + 6*f(t,x)*d(f,0,2)(t,x) - d(f,0,4)(t,x)"));
}

TEST_CASE("inconsistent constraints are reported") {
  Fixture F;
  // u_x = u and u_t = 1 force u_xt = u_t = 1 and u_tx = 0.
  std::vector<Constraint> cs{F.constraint("u[x]", "u"), F.constraint("u[t]", "1")};
  CHECK_THROWS_AS(reduce_mod(F.p("u[x,t]"), cs, F.ctx), JetError);
}
