#include <doctest.h>

#include "symred/parser.hpp"
#include "symred/reduction.hpp"

using namespace symred;

namespace {

struct Fixture {
  Context ctx;
  Fixture() {
    ctx.add_indep("x");
    ctx.add_indep("t");
    ctx.add_dep("u");
    for (const char* p : {"A", "B", "lambda", "lambda1"}) ctx.add_param(p);
    ctx.add_func("h", 1);
    for (const char* f : {"phi1", "phi2"}) {
      ctx.set_default_args(ctx.add_func(f, 1), {parse("t", ctx)});
    }
  }
  Expr p(const std::string& s) const { return parse(s, ctx); }
  bool same(const Expr& a, const std::string& b) const { return (a - p(b)).is_zero(); }
  Ansatz ansatz(const std::string& F) const {
    return {"a", 0, p(F), 0, {ctx.func_index("phi1"), ctx.func_index("phi2")}};
  }
  void declare_root() {
    const int r = ctx.declare_atom("r");
    ctx.set_relation(r, p("r^2 - phi1 + 2*x"));
    ctx.add_derivative_rule(r, 0, p("-1/r"));
    ctx.add_derivative_rule(r, 1, p("d(phi1,1)/(2*r)"));
  }
};

const char* kPde =
    "u[t] - (A/u[x]^3 + B/u[x]^2)*u[x,x] - lambda*u*u[x] - lambda1*h(u + u[x]^-1)";

}  // namespace

TEST_CASE("heat equation with a quadratic ansatz") {
  Fixture F;
  const Ansatz a = F.ansatz("phi1 + phi2*x^2");
  const Expr e = apply_ansatz(F.p("u[t] - u[x,x]"), a, F.ctx);
  CHECK(F.same(e, "d(phi1,1) + d(phi2,1)*x^2 - 2*phi2"));
  const ReducedSystem rs = collect_system(e, a, F.ctx);
  CHECK(rs.k1 == 2);
  REQUIRE(rs.equations.size() == 2);
  CHECK(F.same(rs.equations[0], "d(phi2,1)"));
  CHECK(F.same(rs.equations[1], "d(phi1,1) - 2*phi2"));
}

TEST_CASE("single monomial collection") {
  Fixture F;
  const Ansatz a = F.ansatz("phi1*x");
  const ReducedSystem rs = collect_system(apply_ansatz(F.p("u[t]"), a, F.ctx), a, F.ctx);
  CHECK(rs.k1 == 1);
  CHECK(F.same(rs.equations.at(0), "d(phi1,1)"));
}

TEST_CASE("square-root ansatz reduces the invariant family") {
  Fixture F;
  F.declare_root();
  const Ansatz a = F.ansatz("phi2 - r");
  CHECK(apply_ansatz(F.p("u[x,x] - u[x]^3"), a, F.ctx).is_zero());

  const Expr e = apply_ansatz(F.p(kPde), a, F.ctx);
  CHECK(F.same(e, "(d(phi2,1) - A + lambda - lambda1*h(phi2)) + (-d(phi1,1)/2 - B - lambda*phi2)/r"));
  const ReducedSystem rs = collect_system(e, a, F.ctx);
  CHECK(rs.k1 == 2);
  REQUIRE(rs.equations.size() == 2);
  std::vector<std::string> got;
  for (const auto& eq : rs.equations) got.push_back(to_string(scale_normal(eq), F.ctx));
  const std::string e1 = to_string(scale_normal(F.p("d(phi2,1) - (A - lambda + lambda1*h(phi2))")), F.ctx);
  const std::string e2 = to_string(scale_normal(F.p("-d(phi1,1) - 2*(B + lambda*phi2)")), F.ctx);
  CHECK(((got[0] == e1 && got[1] == e2) || (got[0] == e2 && got[1] == e1)));

  Expr rebuilt;
  for (std::size_t i = 0; i < rs.basis.size(); ++i) rebuilt += rs.basis[i] * rs.equations[i];
  CHECK((rebuilt - Expr::polynomial(rs.collected.num())).is_zero());
}

TEST_CASE("root-atom form of the same ansatz") {
  Fixture F;
  const Ansatz a = F.ansatz("phi2 - sqrt(phi1 - 2*x)");
  CHECK(apply_ansatz(F.p("u[x,x] - u[x]^3"), a, F.ctx).is_zero());
  const ReducedSystem rs = collect_system(apply_ansatz(F.p(kPde), a, F.ctx), a, F.ctx);
  CHECK(rs.k1 == 2);
}

TEST_CASE("inadequate collection basis") {
  Fixture F;
  const Ansatz a = F.ansatz("phi1 + x");
  CHECK_THROWS_AS(collect_system(apply_ansatz(F.p("u[t] - h(u)"), a, F.ctx), a, F.ctx), ReductionError);
  F.ctx.declare_atom("s");
  CHECK_THROWS_AS(apply_ansatz(F.p("u[x]"), F.ansatz("phi1*s"), F.ctx), ReductionError);
}
