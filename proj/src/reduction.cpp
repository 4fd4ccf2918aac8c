#include "symred/reduction.hpp"

#include <map>
#include <optional>
#include <set>

namespace symred {

Expr apply_ansatz(const Expr& pde, const Ansatz& a, const Context& ctx) {
  Bindings b;
  for (const Atom& j : collect_atoms(pde)) {
    if (j.kind() != AtomKind::Jet || j.index() != a.dep) continue;
    try {
      b.emplace(j, total_derivative(a.F, j.multi_index(), ctx));
    } catch (const JetError& e) {
      throw ReductionError(std::string("ansatz '") + a.name + "' does not close under differentiation: " +
                           e.what());
    }
  }
  return substitute(pde, b, SubstMode::Total);
}

namespace {

bool depends(const Atom& a, int v, const Context& ctx, std::set<int>& visiting) {
  switch (a.kind()) {
    case AtomKind::Indep:
      return a.index() == v;
    case AtomKind::Param:
      return false;
    case AtomKind::Jet:
      return true;
    case AtomKind::Defined: {
      if (!visiting.insert(a.index()).second) return false;
      const auto& info = ctx.defined(a.index());
      auto rule = info.derivative_rules.find(v);
      if (rule != info.derivative_rules.end() && !rule->second.is_zero()) return true;
      std::vector<Expr> parts = info.atom.relation();
      for (const auto& [var, r] : info.derivative_rules) parts.push_back(r);
      for (const Expr& e : parts) {
        for (const Atom& b : collect_atoms(e, false)) {
          if (!(b == a) && depends(b, v, ctx, visiting)) return true;
        }
      }
      return false;
    }
    default:
      for (const Expr& e : a.args()) {
        for (const Atom& b : collect_atoms(e, false)) {
          if (depends(b, v, ctx, visiting)) return true;
        }
      }
      return false;
  }
}

}  // namespace

bool depends_on(const Atom& a, int v, const Context& ctx) {
  std::set<int> visiting;
  return depends(a, v, ctx, visiting);
}

namespace {

/// Coordinates for collection: if some x_1-dependent relation atom a satisfies
/// a relation linear in x_1, x_1 is rewritten through a free copy of a so the
/// basis monomials become independent.
struct Elimination {
  Bindings bindings;
  std::optional<Atom> twin;
};

Elimination eliminate_variable(const Expr& e, int x1, const Context& ctx) {
  Elimination out;
  const Atom xv = ctx.indep_atom(x1);
  for (const Atom& a : collect_atoms(e, false)) {
    if (a.relation_degree() < 2 || !depends_on(a, x1, ctx)) continue;
    if (a.kind() != AtomKind::Defined && a.kind() != AtomKind::Root) continue;
    const Atom twin = Atom::defined(-1, a.kind() == AtomKind::Defined ? a.name() : to_string(a, ctx), {});
    Expr rel = Expr(twin).pow(a.relation_degree());
    for (std::size_t k = 0; k < a.relation().size(); ++k) {
      rel -= a.relation()[k] * Expr(twin).pow(static_cast<long>(k));
    }
    const auto coeffs = rel.num().coefficients_in(xv);
    if (coeffs.size() != 2) continue;
    const Expr solved = -Expr::polynomial(coeffs[0]) / Expr::polynomial(coeffs[1]);
    if (contains_atom(solved, xv)) continue;
    out.bindings.emplace(xv, solved);
    out.bindings.emplace(a, Expr(twin));
    out.twin = twin;
    return out;
  }
  return out;
}

}  // namespace

ReducedSystem collect_system(const Expr& e, const Ansatz& a, const Context& ctx) {
  ReducedSystem rs;
  rs.denominator = Expr::polynomial(e.den());
  const int x1 = a.eliminated;

  const Elimination elim = eliminate_variable(e, x1, ctx);
  const Expr work = elim.twin ? substitute(e, elim.bindings) : e;
  auto is_dependent = [&](const Atom& at) { return (elim.twin && at == *elim.twin) || depends_on(at, x1, ctx); };

  std::map<Atom, bool, AtomLess> dependent;
  for (const Atom& at : work.num().atoms()) {
    const bool dep = is_dependent(at);
    dependent.emplace(at, dep);
    if (dep && at.kind() == AtomKind::Jet) {
      throw ReductionError("collection basis inadequate: jet variable " + to_string(at, ctx) + " remains");
    }
    if (dep && at.kind() == AtomKind::Func) {
      throw ReductionError("collection basis inadequate: " + to_string(at, ctx) + " depends on " +
                           ctx.indep_name(x1) + " through its argument");
    }
  }
  for (const Atom& at : work.den().atoms()) {
    if (is_dependent(at)) dependent.emplace(at, true);
  }

  std::map<Monomial, Poly, MonomialLess> groups;
  for (const auto& t : work.num().terms()) {
    Monomial key;
    Monomial rest;
    for (const auto& [at, k] : t.mono.factors()) {
      Monomial& part = dependent.at(at) ? key : rest;
      part = part * Monomial::of(at, k);
    }
    auto it = groups.try_emplace(key).first;
    it->second = it->second + Poly::from_monomial(rest, t.coef);
  }

  std::vector<Expr> seen;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    const Expr coef = Expr::polynomial(it->second);
    rs.basis.push_back(Expr::polynomial(Poly::from_monomial(it->first)));
    rs.equations.push_back(coef);
    const Expr norm = scale_normal(coef);
    bool fresh = true;
    for (const Expr& s : seen) fresh = fresh && s != norm;
    if (fresh) seen.push_back(norm);
  }
  rs.k1 = static_cast<int>(seen.size());
  rs.collected = work;
  return rs;
}

Expr scale_normal(const Expr& eq) {
  if (eq.is_zero()) return eq;
  return Expr::fraction(unit_normal(eq.num()), unit_normal(eq.den()));
}

}  // namespace symred
