#include "symred/symmetry.hpp"

#include <algorithm>
#include <map>

namespace symred {

namespace {

std::vector<Atom> jets_of(const Expr& e, int dep) {
  std::vector<Atom> out;
  for (const Atom& a : collect_atoms(e)) {
    if (a.kind() == AtomKind::Jet && a.index() == dep) out.push_back(a);
  }
  return out;
}

/// D_J(eta) with memoized intermediate derivatives.
class DerivativeTable {
 public:
  DerivativeTable(Expr base, const Context& ctx) : ctx_(ctx) { table_.emplace(MultiIndex(), std::move(base)); }

  const Expr& at(const MultiIndex& J) {
    auto it = table_.find(J);
    if (it != table_.end()) return it->second;
    std::size_t v = 0;
    while (J[v] == 0) ++v;
    Expr d = total_derivative(at(J - MultiIndex::unit(v)), static_cast<int>(v), ctx_);
    return table_.emplace(J, std::move(d)).first->second;
  }

 private:
  struct Less {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const { return a.counts() < b.counts(); }
  };
  const Context& ctx_;
  std::map<MultiIndex, Expr, Less> table_;
};

}  // namespace

int jet_order(const Expr& e, int dep) {
  int order = -1;
  for (const Atom& a : jets_of(e, dep)) order = std::max(order, a.multi_index().order());
  return order;
}

Expr prolong_apply(const EvolutionaryField& Q, const Expr& e, const Context& ctx) {
  DerivativeTable table(Q.eta, ctx);
  Expr out;
  for (const Atom& a : jets_of(e, Q.dep)) {
    const Expr de = diff_atom(e, a);
    if (de.is_zero()) continue;
    out += table.at(a.multi_index()) * de;
  }
  return out;
}

DefectReport invariance_defect(const Expr& delta, const EvolutionaryField& Q, const ConstraintSet& cs,
                               const Context& ctx) {
  DefectReport r;
  r.defect = cs.reduce(prolong_apply(Q, delta, ctx));
  r.is_invariant = r.defect.is_zero();
  if (!r.is_invariant) r.factors = factor_monomial(r.defect);
  return r;
}

DefectReport invariance_defect(const Constraint& c, const EvolutionaryField& Q, const Context& ctx) {
  return invariance_defect(c.as_zero(), Q, ConstraintSet(ctx, {c}), ctx);
}

std::optional<Rational> constant_ratio(const Expr& a, const Expr& b) {
  if (b.is_zero()) return std::nullopt;
  return (a / b).constant();
}

Expr frechet(const Expr& delta, int u, int w, const Context& ctx) {
  Expr out;
  for (const Atom& a : jets_of(delta, u)) {
    const Expr d = diff_atom(delta, a);
    if (d.is_zero()) continue;
    out += d * Expr(ctx.jet_atom(w, a.multi_index()));
  }
  return out;
}

Bindings solution_bindings(const Expr& seed, const Expr& e, int dep, const Context& ctx) {
  DerivativeTable table(seed, ctx);
  Bindings b;
  for (const Atom& a : jets_of(e, dep)) b.emplace(a, table.at(a.multi_index()));
  return b;
}

Expr map_solution(const EvolutionaryField& Q, const Bindings& sol) {
  return substitute(Q.eta, sol, SubstMode::Total);
}

EvolutionaryField commutator(const EvolutionaryField& Q1, const EvolutionaryField& Q2, const Context& ctx) {
  if (Q1.dep != Q2.dep) throw SymmetryError("commutator of fields acting on different dependent variables");
  EvolutionaryField out;
  out.name = "[" + Q1.name + ", " + Q2.name + "]";
  out.dep = Q1.dep;
  out.eta = prolong_apply(Q1, Q2.eta, ctx) - prolong_apply(Q2, Q1.eta, ctx);
  return out;
}

EvolutionaryField evolutionary_rep(const PointField& P, const Context& ctx) {
  if (P.xi.size() != ctx.indep_count()) {
    throw SymmetryError("point field '" + P.name + "' needs one xi per independent variable");
  }
  for (const Expr& e : P.xi) {
    if (jet_order(e, P.dep) > 0) throw SymmetryError("point field '" + P.name + "' depends on derivatives");
  }
  if (jet_order(P.eta, P.dep) > 0) throw SymmetryError("point field '" + P.name + "' depends on derivatives");
  EvolutionaryField out{P.name, P.eta, P.dep};
  for (std::size_t j = 0; j < P.xi.size(); ++j) {
    if (P.xi[j].is_zero()) continue;
    out.eta -= P.xi[j] * Expr(ctx.jet_atom(P.dep, MultiIndex::unit(j)));
  }
  return out;
}

// ------------------------------------------------------------ determining equations

namespace {

/// Reduced row echelon form over Q; returns pivot columns.
std::vector<std::size_t> rref(std::vector<std::vector<Rational>>& m, std::size_t cols) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < m.size(); ++c) {
    std::size_t p = row;
    while (p < m.size() && m[p][c] == 0) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[row]);
    const Rational lead = m[row][c];
    for (auto& x : m[row]) x /= lead;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == row || m[r][c] == 0) continue;
      const Rational f = m[r][c];
      for (std::size_t k = 0; k < m[r].size(); ++k) m[r][k] -= f * m[row][k];
    }
    pivots.push_back(c);
    ++row;
  }
  return pivots;
}

}  // namespace

DeterminingSolution solve_determining(const ConstraintSet& cs, const Expr& delta, const EvolutionaryField& templ,
                                      const std::vector<Atom>& unknowns, const Context& ctx) {
  DeterminingSolution sol;
  sol.unknowns = unknowns;
  std::map<Atom, std::size_t, AtomLess> column;
  for (std::size_t i = 0; i < unknowns.size(); ++i) {
    if (unknowns[i].kind() != AtomKind::Param) throw SymmetryError("unknowns must be parameters");
    column.emplace(unknowns[i], i);
  }
  const Expr defect = invariance_defect(delta, templ, cs, ctx).defect;

  auto is_unknown = [&](const Atom& a) { return column.count(a) > 0; };
  for (const Atom& a : defect.den().atoms()) {
    if (is_unknown(a)) throw SymmetryError("unknown '" + a.name() + "' occurs in the defect's denominator");
  }
  for (const Atom& a : defect.num().atoms()) {
    for (const Atom& inner : collect_atoms(Expr(a))) {
      if (!(inner == a) && is_unknown(inner)) {
        throw SymmetryError("nonlinear occurrence of unknown '" + inner.name() + "'");
      }
    }
  }

  // Row per monomial in the remaining atoms: coefficients of each unknown and
  // a constant column.
  const std::size_t n = unknowns.size();
  std::map<Monomial, std::vector<Rational>, MonomialLess> rows;
  for (const auto& t : defect.num().terms()) {
    std::optional<std::size_t> col;
    Monomial rest = t.mono;
    for (const auto& [a, k] : t.mono.factors()) {
      if (!is_unknown(a)) continue;
      if (k > 1 || col) throw SymmetryError("nonlinear occurrence of unknown '" + a.name() + "'");
      col = column.at(a);
      rest = rest.without(a);
    }
    auto& row = rows.try_emplace(rest, std::vector<Rational>(n + 1, Rational(0))).first->second;
    row[col ? *col : n] += t.coef;
  }

  std::vector<std::vector<Rational>> m;
  for (auto& [mono, row] : rows) {
    Expr eq = Expr(row[n]);
    for (std::size_t i = 0; i < n; ++i) eq += Expr(row[i]) * Expr(unknowns[i]);
    if (!eq.is_zero()) sol.equations.push_back(eq);
    m.push_back(row);
  }
  const auto pivots = rref(m, n + 1);
  for (std::size_t p : pivots) {
    if (p == n) {
      sol.consistent = false;
      return sol;
    }
  }
  sol.particular.assign(n, Rational(0));
  std::vector<bool> is_pivot(n, false);
  for (std::size_t r = 0; r < pivots.size(); ++r) {
    is_pivot[pivots[r]] = true;
    sol.particular[pivots[r]] = -m[r][n];
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(n, Rational(0));
    v[f] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m[r][f];
    sol.basis.push_back(std::move(v));
    sol.free_unknowns.push_back(unknowns[f]);
  }
  return sol;
}

Expr instantiate_unknowns(const Expr& templ, const std::vector<Atom>& unknowns,
                          const std::vector<Rational>& values) {
  Bindings b;
  for (std::size_t i = 0; i < unknowns.size(); ++i) b.emplace(unknowns[i], Expr(values.at(i)));
  return substitute(templ, b);
}

// ------------------------------------------------------------ first-order systems

SystemInvariance check_system_invariance(const std::vector<Expr>& system,
                                         const std::vector<EvolutionaryField>& algebra, int dep,
                                         const Context& ctx) {
  const std::size_t n = ctx.indep_count();
  // Columns are first derivatives in descending rank; last column is the rest.
  std::vector<Atom> firsts;
  for (std::size_t v = 0; v < n; ++v) firsts.push_back(ctx.jet_atom(dep, MultiIndex::unit(v)));

  std::vector<std::vector<Expr>> m;
  for (const Expr& eq : system) {
    if (jet_order(eq, dep) > 1) throw SymmetryError("system equation is not first order");
    std::vector<Expr> row(n + 1);
    Bindings zero;
    for (std::size_t v = 0; v < n; ++v) {
      row[v] = diff_atom(eq, firsts[v]);
      if (jet_order(row[v], dep) > 0) throw SymmetryError("system equation is not quasilinear");
      zero.emplace(firsts[v], Expr());
    }
    row[n] = substitute(eq, zero);
    m.push_back(std::move(row));
  }

  SystemInvariance out;
  std::size_t row = 0;
  for (std::size_t c = 0; c < n && row < m.size(); ++c) {
    std::size_t p = row;
    while (p < m.size() && m[p][c].is_zero()) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[row]);
    const Expr lead = m[row][c];
    for (auto& x : m[row]) x = x / lead;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == row || m[r][c].is_zero()) continue;
      const Expr f = m[r][c];
      for (std::size_t k = 0; k <= n; ++k) m[r][k] -= f * m[row][k];
    }
    ++row;
  }
  for (std::size_t r = row; r < m.size(); ++r) {
    if (!m[r][n].is_zero()) throw SymmetryError("system is inconsistent");
  }
  // Right-hand sides are read after full elimination so they are mutually reduced.
  for (std::size_t r = 0; r < row; ++r) {
    std::size_t c = 0;
    while (m[r][c].is_zero()) ++c;
    Expr rhs = -m[r][n];
    for (std::size_t k = c + 1; k < n; ++k) rhs -= m[r][k] * Expr(firsts[k]);
    out.solved.push_back(make_constraint("system" + std::to_string(r + 1), Expr(firsts[c]), rhs));
  }

  const ConstraintSet cs(ctx, out.solved);
  for (const auto& Q : algebra) {
    std::vector<Expr> defects;
    for (const Expr& eq : system) {
      defects.push_back(invariance_defect(eq, Q, cs, ctx).defect);
      if (!defects.back().is_zero()) out.invariant = false;
    }
    out.defects.push_back(std::move(defects));
  }
  return out;
}

std::string theorem2_verdict(const Theorem2Input& in) {
  const bool ok = in.equation_invariant && in.system_invariant && in.s >= in.k1 + 1;
  return ok ? "classical-invariant" : "inconclusive";
}

}  // namespace symred
