#include "symred/jet.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace symred {

namespace {

/// Derivation over the atom algebra: the leaf rule decides named atoms, the
/// chain rules for exp, ln, roots and function applications are shared.
class Deriver {
 public:
  using Leaf = std::function<std::optional<Expr>(const Atom&)>;

  explicit Deriver(Leaf leaf) : leaf_(std::move(leaf)) {}

  Expr of_expr(const Expr& e) {
    if (e.is_constant()) return Expr();
    const auto [dn_poly, dn_rest] = of_poly(e.num());
    if (e.den().is_one()) return Expr::polynomial(dn_poly) + dn_rest;
    const auto [dd_poly, dd_rest] = of_poly(e.den());
    if (dn_rest.is_zero() && dd_rest.is_zero()) {
      return Expr::fraction(dn_poly * e.den() - e.num() * dd_poly, e.den() * e.den());
    }
    const Expr den = Expr::polynomial(e.den());
    const Expr dnum = Expr::polynomial(dn_poly) + dn_rest;
    const Expr dden = Expr::polynomial(dd_poly) + dd_rest;
    return (dnum - e * dden) / den;
  }

  Expr of_atom(const Atom& a) {
    auto it = cache_.find(a);
    if (it != cache_.end()) return it->second;
    Expr d = compute(a);
    cache_.emplace(a, d);
    return d;
  }

 private:
  // Polynomial part (atoms with polynomial derivative) and general remainder.
  std::pair<Poly, Expr> of_poly(const Poly& p) {
    Poly acc;
    Expr rest;
    for (const Atom& a : p.atoms()) {
      const Expr da = of_atom(a);
      if (da.is_zero()) continue;
      const Poly dp = p.partial(a);
      if (da.is_polynomial()) {
        acc = acc + dp * da.num();
      } else {
        rest += Expr::polynomial(dp) * da;
      }
    }
    return {acc, rest};
  }

  Expr compute(const Atom& a) {
    if (auto d = leaf_(a)) return *d;
    switch (a.kind()) {
      case AtomKind::Func: {
        Expr out;
        const auto& args = a.args();
        for (std::size_t i = 0; i < args.size(); ++i) {
          const Expr darg = of_expr(args[i]);
          if (darg.is_zero()) continue;
          std::vector<int> orders = a.orders();
          ++orders[i];
          out += Expr(a.with_orders(std::move(orders))) * darg;
        }
        return out;
      }
      case AtomKind::Exp:
        return Expr(a) * of_expr(a.arg());
      case AtomKind::Ln:
        return of_expr(a.arg()) / a.arg();
      case AtomKind::Root:
        return Expr(a) * of_expr(a.arg()) / (Expr(a.relation_degree()) * a.arg());
      default:
        return Expr();
    }
  }

  Leaf leaf_;
  std::map<Atom, Expr, AtomLess> cache_;
};

Deriver total_deriver(int v, const Context& ctx) {
  if (v < 0 || static_cast<std::size_t>(v) >= ctx.indep_count()) {
    throw JetError("total derivative along an undeclared variable");
  }
  return Deriver([v, &ctx](const Atom& a) -> std::optional<Expr> {
    switch (a.kind()) {
      case AtomKind::Indep:
        return Expr(a.index() == v ? 1 : 0);
      case AtomKind::Param:
        return Expr();
      case AtomKind::Jet:
        return Expr(a.with_multi_index(a.multi_index().raised(static_cast<std::size_t>(v))));
      case AtomKind::Defined: {
        const auto& info = ctx.defined(a.index());
        auto it = info.derivative_rules.find(v);
        if (it == info.derivative_rules.end()) {
          throw JetError("defined atom '" + a.name() + "' has no derivative rule for '" + ctx.indep_name(v) +
                         "'");
        }
        return it->second;
      }
      default:
        return std::nullopt;
    }
  });
}

}  // namespace

Expr total_derivative(const Expr& e, int v, const Context& ctx) {
  return total_deriver(v, ctx).of_expr(e);
}

Expr total_derivative(const Expr& e, const MultiIndex& J, const Context& ctx) {
  Expr out = e;
  for (std::size_t v = 0; v < J.size(); ++v) {
    if (J[v] == 0) continue;
    Deriver d = total_deriver(static_cast<int>(v), ctx);
    for (int k = 0; k < J[v]; ++k) out = d.of_expr(out);
  }
  return out;
}

Expr diff_atom(const Expr& e, const Atom& target) {
  Deriver d([&target](const Atom& a) -> std::optional<Expr> {
    if (a == target) return Expr(1);
    switch (a.kind()) {
      case AtomKind::Indep:
      case AtomKind::Param:
      case AtomKind::Jet:
      case AtomKind::Defined:
        return Expr();
      default:
        return std::nullopt;
    }
  });
  return d.of_expr(e);
}

// ------------------------------------------------------------ substitution

namespace {

class Substituter {
 public:
  Substituter(const Bindings& b, SubstMode mode) : bindings_(b), mode_(mode) {}

  Expr of_expr(const Expr& e) {
    if (e.is_constant()) return e;
    return of_poly(e.num()) / of_poly(e.den());
  }

 private:
  // Images are combined over one common denominator so that only a single
  // normalization (and gcd) happens per polynomial.
  Expr of_poly(const Poly& p) {
    std::map<Atom, Expr, AtomLess> images;
    std::map<Atom, int, AtomLess> max_power;
    bool changed = false;
    for (const auto& t : p.terms()) {
      for (const auto& [a, k] : t.mono.factors()) {
        auto it = images.find(a);
        if (it == images.end()) {
          it = images.emplace(a, of_atom(a)).first;
          auto same = it->second.as_atom();
          changed = changed || !(same && *same == a);
        }
        int& m = max_power[a];
        m = std::max(m, k);
      }
    }
    if (!changed) return Expr::polynomial(p);
    Poly common(1);
    for (const auto& [a, img] : images) {
      if (!img.den().is_one()) common = common * img.den().pow(max_power[a]);
    }
    Poly num;
    for (const auto& t : p.terms()) {
      Poly term = Poly(t.coef);
      std::map<Atom, int, AtomLess> used;
      for (const auto& [a, k] : t.mono.factors()) {
        term = term * images.at(a).num().pow(k);
        used[a] = k;
      }
      for (const auto& [a, img] : images) {
        if (img.den().is_one()) continue;
        const int missing = max_power[a] - (used.count(a) ? used[a] : 0);
        if (missing > 0) term = term * img.den().pow(missing);
      }
      num = num + term;
    }
    return Expr::fraction(std::move(num), std::move(common));
  }

  Expr of_atom(const Atom& a) {
    auto it = cache_.find(a);
    if (it != cache_.end()) return it->second;
    Expr img = compute(a);
    cache_.emplace(a, img);
    return img;
  }

  Expr compute(const Atom& a) {
    auto b = bindings_.find(a);
    if (b != bindings_.end()) return b->second;
    switch (a.kind()) {
      case AtomKind::Jet:
        if (mode_ == SubstMode::Total) throw JetError("missing binding for jet variable " + describe(a));
        return Expr(a);
      case AtomKind::Func: {
        std::vector<Expr> args;
        bool changed = false;
        for (const Expr& x : a.args()) {
          args.push_back(of_expr(x));
          changed = changed || args.back() != x;
        }
        return changed ? Expr(a.with_args(std::move(args))) : Expr(a);
      }
      case AtomKind::Exp: {
        const Expr x = of_expr(a.arg());
        return x == a.arg() ? Expr(a) : exp(x);
      }
      case AtomKind::Ln: {
        const Expr x = of_expr(a.arg());
        return x == a.arg() ? Expr(a) : ln(x);
      }
      case AtomKind::Root: {
        const Expr x = of_expr(a.arg());
        return x == a.arg() ? Expr(a) : root(x, a.relation_degree());
      }
      default:
        return Expr(a);
    }
  }

  static std::string describe(const Atom& a) {
    std::string s = a.name();
    if (!a.multi_index().empty()) {
      s += "[";
      for (std::size_t v = 0; v < a.multi_index().size(); ++v) {
        if (v) s += ",";
        s += std::to_string(a.multi_index()[v]);
      }
      s += "]";
    }
    return s;
  }

  const Bindings& bindings_;
  SubstMode mode_;
  std::map<Atom, Expr, AtomLess> cache_;
};

}  // namespace

Expr substitute(const Expr& e, const Bindings& bindings, SubstMode mode) {
  Substituter s(bindings, mode);
  return s.of_expr(e);
}

Expr instantiate_function(const Expr& e, int func, const std::vector<Atom>& vars, const Expr& body) {
  std::map<std::vector<int>, Expr> derivs;
  auto derivative = [&](const std::vector<int>& orders) -> const Expr& {
    auto it = derivs.find(orders);
    if (it != derivs.end()) return it->second;
    Expr d = body;
    for (std::size_t i = 0; i < orders.size(); ++i) {
      for (int k = 0; k < orders[i]; ++k) d = diff_atom(d, vars[i]);
    }
    return derivs.emplace(orders, d).first->second;
  };
  Expr cur = e;
  for (int round = 0; round < 16; ++round) {
    Bindings b;
    for (const Atom& a : collect_atoms(cur)) {
      if (a.kind() != AtomKind::Func || a.index() != func) continue;
      if (a.args().size() != vars.size()) throw JetError("instantiation of '" + a.name() + "' has wrong arity");
      Bindings args;
      for (std::size_t i = 0; i < vars.size(); ++i) args.emplace(vars[i], a.args()[i]);
      b.emplace(a, substitute(derivative(a.orders()), args));
    }
    if (b.empty()) return cur;
    cur = substitute(cur, b);
  }
  throw JetError("function instantiation did not terminate");
}

// ------------------------------------------------------------ jet-like atoms

bool is_jet_like(const Atom& a) {
  if (a.kind() == AtomKind::Jet) return true;
  if (a.kind() != AtomKind::Func) return false;
  std::set<int> seen;
  for (const Expr& x : a.args()) {
    auto v = x.as_atom();
    if (!v || v->kind() != AtomKind::Indep || !seen.insert(v->index()).second) return false;
  }
  return true;
}

MultiIndex jet_index(const Atom& a) {
  if (a.kind() == AtomKind::Jet) return a.multi_index();
  std::vector<int> counts;
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    const auto v = static_cast<std::size_t>(a.args()[i].as_atom()->index());
    if (counts.size() <= v) counts.resize(v + 1, 0);
    counts[v] = a.orders()[i];
  }
  return MultiIndex(std::move(counts));
}

Atom raise_jet(const Atom& a, const MultiIndex& delta) {
  if (a.kind() == AtomKind::Jet) return a.with_multi_index(a.multi_index() + delta);
  std::vector<int> orders = a.orders();
  int used = 0;
  for (std::size_t i = 0; i < a.args().size(); ++i) {
    const int k = delta[static_cast<std::size_t>(a.args()[i].as_atom()->index())];
    orders[i] += k;
    used += k;
  }
  if (used != delta.order()) throw JetError("derivative of '" + a.name() + "' along a variable it does not depend on");
  return a.with_orders(std::move(orders));
}

bool jet_divides(const Atom& a, const Atom& b) {
  if (a.kind() != b.kind() || !is_jet_like(b)) return false;
  if (a.kind() == AtomKind::Jet) {
    return a.index() == b.index() && a.multi_index().precedes(b.multi_index());
  }
  if (a.index() != b.index() || a.args() != b.args()) return false;
  for (std::size_t i = 0; i < a.orders().size(); ++i) {
    if (a.orders()[i] > b.orders()[i]) return false;
  }
  return true;
}

Constraint make_constraint(const std::string& name, const Expr& lhs, const Expr& rhs) {
  auto leader = lhs.as_atom();
  if (!leader || !is_jet_like(*leader)) {
    throw JetError("constraint '" + name + "' must have a single derivative on its left-hand side");
  }
  for (const Atom& a : collect_atoms(rhs)) {
    if (!is_jet_like(a)) continue;
    if (jet_divides(*leader, a)) {
      throw JetError("constraint '" + name + "' is not in solved form: right-hand side contains a derivative of "
                     "its leader");
    }
    if (leader->kind() == AtomKind::Jet && a.kind() == AtomKind::Jet && a.index() == leader->index() &&
        compare_graded_lex(a.multi_index(), leader->multi_index()) >= 0) {
      throw JetError("constraint '" + name + "' is not in solved form: right-hand side ranks above its leader");
    }
  }
  return {name, *leader, rhs};
}

// ------------------------------------------------------------ constraint sets

ConstraintSet::ConstraintSet(const Context& ctx, std::vector<Constraint> cs) : ctx_(&ctx), cs_(std::move(cs)) {
  for (std::size_t i = 0; i < cs_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (cs_[i].leader == cs_[j].leader) {
        throw JetError("constraints '" + cs_[j].name + "' and '" + cs_[i].name + "' share a leader");
      }
    }
  }
  // Leaders must be mutually reduced; derivatives reachable from two leaders are
  // checked for agreement when they are first met.
  for (const auto& c : cs_) {
    for (const auto& d : cs_) {
      if (&c != &d && jet_divides(d.leader, c.leader)) {
        throw JetError("leader of '" + c.name + "' is a derivative of the leader of '" + d.name + "'");
      }
    }
  }
}

std::optional<std::size_t> ConstraintSet::leader_for(const Atom& a) const {
  if (!is_jet_like(a)) return std::nullopt;
  for (std::size_t i = 0; i < cs_.size(); ++i) {
    if (jet_divides(cs_[i].leader, a)) return i;
  }
  return std::nullopt;
}

bool ConstraintSet::reducible(const Expr& e) const {
  for (const Atom& a : collect_atoms(e)) {
    if (leader_for(a)) return true;
  }
  return false;
}

Expr ConstraintSet::reduced_value(const Atom& a) const {
  auto it = memo_.find(a);
  if (it != memo_.end()) return it->second;
  if (jet_index(a).order() > kOrderCap) {
    throw JetError("order cap exceeded while reducing modulo constraints (ranking violation?)");
  }
  std::optional<Expr> value;
  for (const auto& c : cs_) {
    if (!jet_divides(c.leader, a)) continue;
    Expr v;
    if (c.leader == a) {
      v = reduce(c.rhs);
    } else {
      const MultiIndex delta = jet_index(a) - jet_index(c.leader);
      std::size_t var = 0;
      while (delta[var] == 0) ++var;
      const Atom lower = raise_jet(c.leader, delta - MultiIndex::unit(var));
      v = reduce(total_derivative(reduced_value(lower), static_cast<int>(var), *ctx_));
    }
    if (value && !(*value - v).is_zero()) {
      throw JetError("inconsistent constraints: two reductions of the same derivative disagree");
    }
    value = v;
  }
  memo_.emplace(a, *value);
  return *value;
}

Expr ConstraintSet::reduce(const Expr& e) const {
  if (cs_.empty()) return e;
  Expr cur = e;
  for (int round = 0; round < kRoundCap; ++round) {
    Bindings b;
    for (const Atom& a : collect_atoms(cur)) {
      if (leader_for(a)) b.emplace(a, reduced_value(a));
    }
    if (b.empty()) return cur;
    cur = substitute(cur, b);
  }
  throw JetError("reduction modulo constraints did not reach a fixed point");
}

std::vector<Constraint> ConstraintSet::prolong(const MultiIndex& bound) const {
  std::vector<Constraint> out;
  std::set<Atom, AtomLess> seen;
  for (const auto& c : cs_) {
    const MultiIndex base = jet_index(c.leader);
    std::vector<int> room_counts(bound.size(), 0);
    for (std::size_t v = 0; v < bound.size(); ++v) room_counts[v] = std::max(0, bound[v] - base[v]);
    const MultiIndex room(room_counts);
    // Enumerate every delta with base + delta <= bound.
    std::vector<int> delta(room.size(), 0);
    while (true) {
      const Atom a = raise_jet(c.leader, MultiIndex(delta));
      if (seen.insert(a).second) {
        const MultiIndex mi(delta);
        out.push_back({mi.empty() ? c.name : c.name + "[" + to_string(mi, *ctx_) + "]", a, reduced_value(a)});
      }
      std::size_t k = 0;
      while (k < delta.size() && delta[k] == room[k]) delta[k++] = 0;
      if (k == delta.size()) break;
      ++delta[k];
    }
  }
  return out;
}

std::vector<Constraint> prolong_constraints(const std::vector<Constraint>& cs, const MultiIndex& bound,
                                            const Context& ctx) {
  return ConstraintSet(ctx, cs).prolong(bound);
}

Expr reduce_mod(const Expr& e, const std::vector<Constraint>& cs, const Context& ctx) {
  return ConstraintSet(ctx, cs).reduce(e);
}

// ------------------------------------------------------------ defined atoms

void validate_defined_atoms(const Context& ctx) {
  for (std::size_t i = 0; i < ctx.defined_count(); ++i) {
    const auto& info = ctx.defined(static_cast<int>(i));
    const Atom a = info.atom;
    for (const auto& [v, rule] : info.derivative_rules) {
      for (const Atom& b : collect_atoms(rule)) {
        if (b.kind() == AtomKind::Defined && b.index() >= static_cast<int>(ctx.defined_count())) {
          throw JetError("derivative rule of '" + a.name() + "' refers to an undeclared atom");
        }
      }
      if (!info.has_relation) continue;
      // D_v(a^d - sum rel_k a^k) must vanish with D_v a given by the rule.
      const auto& rel = a.relation();
      const int d = a.relation_degree();
      const Expr av(a);
      Expr check = Expr(d) * av.pow(d - 1) * rule;
      for (std::size_t k = 0; k < rel.size(); ++k) {
        check -= total_derivative(rel[k], v, ctx) * av.pow(static_cast<long>(k));
        if (k > 0) check -= Expr(static_cast<long>(k)) * rel[k] * av.pow(static_cast<long>(k) - 1) * rule;
      }
      if (!check.is_zero()) {
        throw JetError("derivative rule D[" + ctx.indep_name(v) + "](" + a.name() +
                       ") is inconsistent with its relation");
      }
    }
  }
}

}  // namespace symred
