#include <algorithm>
#include <map>

#include "symred/expr.hpp"

namespace symred {

struct AtomNode {
  AtomKind kind = AtomKind::Indep;
  int index = -1;
  std::string name;
  MultiIndex multi;
  std::vector<int> orders;
  std::vector<Expr> args;
  int degree = 0;
  std::vector<Expr> relation;
};

// -------------------------------------------------------------------- Atom

namespace {

std::shared_ptr<AtomNode> node(AtomKind kind) {
  auto n = std::make_shared<AtomNode>();
  n->kind = kind;
  return n;
}

int compare_int_vectors(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

int compare_orders(const std::vector<int>& a, const std::vector<int>& b) {
  int sa = 0;
  int sb = 0;
  for (int k : a) sa += k;
  for (int k : b) sb += k;
  if (sa != sb) return sa < sb ? -1 : 1;
  return compare_int_vectors(a, b);
}

int compare_expr_lists(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int c = compare(a[i], b[i]);
    if (c != 0) return c;
  }
  return 0;
}

}  // namespace

Atom Atom::indep(int index, std::string name) {
  auto n = node(AtomKind::Indep);
  n->index = index;
  n->name = std::move(name);
  return Atom(n);
}

Atom Atom::param(int index, std::string name) {
  auto n = node(AtomKind::Param);
  n->index = index;
  n->name = std::move(name);
  return Atom(n);
}

Atom Atom::jet(int dep, std::string name, MultiIndex mi) {
  auto n = node(AtomKind::Jet);
  n->index = dep;
  n->name = std::move(name);
  n->multi = std::move(mi);
  return Atom(n);
}

Atom Atom::func(int index, std::string name, std::vector<int> orders, std::vector<Expr> args) {
  if (orders.size() != args.size()) {
    throw std::invalid_argument("derivative orders must match the number of arguments");
  }
  for (int k : orders) {
    if (k < 0) throw std::invalid_argument("negative derivative order");
  }
  auto n = node(AtomKind::Func);
  n->index = index;
  n->name = std::move(name);
  n->orders = std::move(orders);
  n->args = std::move(args);
  return Atom(n);
}

Atom Atom::defined(int index, std::string name, std::vector<Expr> relation) {
  auto n = node(AtomKind::Defined);
  n->index = index;
  n->name = std::move(name);
  n->degree = static_cast<int>(relation.size());
  n->relation = std::move(relation);
  return Atom(n);
}

Atom Atom::exp_of(const Expr& arg) {
  auto n = node(AtomKind::Exp);
  n->name = "exp";
  n->args = {arg};
  return Atom(n);
}

Atom Atom::ln_of(const Expr& arg) {
  auto n = node(AtomKind::Ln);
  n->name = "ln";
  n->args = {arg};
  return Atom(n);
}

Atom Atom::root_of(const Expr& base, int degree) {
  if (degree < 2) throw std::invalid_argument("root degree must be at least 2");
  auto n = node(AtomKind::Root);
  n->name = "root";
  n->args = {base};
  n->degree = degree;
  n->relation.assign(static_cast<std::size_t>(degree), Expr());
  n->relation[0] = base;
  return Atom(n);
}

AtomKind Atom::kind() const { return node_->kind; }
int Atom::index() const { return node_->index; }
const std::string& Atom::name() const { return node_->name; }
const MultiIndex& Atom::multi_index() const { return node_->multi; }
const std::vector<int>& Atom::orders() const { return node_->orders; }
const std::vector<Expr>& Atom::args() const { return node_->args; }
const Expr& Atom::arg() const { return node_->args.at(0); }
int Atom::relation_degree() const { return node_->degree; }
const std::vector<Expr>& Atom::relation() const { return node_->relation; }

bool Atom::is_pure_radical() const {
  if (node_->degree < 1) return false;
  for (std::size_t k = 1; k < node_->relation.size(); ++k) {
    if (!node_->relation[k].is_zero()) return false;
  }
  return true;
}

bool Atom::has_args() const { return !node_->args.empty(); }

Atom Atom::with_args(std::vector<Expr> args) const {
  auto n = std::make_shared<AtomNode>(*node_);
  n->args = std::move(args);
  if (n->kind == AtomKind::Root) n->relation[0] = n->args[0];
  return Atom(n);
}

Atom Atom::with_orders(std::vector<int> orders) const {
  auto n = std::make_shared<AtomNode>(*node_);
  n->orders = std::move(orders);
  return Atom(n);
}

Atom Atom::with_multi_index(MultiIndex mi) const {
  auto n = std::make_shared<AtomNode>(*node_);
  n->multi = std::move(mi);
  return Atom(n);
}

int compare(const Atom& a, const Atom& b) {
  if (a.node_ == b.node_) return 0;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.kind != y.kind) return static_cast<int>(x.kind) < static_cast<int>(y.kind) ? -1 : 1;
  switch (x.kind) {
    case AtomKind::Indep:
    case AtomKind::Param:
    case AtomKind::Defined:
      if (x.index != y.index) return x.index < y.index ? -1 : 1;
      return 0;
    case AtomKind::Jet:
      if (x.index != y.index) return x.index < y.index ? -1 : 1;
      return compare_graded_lex(x.multi, y.multi);
    case AtomKind::Func: {
      if (x.index != y.index) return x.index < y.index ? -1 : 1;
      const int c = compare_orders(x.orders, y.orders);
      if (c != 0) return c;
      return compare_expr_lists(x.args, y.args);
    }
    case AtomKind::Exp:
    case AtomKind::Ln:
      return compare(x.args[0], y.args[0]);
    case AtomKind::Root:
      if (x.degree != y.degree) return x.degree < y.degree ? -1 : 1;
      return compare(x.args[0], y.args[0]);
  }
  return 0;
}

// -------------------------------------------------------------------- Expr

struct Expr::Rep {
  Poly num;
  Poly den;
};

namespace {

const std::shared_ptr<const Expr::Rep>& zero_rep();

bool needs_canon(const Monomial& m) {
  int exps = 0;
  for (const auto& [a, k] : m.factors()) {
    if (a.kind() == AtomKind::Exp) {
      exps += k;
      if (exps > 1) return true;
    }
    const int d = a.relation_degree();
    if (d > 0 && k >= d) return true;
  }
  return false;
}

bool needs_canon(const Poly& p) {
  for (const auto& t : p.terms()) {
    if (needs_canon(t.mono)) return true;
  }
  return false;
}

/// a^k reduced modulo the relation of a (k >= degree).
Expr reduce_power(const Atom& a, int k) {
  const int d = a.relation_degree();
  const auto& rel = a.relation();
  if (a.is_pure_radical()) {
    // a^k = a^(k mod d) * c0^(k div d)
    return Expr(a).pow(k % d) * rel[0].pow(k / d);
  }
  // Polynomial remainder of a^k by a^d - sum rel[j] a^j, coefficients as Exprs.
  std::vector<Expr> coeffs(static_cast<std::size_t>(k) + 1, Expr());
  coeffs[static_cast<std::size_t>(k)] = Expr(1);
  for (int top = k; top >= d; --top) {
    const Expr lead = coeffs[static_cast<std::size_t>(top)];
    if (lead.is_zero()) continue;
    coeffs[static_cast<std::size_t>(top)] = Expr();
    for (int j = 0; j < d; ++j) {
      coeffs[static_cast<std::size_t>(top - d + j)] += lead * rel[static_cast<std::size_t>(j)];
    }
  }
  Expr out;
  const Expr base(a);
  for (int j = 0; j < d; ++j) {
    if (!coeffs[static_cast<std::size_t>(j)].is_zero()) out += coeffs[static_cast<std::size_t>(j)] * base.pow(j);
  }
  return out;
}

/// Applies exp merging and relation reduction to a polynomial, yielding a
/// rational function. Terms that are already canonical are kept verbatim.
std::pair<Poly, Poly> canon_poly(const Poly& p) {
  if (!needs_canon(p)) return {p, Poly(1)};
  std::vector<Poly::Term> plain;
  Expr special;
  for (const auto& t : p.terms()) {
    if (!needs_canon(t.mono)) {
      plain.push_back(t);
      continue;
    }
    Expr exp_arg;
    bool has_exp = false;
    Expr term(t.coef);
    std::vector<Monomial::Factor> rest;
    for (const auto& [a, k] : t.mono.factors()) {
      if (a.kind() == AtomKind::Exp) {
        exp_arg += a.arg() * Expr(k);
        has_exp = true;
      } else if (a.relation_degree() > 0 && k >= a.relation_degree()) {
        term *= reduce_power(a, k);
      } else {
        rest.emplace_back(a, k);
      }
    }
    Monomial rest_mono;
    for (const auto& [a, k] : rest) rest_mono = rest_mono * Monomial::of(a, k);
    term *= Expr::polynomial(Poly::from_monomial(rest_mono));
    if (has_exp) term *= exp(exp_arg);
    special += term;
  }
  Poly plain_poly = Poly::from_terms(std::move(plain));
  return {plain_poly * special.den() + special.num(), special.den()};
}

}  // namespace

Expr::Expr() : rep_(zero_rep()) {}

Expr::Expr(long c) : Expr(Rational(c)) {}

Expr::Expr(const Rational& c) {
  auto r = std::make_shared<Rep>();
  r->num = Poly(c);
  r->den = Poly(1);
  rep_ = r;
}

Expr::Expr(const Atom& a) {
  if (a.relation_degree() == 1) {
    // Degree-one relation: the atom is an alias of its right-hand side.
    *this = a.relation()[0];
    return;
  }
  auto r = std::make_shared<Rep>();
  r->num = Poly::from_atom(a);
  r->den = Poly(1);
  rep_ = r;
}

namespace {

const std::shared_ptr<const Expr::Rep>& zero_rep() {
  static const std::shared_ptr<const Expr::Rep> z = [] {
    auto r = std::make_shared<Expr::Rep>();
    r->den = Poly(1);
    return r;
  }();
  return z;
}

}  // namespace

Expr Expr::raw(Poly num, Poly den) {
  auto r = std::make_shared<Rep>();
  r->num = std::move(num);
  r->den = std::move(den);
  return Expr(std::shared_ptr<const Rep>(r));
}

const Poly& Expr::num() const { return rep_->num; }
const Poly& Expr::den() const { return rep_->den; }

Expr Expr::fraction(Poly num, Poly den) {
  if (den.is_zero()) throw DivisionByZero("division by a symbolically zero denominator");
  if (num.is_zero()) return Expr();
  for (int round = 0;; ++round) {
    if (round > 64) throw std::logic_error("normalization did not reach a fixed point");
    bool changed = false;
    if (needs_canon(num) || needs_canon(den)) {
      auto [n1, d1] = canon_poly(num);
      auto [n2, d2] = canon_poly(den);
      num = n1 * d2;
      den = d1 * n2;
      changed = true;
    }
    if (den.is_zero()) throw DivisionByZero("division by a symbolically zero denominator");
    if (num.is_zero()) return Expr();
    // Exp factors common to the whole denominator move to the numerator.
    const Monomial dc = den.monomial_content();
    Monomial exp_part;
    Expr exp_arg;
    for (const auto& [a, k] : dc.factors()) {
      if (a.kind() == AtomKind::Exp) {
        exp_part = exp_part * Monomial::of(a, k);
        exp_arg -= a.arg() * Expr(k);
      }
    }
    if (!exp_part.empty()) {
      den = den.divided_by(exp_part);
      const Expr e = exp(exp_arg);
      num = num * e.num();
      den = den * e.den();
      changed = true;
    }
    if (!changed) break;
  }
  // Cancel common factors.
  if (!den.is_constant()) {
    const Poly g = gcd(num, den);
    if (!g.is_constant()) {
      num = *exact_divide(num, g);
      den = *exact_divide(den, g);
    }
  }
  Rational s;
  den = unit_normal(den, &s);
  if (s != 1) num = num.scaled(s);
  return raw(std::move(num), std::move(den));
}

std::optional<Rational> Expr::constant() const {
  if (!is_constant()) return std::nullopt;
  return *num().constant() / *den().constant();
}

std::optional<Atom> Expr::as_atom() const {
  if (!den().is_one() || num().size() != 1) return std::nullopt;
  const auto& t = num().leading();
  if (t.coef != 1 || t.mono.factors().size() != 1 || t.mono.factors()[0].second != 1) {
    return std::nullopt;
  }
  return t.mono.factors()[0].first;
}

Expr Expr::operator-() const { return raw(-num(), den()); }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.den() == b.den()) return Expr::fraction(a.num() + b.num(), a.den());
  if (a.den().is_one()) return Expr::fraction(a.num() * b.den() + b.num(), b.den());
  if (b.den().is_one()) return Expr::fraction(a.num() + b.num() * a.den(), a.den());
  const Poly g = gcd(a.den(), b.den());
  const Poly ad = *exact_divide(a.den(), g);
  const Poly bd = *exact_divide(b.den(), g);
  return Expr::fraction(a.num() * bd + b.num() * ad, ad * b.den());
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  if (auto c = a.constant()) {
    if (*c == 1) return b;
    return Expr::raw(b.num().scaled(*c), b.den());
  }
  if (auto c = b.constant()) {
    if (*c == 1) return a;
    return Expr::raw(a.num().scaled(*c), a.den());
  }
  Poly an = a.num();
  Poly ad = a.den();
  Poly bn = b.num();
  Poly bd = b.den();
  if (!bd.is_one()) {
    const Poly g = gcd(an, bd);
    if (!g.is_constant()) {
      an = *exact_divide(an, g);
      bd = *exact_divide(bd, g);
    }
  }
  if (!ad.is_one()) {
    const Poly g = gcd(bn, ad);
    if (!g.is_constant()) {
      bn = *exact_divide(bn, g);
      ad = *exact_divide(ad, g);
    }
  }
  return Expr::fraction(an * bn, ad * bd);
}

Expr Expr::inverse() const {
  if (is_zero()) throw DivisionByZero("division by a symbolically zero expression");
  return fraction(den(), num());
}

Expr operator/(const Expr& a, const Expr& b) { return a * b.inverse(); }

Expr Expr::pow(long k) const {
  if (k == 0) return Expr(1);
  if (k < 0) return inverse().pow(-k);
  Expr result(1);
  Expr base = *this;
  while (k > 0) {
    if (k & 1) result *= base;
    k >>= 1;
    if (k > 0) base *= base;
  }
  return result;
}

int compare(const Expr& a, const Expr& b) {
  if (a.rep_ == b.rep_) return 0;
  const int c = compare(a.num(), b.num());
  if (c != 0) return c;
  return compare(a.den(), b.den());
}

// ------------------------------------------------------ transcendental atoms

Expr exp(const Expr& arg) {
  if (arg.is_zero()) return Expr(1);
  // Integer multiples of ln atoms leave the exponent: exp(c ln v + rest) = v^c exp(rest).
  Expr factor(1);
  Expr rest = arg;
  if (arg.den().is_one()) {
    std::vector<Poly::Term> kept;
    for (const auto& t : arg.num().terms()) {
      const auto& fs = t.mono.factors();
      if (fs.size() == 1 && fs[0].second == 1 && fs[0].first.kind() == AtomKind::Ln &&
          t.coef.get_den() == 1) {
        factor *= fs[0].first.arg().pow(t.coef.get_num().get_si());
      } else {
        kept.push_back(t);
      }
    }
    rest = Expr::polynomial(Poly::from_terms(std::move(kept)));
  }
  if (rest.is_zero()) return factor;
  return factor * Expr(Atom::exp_of(rest));
}

Expr ln(const Expr& arg, bool fold_exp) {
  if (arg.is_zero()) throw DivisionByZero("ln(0) is undefined");
  if (auto c = arg.constant(); c && *c == 1) return Expr();
  if (fold_exp) {
    if (auto a = arg.as_atom(); a && a->kind() == AtomKind::Exp) return a->arg();
  }
  return Expr(Atom::ln_of(arg));
}

namespace {

std::optional<mpz_class> exact_integer_root(const mpz_class& v, int q) {
  if (v < 0) return std::nullopt;
  mpz_class r;
  if (mpz_root(r.get_mpz_t(), v.get_mpz_t(), static_cast<unsigned long>(q)) == 0) return std::nullopt;
  return r;
}

}  // namespace

Expr root(const Expr& base, int degree) {
  if (degree < 1) throw std::invalid_argument("root degree must be positive");
  if (degree == 1) return base;
  if (base.is_zero()) return Expr();
  if (auto c = base.constant()) {
    auto n = exact_integer_root(c->get_num(), degree);
    auto d = exact_integer_root(c->get_den(), degree);
    if (n && d) return Expr(Rational(*n, *d));
  }
  return Expr(Atom::root_of(base, degree));
}

Expr pow(const Expr& base, const Rational& e) {
  if (e.get_den() == 1) return base.pow(e.get_num().get_si());
  const long p = e.get_num().get_si();
  const long q = e.get_den().get_si();
  return root(base, static_cast<int>(q)).pow(p);
}

// ---------------------------------------------------------------- queries

namespace {

void collect_into(const Poly& p, bool nested, std::vector<Atom>& out);

void collect_into(const Expr& e, bool nested, std::vector<Atom>& out) {
  collect_into(e.num(), nested, out);
  collect_into(e.den(), nested, out);
}

void collect_into(const Poly& p, bool nested, std::vector<Atom>& out) {
  for (const auto& a : p.atoms()) {
    out.push_back(a);
    if (!nested) continue;
    for (const auto& arg : a.args()) collect_into(arg, nested, out);
    if (a.kind() == AtomKind::Defined) {
      for (const auto& c : a.relation()) collect_into(c, nested, out);
    }
  }
}

}  // namespace

std::vector<Atom> collect_atoms(const Expr& e, bool nested) {
  std::vector<Atom> out;
  collect_into(e, nested, out);
  std::sort(out.begin(), out.end(), AtomLess());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool contains_atom(const Expr& e, const Atom& a) {
  const auto atoms = collect_atoms(e, true);
  return std::binary_search(atoms.begin(), atoms.end(), a, AtomLess());
}

MonomialFactorization factor_monomial(const Expr& e) {
  if (e.is_zero()) return {Rational(0), Expr(1), Expr()};
  Rational s;
  const Poly prim = unit_normal(e.num(), &s);
  const Monomial m = prim.monomial_content();
  MonomialFactorization f;
  f.content = 1 / s;
  f.monomial = Expr::polynomial(Poly::from_monomial(m));
  f.primitive = Expr::fraction(prim.divided_by(m), e.den());
  return f;
}

}  // namespace symred
