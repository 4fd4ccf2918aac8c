#include <algorithm>
#include <map>

#include "symred/expr.hpp"

namespace symred {

// ---------------------------------------------------------------- Monomial

Monomial::Monomial(std::vector<Factor> factors) : factors_(std::move(factors)) {
  for (const auto& [a, k] : factors_) degree_ += k;
}

Monomial Monomial::of(const Atom& a, int exponent) {
  if (exponent < 0) throw std::invalid_argument("monomial exponents must be non-negative");
  if (exponent == 0) return {};
  return Monomial({{a, exponent}});
}

int Monomial::degree_in(const Atom& a) const {
  for (const auto& [b, k] : factors_) {
    if (b == a) return k;
  }
  return 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  std::vector<Factor> out;
  out.reserve(factors_.size() + other.factors_.size());
  auto i = factors_.begin();
  auto j = other.factors_.begin();
  while (i != factors_.end() || j != other.factors_.end()) {
    if (j == other.factors_.end()) {
      out.push_back(*i++);
    } else if (i == factors_.end()) {
      out.push_back(*j++);
    } else {
      const int c = compare(i->first, j->first);
      if (c < 0) {
        out.push_back(*i++);
      } else if (c > 0) {
        out.push_back(*j++);
      } else {
        out.emplace_back(i->first, i->second + j->second);
        ++i;
        ++j;
      }
    }
  }
  return Monomial(std::move(out));
}

std::optional<Monomial> Monomial::divide(const Monomial& other) const {
  std::vector<Factor> out;
  auto j = other.factors_.begin();
  for (const auto& f : factors_) {
    if (j != other.factors_.end() && compare(j->first, f.first) < 0) return std::nullopt;
    if (j != other.factors_.end() && j->first == f.first) {
      const int k = f.second - j->second;
      if (k < 0) return std::nullopt;
      if (k > 0) out.emplace_back(f.first, k);
      ++j;
    } else {
      out.push_back(f);
    }
  }
  if (j != other.factors_.end()) return std::nullopt;
  return Monomial(std::move(out));
}

Monomial Monomial::without(const Atom& a) const {
  std::vector<Factor> out;
  for (const auto& f : factors_) {
    if (!(f.first == a)) out.push_back(f);
  }
  return Monomial(std::move(out));
}

Monomial Monomial::gcd(const Monomial& a, const Monomial& b) {
  std::vector<Factor> out;
  auto j = b.factors_.begin();
  for (const auto& f : a.factors_) {
    while (j != b.factors_.end() && compare(j->first, f.first) < 0) ++j;
    if (j == b.factors_.end()) break;
    if (j->first == f.first) out.emplace_back(f.first, std::min(f.second, j->second));
  }
  return Monomial(std::move(out));
}

int compare(const Monomial& a, const Monomial& b) {
  if (a.degree_ != b.degree_) return a.degree_ < b.degree_ ? -1 : 1;
  // Same total degree: compare from the highest atom down.
  auto i = a.factors_.rbegin();
  auto j = b.factors_.rbegin();
  for (; i != a.factors_.rend() && j != b.factors_.rend(); ++i, ++j) {
    const int c = compare(i->first, j->first);
    if (c != 0) return c;
    if (i->second != j->second) return i->second < j->second ? -1 : 1;
  }
  if (i == a.factors_.rend() && j == b.factors_.rend()) return 0;
  return i == a.factors_.rend() ? -1 : 1;
}

// -------------------------------------------------------------------- Poly

Poly::Poly(const Rational& c) {
  if (c != 0) terms_.push_back({Monomial(), c});
}

Poly Poly::from_monomial(const Monomial& m, const Rational& c) {
  Poly p;
  if (c != 0) p.terms_.push_back({m, c});
  return p;
}

Poly Poly::from_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return compare(a.mono, b.mono) < 0; });
  Poly p;
  for (auto& t : terms) {
    if (!p.terms_.empty() && p.terms_.back().mono == t.mono) {
      p.terms_.back().coef += t.coef;
    } else {
      if (!p.terms_.empty() && p.terms_.back().coef == 0) p.terms_.pop_back();
      p.terms_.push_back(std::move(t));
    }
  }
  if (!p.terms_.empty() && p.terms_.back().coef == 0) p.terms_.pop_back();
  return p;
}

bool Poly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_[0].mono.empty());
}

std::optional<Rational> Poly::constant() const {
  if (terms_.empty()) return Rational(0);
  if (terms_.size() == 1 && terms_[0].mono.empty()) return terms_[0].coef;
  return std::nullopt;
}

bool Poly::is_one() const {
  return terms_.size() == 1 && terms_[0].mono.empty() && terms_[0].coef == 1;
}

Poly Poly::operator-() const {
  Poly p = *this;
  for (auto& t : p.terms_) t.coef = -t.coef;
  return p;
}

namespace {

Poly merge(const Poly& a, const Poly& b, bool subtract) {
  std::vector<Poly::Term> out;
  out.reserve(a.size() + b.size());
  auto i = a.terms().begin();
  auto j = b.terms().begin();
  auto push_b = [&](const Poly::Term& t) {
    out.push_back(subtract ? Poly::Term{t.mono, -t.coef} : t);
  };
  while (i != a.terms().end() || j != b.terms().end()) {
    if (j == b.terms().end()) {
      out.push_back(*i++);
    } else if (i == a.terms().end()) {
      push_b(*j++);
    } else {
      const int c = compare(i->mono, j->mono);
      if (c < 0) {
        out.push_back(*i++);
      } else if (c > 0) {
        push_b(*j++);
      } else {
        Rational s = subtract ? Rational(i->coef - j->coef) : Rational(i->coef + j->coef);
        if (s != 0) out.push_back({i->mono, s});
        ++i;
        ++j;
      }
    }
  }
  return Poly::from_terms(std::move(out));
}

}  // namespace

Poly operator+(const Poly& a, const Poly& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return merge(a, b, false);
}

Poly operator-(const Poly& a, const Poly& b) {
  if (b.is_zero()) return a;
  return merge(a, b, true);
}

Poly operator*(const Poly& a, const Poly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  if (auto c = a.constant()) return b.scaled(*c);
  if (auto c = b.constant()) return a.scaled(*c);
  std::map<Monomial, Rational, MonomialLess> acc;
  for (const auto& s : a.terms()) {
    for (const auto& t : b.terms()) {
      acc[s.mono * t.mono] += s.coef * t.coef;
    }
  }
  std::vector<Poly::Term> out;
  out.reserve(acc.size());
  for (auto& [m, c] : acc) {
    if (c != 0) out.push_back({m, c});
  }
  return Poly::from_terms(std::move(out));
}

Poly Poly::scaled(const Rational& c) const {
  if (c == 0) return {};
  Poly p = *this;
  for (auto& t : p.terms_) t.coef *= c;
  return p;
}

Poly Poly::times(const Monomial& m) const {
  Poly p = *this;
  for (auto& t : p.terms_) t.mono = t.mono * m;
  return p;  // order is preserved by multiplication with a monomial
}

Poly Poly::pow(int k) const {
  if (k < 0) throw std::invalid_argument("negative polynomial power");
  Poly result(1);
  Poly base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

std::vector<Atom> Poly::atoms() const {
  std::vector<Atom> out;
  for (const auto& t : terms_) {
    for (const auto& [a, k] : t.mono.factors()) out.push_back(a);
  }
  std::sort(out.begin(), out.end(), AtomLess());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<Atom> Poly::max_atom() const {
  std::optional<Atom> best;
  for (const auto& t : terms_) {
    if (!t.mono.empty()) {
      const Atom& a = t.mono.factors().back().first;
      if (!best || compare(*best, a) < 0) best = a;
    }
  }
  return best;
}

int Poly::degree_in(const Atom& a) const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, t.mono.degree_in(a));
  return d;
}

std::vector<Poly> Poly::coefficients_in(const Atom& a) const {
  std::vector<std::vector<Term>> buckets(static_cast<std::size_t>(degree_in(a)) + 1);
  for (const auto& t : terms_) {
    const int k = t.mono.degree_in(a);
    buckets[static_cast<std::size_t>(k)].push_back({t.mono.without(a), t.coef});
  }
  std::vector<Poly> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.push_back(from_terms(std::move(b)));
  return out;
}

Poly Poly::partial(const Atom& a) const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    const int k = t.mono.degree_in(a);
    if (k == 0) continue;
    out.push_back({t.mono.without(a) * Monomial::of(a, k - 1), t.coef * k});
  }
  return from_terms(std::move(out));
}

Monomial Poly::monomial_content() const {
  if (terms_.empty()) return {};
  Monomial g = terms_.front().mono;
  for (const auto& t : terms_) {
    g = Monomial::gcd(g, t.mono);
    if (g.empty()) break;
  }
  return g;
}

Poly Poly::divided_by(const Monomial& m) const {
  if (m.empty()) return *this;
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    auto q = t.mono.divide(m);
    if (!q) throw std::logic_error("monomial does not divide polynomial");
    out.push_back({*q, t.coef});
  }
  return from_terms(std::move(out));
}

int compare(const Poly& a, const Poly& b) {
  const auto& x = a.terms();
  const auto& y = b.terms();
  auto i = x.rbegin();
  auto j = y.rbegin();
  for (; i != x.rend() && j != y.rend(); ++i, ++j) {
    const int c = compare(i->mono, j->mono);
    if (c != 0) return c;
    if (i->coef != j->coef) return i->coef < j->coef ? -1 : 1;
  }
  if (i == x.rend() && j == y.rend()) return 0;
  return i == x.rend() ? -1 : 1;
}

// -------------------------------------------------------- division and gcd

namespace {

Poly leading_coefficient(const Poly& p, const Atom& v) { return p.coefficients_in(v).back(); }

Poly content_in(const Poly& p, const Atom& v) {
  Poly g;
  for (const auto& c : p.coefficients_in(v)) {
    if (c.is_zero()) continue;
    g = gcd(g, c);
    if (g.is_one()) break;
  }
  return g;
}

Poly pseudo_remainder(Poly a, const Poly& b, const Atom& v) {
  const int db = b.degree_in(v);
  const Poly lb = leading_coefficient(b, v);
  while (!a.is_zero()) {
    const int da = a.degree_in(v);
    if (da < db) break;
    const Poly la = leading_coefficient(a, v);
    a = a * lb - (la * b).times(Monomial::of(v, da - db));
    a = unit_normal(a);
  }
  return a;
}

}  // namespace

std::optional<Poly> exact_divide(const Poly& a, const Poly& b) {
  if (b.is_zero()) throw std::domain_error("polynomial division by zero");
  if (a.is_zero()) return Poly();
  if (auto c = b.constant()) return a.scaled(1 / *c);
  if (b.size() == 1) {
    std::vector<Poly::Term> terms;
    for (const auto& t : a.terms()) {
      auto q = t.mono.divide(b.leading().mono);
      if (!q) return std::nullopt;
      terms.push_back({*q, t.coef / b.leading().coef});
    }
    return Poly::from_terms(std::move(terms));
  }
  const Atom v = *b.max_atom();
  const int db = b.degree_in(v);
  const Poly lb = leading_coefficient(b, v);
  Poly q;
  Poly r = a;
  while (!r.is_zero()) {
    const int dr = r.degree_in(v);
    if (dr < db) return std::nullopt;
    auto qc = exact_divide(leading_coefficient(r, v), lb);
    if (!qc) return std::nullopt;
    const Poly term = qc->times(Monomial::of(v, dr - db));
    q = q + term;
    r = r - term * b;
  }
  return q;
}

Poly unit_normal(const Poly& p, Rational* factor) {
  if (p.is_zero()) {
    if (factor) *factor = 1;
    return p;
  }
  mpz_class num_gcd = 0;
  mpz_class den_lcm = 1;
  for (const auto& t : p.terms()) {
    mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), t.coef.get_num_mpz_t());
    mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), t.coef.get_den_mpz_t());
  }
  Rational s(den_lcm, num_gcd);
  s.canonicalize();
  if (p.leading().coef < 0) s = -s;
  if (factor) *factor = s;
  if (s == 1) return p;
  return p.scaled(s);
}

namespace {

mpz_class max_norm(const Poly& p) {
  mpz_class m = 0;
  for (const auto& t : p.terms()) {
    const mpz_class c = abs(t.coef.get_num());
    if (c > m) m = c;
  }
  return m;
}

/// p with atom v replaced by the integer x.
Poly evaluate_at(const Poly& p, const Atom& v, const mpz_class& x) {
  std::vector<Poly::Term> out;
  out.reserve(p.size());
  for (const auto& t : p.terms()) {
    mpz_class f;
    mpz_pow_ui(f.get_mpz_t(), x.get_mpz_t(), static_cast<unsigned long>(t.mono.degree_in(v)));
    out.push_back({t.mono.without(v), t.coef * Rational(f)});
  }
  return Poly::from_terms(std::move(out));
}

/// Inverse of evaluate_at for polynomials with coefficients bounded by x/2:
/// reads h as digits in the symmetric base-x expansion.
Poly interpolate(Poly h, const Atom& v, const mpz_class& x) {
  Poly out;
  const mpz_class half = x / 2;
  for (int i = 0; !h.is_zero(); ++i) {
    if (i > 4096) return Poly();
    std::vector<Poly::Term> digit;
    for (const auto& t : h.terms()) {
      mpz_class r;
      mpz_fdiv_r(r.get_mpz_t(), t.coef.get_num_mpz_t(), x.get_mpz_t());
      if (r > half) r -= x;
      if (r != 0) digit.push_back({t.mono, Rational(r)});
    }
    const Poly g = Poly::from_terms(std::move(digit));
    out = out + g.times(Monomial::of(v, i));
    h = (h - g).scaled(Rational(1) / Rational(x));
  }
  return out;
}

bool integral(const Poly& p) {
  for (const auto& t : p.terms()) {
    if (t.coef.get_den() != 1) return false;
  }
  return true;
}

/// Heuristic gcd of integer polynomials: evaluate one variable at a large
/// integer, recurse, interpolate and confirm by trial division.
std::optional<Poly> heuristic_gcd(const Poly& f, const Poly& g, int depth) {
  if (f.is_zero()) return unit_normal(g);
  if (g.is_zero()) return unit_normal(f);
  if (f.is_constant() && g.is_constant()) {
    mpz_class r;
    mpz_gcd(r.get_mpz_t(), f.terms().front().coef.get_num_mpz_t(), g.terms().front().coef.get_num_mpz_t());
    return Poly(Rational(r));
  }
  if (depth > 24) return std::nullopt;
  auto vf = f.max_atom();
  auto vg = g.max_atom();
  const Atom v = !vf ? *vg : !vg ? *vf : (compare(*vf, *vg) < 0 ? *vg : *vf);
  const mpz_class nf = max_norm(f), ng = max_norm(g);
  const mpz_class b = 2 * (nf < ng ? nf : ng) + 29;
  mpz_class x = sqrt(b) * 99;
  if (b < x) x = b;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const Poly ff = evaluate_at(f, v, x);
    const Poly gg = evaluate_at(g, v, x);
    if (!ff.is_zero() && !gg.is_zero()) {
      auto h = heuristic_gcd(ff, gg, depth + 1);
      if (!h) return std::nullopt;
      Poly cand = interpolate(*h, v, x);
      if (!cand.is_zero()) {
        cand = unit_normal(cand);
        if (!integral(cand)) return std::nullopt;
        if (exact_divide(f, cand) && exact_divide(g, cand)) {
          // Integer content of the true gcd is that of gcd(cont f, cont g).
          mpz_class cf = 0, cg = 0;
          for (const auto& t : f.terms()) mpz_gcd(cf.get_mpz_t(), cf.get_mpz_t(), t.coef.get_num_mpz_t());
          for (const auto& t : g.terms()) mpz_gcd(cg.get_mpz_t(), cg.get_mpz_t(), t.coef.get_num_mpz_t());
          mpz_class c;
          mpz_gcd(c.get_mpz_t(), cf.get_mpz_t(), cg.get_mpz_t());
          return cand.scaled(Rational(c));
        }
      }
    }
    mpz_class r = sqrt(sqrt(x));
    x = x * 73794 * r / 27011 + 1;
  }
  return std::nullopt;
}

}  // namespace

Poly gcd(const Poly& a, const Poly& b) {
  if (a.is_zero()) return unit_normal(b);
  if (b.is_zero()) return unit_normal(a);
  if (a.is_constant() || b.is_constant()) return Poly(1);
  const Monomial ma = a.monomial_content();
  const Monomial mb = b.monomial_content();
  const Monomial gm = Monomial::gcd(ma, mb);
  if (a.size() == 1 || b.size() == 1) return Poly::from_monomial(gm);
  const Poly pa = a.divided_by(ma);
  const Poly pb = b.divided_by(mb);
  if (pa.is_constant() || pb.is_constant()) return Poly::from_monomial(gm);
  if (pa == pb || pa == -pb) return unit_normal(pa).times(gm);

  if (auto h = heuristic_gcd(unit_normal(pa), unit_normal(pb), 0)) return unit_normal(h->times(gm));

  const Atom va = *pa.max_atom();
  const Atom vb = *pb.max_atom();
  const Atom v = compare(va, vb) < 0 ? vb : va;
  const int da = pa.degree_in(v);
  const int db = pb.degree_in(v);
  Poly g;
  if (da == 0) {
    g = gcd(pa, content_in(pb, v));
  } else if (db == 0) {
    g = gcd(content_in(pa, v), pb);
  } else {
    const Poly ca = content_in(pa, v);
    const Poly cb = content_in(pb, v);
    const Poly gc = gcd(ca, cb);
    Poly f1 = *exact_divide(pa, ca);
    Poly f2 = *exact_divide(pb, cb);
    if (f1.degree_in(v) < f2.degree_in(v)) std::swap(f1, f2);
    while (!f2.is_zero() && f2.degree_in(v) > 0) {
      Poly r = pseudo_remainder(f1, f2, v);
      f1 = std::move(f2);
      if (r.is_zero()) {
        f2 = Poly();
      } else {
        f2 = *exact_divide(r, content_in(r, v));
      }
    }
    Poly prim = f2.is_zero() ? *exact_divide(f1, content_in(f1, v)) : Poly(1);
    g = gc * prim;
  }
  return unit_normal(g.times(gm));
}

}  // namespace symred
