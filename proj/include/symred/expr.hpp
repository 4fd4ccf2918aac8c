#pragma once

#include <gmpxx.h>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "symred/multi_index.hpp"

namespace symred {

using Rational = mpq_class;

class Expr;
struct AtomNode;

/// Atom kinds, listed in canonical order.
enum class AtomKind : int { Indep, Param, Jet, Func, Exp, Ln, Root, Defined };

/// Raised when normalization would divide by a symbolically zero denominator.
class DivisionByZero : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An indivisible coordinate of the rational normal form. Transcendental atoms
/// (exp, ln, function applications, roots) are keyed by their normalized
/// arguments; named atoms are keyed by their declaration index.
class Atom {
 public:
  static Atom indep(int index, std::string name);
  static Atom param(int index, std::string name);
  static Atom jet(int dep, std::string name, MultiIndex mi);
  static Atom func(int index, std::string name, std::vector<int> orders, std::vector<Expr> args);
  /// Named atom with relation a^d = sum_k relation[k] * a^k (d = relation.size()).
  static Atom defined(int index, std::string name, std::vector<Expr> relation);
  // Raw constructors without simplification; prefer symred::exp / ln / root.
  static Atom exp_of(const Expr& arg);
  static Atom ln_of(const Expr& arg);
  static Atom root_of(const Expr& base, int degree);

  AtomKind kind() const;
  int index() const;
  const std::string& name() const;
  const MultiIndex& multi_index() const;
  const std::vector<int>& orders() const;
  const std::vector<Expr>& args() const;
  const Expr& arg() const;
  /// Degree of the algebraic relation (0 when the atom is free).
  int relation_degree() const;
  const std::vector<Expr>& relation() const;
  /// True when the relation is a^d = c_0.
  bool is_pure_radical() const;

  bool has_args() const;
  Atom with_args(std::vector<Expr> args) const;
  Atom with_orders(std::vector<int> orders) const;
  Atom with_multi_index(MultiIndex mi) const;

  friend int compare(const Atom& a, const Atom& b);
  friend bool operator==(const Atom& a, const Atom& b) { return compare(a, b) == 0; }
  friend bool operator<(const Atom& a, const Atom& b) { return compare(a, b) < 0; }

 private:
  explicit Atom(std::shared_ptr<const AtomNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const AtomNode> node_;
};

struct AtomLess {
  bool operator()(const Atom& a, const Atom& b) const { return compare(a, b) < 0; }
};

/// Product of atoms with positive integer exponents, sorted by atom order.
class Monomial {
 public:
  using Factor = std::pair<Atom, int>;

  Monomial() = default;
  static Monomial of(const Atom& a, int exponent = 1);

  const std::vector<Factor>& factors() const { return factors_; }
  bool empty() const { return factors_.empty(); }
  int degree() const { return degree_; }
  int degree_in(const Atom& a) const;

  Monomial operator*(const Monomial& other) const;
  std::optional<Monomial> divide(const Monomial& other) const;
  Monomial without(const Atom& a) const;
  static Monomial gcd(const Monomial& a, const Monomial& b);

  friend int compare(const Monomial& a, const Monomial& b);
  friend bool operator==(const Monomial& a, const Monomial& b) { return compare(a, b) == 0; }

 private:
  explicit Monomial(std::vector<Factor> factors);
  std::vector<Factor> factors_;
  int degree_ = 0;
};

struct MonomialLess {
  bool operator()(const Monomial& a, const Monomial& b) const { return compare(a, b) < 0; }
};

/// Sparse multivariate polynomial with rational coefficients over atoms. Pure
/// ring arithmetic: no relation reduction or exp merging happens here.
class Poly {
 public:
  struct Term {
    Monomial mono;
    Rational coef;
  };

  Poly() = default;
  Poly(const Rational& c);  // NOLINT(google-explicit-constructor)
  Poly(long c) : Poly(Rational(c)) {}  // NOLINT(google-explicit-constructor)
  static Poly from_monomial(const Monomial& m, const Rational& c = 1);
  static Poly from_atom(const Atom& a) { return from_monomial(Monomial::of(a)); }
  /// Builds from unsorted terms, merging duplicates and dropping zeros.
  static Poly from_terms(std::vector<Term> terms);

  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  std::optional<Rational> constant() const;
  bool is_one() const;
  /// Largest term in monomial order; poly must be nonzero.
  const Term& leading() const { return terms_.back(); }

  Poly operator-() const;
  friend Poly operator+(const Poly& a, const Poly& b);
  friend Poly operator-(const Poly& a, const Poly& b);
  friend Poly operator*(const Poly& a, const Poly& b);
  Poly scaled(const Rational& c) const;
  Poly times(const Monomial& m) const;
  Poly pow(int k) const;

  /// Top-level atoms, sorted and unique.
  std::vector<Atom> atoms() const;
  std::optional<Atom> max_atom() const;
  int degree_in(const Atom& a) const;
  /// Coefficients c_k with p = sum_k c_k a^k.
  std::vector<Poly> coefficients_in(const Atom& a) const;
  /// Formal partial derivative treating atoms as independent.
  Poly partial(const Atom& a) const;
  Monomial monomial_content() const;
  /// Divides every term by m (which must divide each monomial).
  Poly divided_by(const Monomial& m) const;

  friend int compare(const Poly& a, const Poly& b);
  friend bool operator==(const Poly& a, const Poly& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Poly& a, const Poly& b) { return compare(a, b) != 0; }

 private:
  std::vector<Term> terms_;  // ascending monomial order, nonzero coefficients
};

/// Exact quotient a / b, or nullopt when b does not divide a.
std::optional<Poly> exact_divide(const Poly& a, const Poly& b);
/// Scales p to integer coefficients with unit content and positive leading
/// coefficient. If factor is given, receives the scale s with result = s * p.
Poly unit_normal(const Poly& p, Rational* factor = nullptr);
/// Greatest common divisor over Q, unit-normalized.
Poly gcd(const Poly& a, const Poly& b);

/// Canonical rational function over atoms: num/den with gcd(num, den) = 1,
/// den unit-normalized, exp atoms merged and relation atoms reduced.
class Expr {
 public:
  Expr();
  Expr(long c);  // NOLINT(google-explicit-constructor)
  Expr(int c) : Expr(static_cast<long>(c)) {}  // NOLINT(google-explicit-constructor)
  Expr(const Rational& c);  // NOLINT(google-explicit-constructor)
  explicit Expr(const Atom& a);

  /// Normalizes num/den. Throws DivisionByZero if den is symbolically zero.
  static Expr fraction(Poly num, Poly den);
  static Expr polynomial(Poly p) { return fraction(std::move(p), Poly(1)); }

  const Poly& num() const;
  const Poly& den() const;

  bool is_zero() const { return num().is_zero(); }
  bool is_constant() const { return num().is_constant() && den().is_constant(); }
  std::optional<Rational> constant() const;
  bool is_polynomial() const { return den().is_one(); }
  /// The atom itself if this expression is exactly one atom.
  std::optional<Atom> as_atom() const;

  Expr operator-() const;
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  Expr& operator+=(const Expr& b) { return *this = *this + b; }
  Expr& operator-=(const Expr& b) { return *this = *this - b; }
  Expr& operator*=(const Expr& b) { return *this = *this * b; }
  Expr pow(long k) const;
  Expr inverse() const;

  friend int compare(const Expr& a, const Expr& b);
  friend bool operator==(const Expr& a, const Expr& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Expr& a, const Expr& b) { return compare(a, b) != 0; }

  struct Rep;  // shared immutable num/den pair

 private:
  explicit Expr(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  static Expr raw(Poly num, Poly den);
  std::shared_ptr<const Rep> rep_;
};

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

Expr exp(const Expr& arg);
/// ln with the optional ln(exp(v)) -> v fold.
Expr ln(const Expr& arg, bool fold_exp = true);
/// Principal q-th root, q >= 2.
Expr root(const Expr& base, int degree);
/// base^e for rational e; non-integer exponents go through root atoms.
Expr pow(const Expr& base, const Rational& e);

/// Canonical form. Expressions are always stored normalized, so this is the
/// identity; it exists as the named entry point of the normal-form contract.
inline Expr normalize(const Expr& e) { return e; }
inline bool is_zero(const Expr& e) { return e.is_zero(); }

/// Atoms of e; with nested = true also atoms occurring inside arguments and
/// relations of other atoms. Sorted, unique.
std::vector<Atom> collect_atoms(const Expr& e, bool nested = true);
bool contains_atom(const Expr& e, const Atom& a);

/// Split of a nonzero expression as content * monomial * primitive.
struct MonomialFactorization {
  Rational content;
  Expr monomial;
  Expr primitive;
};
MonomialFactorization factor_monomial(const Expr& e);

}  // namespace symred
