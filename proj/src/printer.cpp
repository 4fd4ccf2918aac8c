#include <algorithm>
#include <sstream>

#include "symred/context.hpp"

namespace symred {

namespace {

int print_rank(AtomKind k) {
  switch (k) {
    case AtomKind::Indep: return 0;
    case AtomKind::Param: return 1;
    case AtomKind::Exp: return 2;
    case AtomKind::Ln: return 3;
    case AtomKind::Func: return 4;
    case AtomKind::Jet: return 5;
    case AtomKind::Root: return 6;
    case AtomKind::Defined: return 7;
  }
  return 8;
}

std::string rational_str(const Rational& q) { return q.get_str(); }

std::string factor_str(const Atom& a, int k, const Context& ctx) {
  if (a.kind() == AtomKind::Root) {
    std::string r = "(" + to_string(a.arg(), ctx) + ")^(1/" + std::to_string(a.relation_degree()) + ")";
    return k == 1 ? r : "(" + r + ")^" + std::to_string(k);
  }
  std::string s = to_string(a, ctx);
  return k == 1 ? s : s + "^" + std::to_string(k);
}

std::string monomial_str(const Monomial& m, const Context& ctx) {
  std::vector<Monomial::Factor> fs = m.factors();
  std::stable_sort(fs.begin(), fs.end(), [](const auto& x, const auto& y) {
    return print_rank(x.first.kind()) < print_rank(y.first.kind());
  });
  std::string out;
  for (const auto& [a, k] : fs) {
    if (!out.empty()) out += "*";
    out += factor_str(a, k, ctx);
  }
  return out;
}

std::string poly_str(const Poly& p, const Context& ctx) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : p.terms()) {
    Rational c = t.coef;
    const bool negative = c < 0;
    if (negative) c = -c;
    std::string body;
    if (t.mono.empty()) {
      body = rational_str(c);
    } else if (c == 1) {
      body = monomial_str(t.mono, ctx);
    } else {
      body = rational_str(c) + "*" + monomial_str(t.mono, ctx);
    }
    if (first) {
      out = negative ? "-" + body : body;
      first = false;
    } else {
      out += negative ? " - " : " + ";
      out += body;
    }
  }
  return out;
}

bool single_factor(const Poly& p) {
  if (p.size() != 1) return false;
  const auto& t = p.leading();
  if (t.mono.empty()) return t.coef.get_den() == 1 && t.coef > 0;
  return t.coef == 1 && t.mono.factors().size() == 1;
}

}  // namespace

std::string to_string(const MultiIndex& mi, const Context& ctx) {
  std::string out;
  for (std::size_t v = 0; v < mi.size(); ++v) {
    for (int k = 0; k < mi[v]; ++k) {
      if (!out.empty()) out += ",";
      out += v < ctx.indep_count() ? ctx.indep_name(static_cast<int>(v)) : "?" + std::to_string(v);
    }
  }
  return out;
}

std::string to_string(const Atom& a, const Context& ctx) {
  switch (a.kind()) {
    case AtomKind::Indep:
    case AtomKind::Param:
    case AtomKind::Defined:
      return a.name();
    case AtomKind::Jet:
      if (a.multi_index().empty()) return a.name();
      return a.name() + "[" + to_string(a.multi_index(), ctx) + "]";
    case AtomKind::Func: {
      std::string args;
      for (const auto& e : a.args()) {
        if (!args.empty()) args += ", ";
        args += to_string(e, ctx);
      }
      bool derivative = false;
      for (int k : a.orders()) derivative = derivative || k != 0;
      if (!derivative) return a.name() + "(" + args + ")";
      std::string head = "d(" + a.name();
      for (int k : a.orders()) head += "," + std::to_string(k);
      return head + ")(" + args + ")";
    }
    case AtomKind::Exp:
      return "exp(" + to_string(a.arg(), ctx) + ")";
    case AtomKind::Ln:
      return "ln(" + to_string(a.arg(), ctx) + ")";
    case AtomKind::Root:
      return "(" + to_string(a.arg(), ctx) + ")^(1/" + std::to_string(a.relation_degree()) + ")";
  }
  return "?";
}

std::string to_string(const Expr& e, const Context& ctx) {
  if (e.den().is_one()) return poly_str(e.num(), ctx);
  std::string d = poly_str(e.den(), ctx);
  if (auto c = e.num().constant(); c && c->get_den() != 1) {
    if (e.den().size() > 1) d = "(" + d + ")";
    return c->get_num().get_str() + "/(" + c->get_den().get_str() + "*" + d + ")";
  }
  std::string n = poly_str(e.num(), ctx);
  if (e.num().size() > 1) n = "(" + n + ")";
  if (!single_factor(e.den())) d = "(" + d + ")";
  return n + "/" + d;
}

}  // namespace symred
