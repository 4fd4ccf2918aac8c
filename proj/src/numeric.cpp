#include "symred/numeric.hpp"

#include <cmath>

namespace symred {

namespace {

class Evaluator {
 public:
  explicit Evaluator(const NumericEnv& env) : env_(env) {}

  double of_expr(const Expr& e) {
    const double n = of_poly(e.num());
    if (e.den().is_one()) return n;
    const double d = of_poly(e.den());
    if (d == 0) throw NumericError("evaluation at a singular point (zero denominator)");
    return n / d;
  }

 private:
  double of_poly(const Poly& p) {
    double sum = 0;
    for (const auto& t : p.terms()) {
      double v = t.coef.get_d();
      for (const auto& [a, k] : t.mono.factors()) v *= std::pow(of_atom(a), k);
      sum += v;
    }
    return sum;
  }

  double of_atom(const Atom& a) {
    auto c = cache_.find(a);
    if (c != cache_.end()) return c->second;
    const double v = compute(a);
    if (!std::isfinite(v)) throw NumericError("non-finite value for atom '" + a.name() + "'");
    cache_.emplace(a, v);
    return v;
  }

  double root_of(double base, int degree, const std::string& what) {
    if (degree % 2 == 0) {
      if (base < 0) throw NumericError("relation of '" + what + "' has no real value (negative radicand)");
      return std::pow(base, 1.0 / degree);
    }
    return base < 0 ? -std::pow(-base, 1.0 / degree) : std::pow(base, 1.0 / degree);
  }

  double compute(const Atom& a) {
    auto it = env_.values.find(a);
    if (it != env_.values.end()) return it->second;
    switch (a.kind()) {
      case AtomKind::Exp:
        return std::exp(of_expr(a.arg()));
      case AtomKind::Ln: {
        const double x = of_expr(a.arg());
        if (x <= 0) throw NumericError("ln of a non-positive value");
        return std::log(x);
      }
      case AtomKind::Root:
        return root_of(of_expr(a.arg()), a.relation_degree(), a.name());
      case AtomKind::Defined:
        if (a.is_pure_radical()) return root_of(of_expr(a.relation()[0]), a.relation_degree(), a.name());
        throw NumericError("no numeric value for defined atom '" + a.name() + "'");
      case AtomKind::Func: {
        auto f = env_.functions.find(a.index());
        if (f == env_.functions.end()) throw NumericError("no numeric value for function '" + a.name() + "'");
        std::vector<double> args;
        for (const Expr& x : a.args()) args.push_back(of_expr(x));
        return f->second(args, a.orders());
      }
      default:
        throw NumericError("no numeric value for '" + a.name() + "'");
    }
  }

  const NumericEnv& env_;
  std::map<Atom, double, AtomLess> cache_;
};

}  // namespace

double evaluate(const Expr& e, const NumericEnv& env) {
  Evaluator ev(env);
  return ev.of_expr(e);
}

void check_guards(const std::vector<Guard>& guards, const NumericEnv& env) {
  for (const Guard& g : guards) {
    const double v = evaluate(g.expr, env);
    if (!(v >= g.min)) {
      throw NumericError("domain guard violated: " + g.text + " (value " + std::to_string(v) + ")");
    }
  }
}

ExplicitSystem explicit_form(const std::vector<Expr>& equations, const std::vector<int>& funcs, int time_var,
                             const Context& ctx) {
  ExplicitSystem sys{ctx.indep_atom(time_var), {}, {}, {}};
  const Expr t(sys.time);
  for (int f : funcs) {
    if (ctx.func(f).arity != 1) throw NumericError("reduced function '" + ctx.func(f).name + "' is not unary");
    sys.state.push_back(ctx.func_atom(f, {t}, {0}));
    sys.rates.push_back(ctx.func_atom(f, {t}, {1}));
  }
  const std::size_t n = funcs.size();
  if (equations.size() != n) {
    throw NumericError("reduced system has " + std::to_string(equations.size()) + " equation(s) for " +
                       std::to_string(n) + " unknown function(s); not in explicit form");
  }
  for (const Expr& eq : equations) {
    for (const Atom& a : collect_atoms(eq)) {
      if (a.kind() != AtomKind::Func) continue;
      for (int f : funcs) {
        if (a.index() != f) continue;
        if (a.orders()[0] > 1 || !(a.args()[0] == t)) {
          throw NumericError("reduced system contains " + to_string(a, ctx) + "; not first order in t");
        }
      }
    }
  }
  // Rows: coefficients of the rates, then the rate-free part.
  std::vector<std::vector<Expr>> m;
  Bindings zero;
  for (const Atom& r : sys.rates) zero.emplace(r, Expr());
  for (const Expr& eq : equations) {
    std::vector<Expr> row;
    for (const Atom& r : sys.rates) {
      Expr c = diff_atom(eq, r);
      for (const Atom& s : sys.rates) {
        if (contains_atom(c, s)) throw NumericError("reduced system is nonlinear in the derivatives");
      }
      row.push_back(c);
    }
    row.push_back(substitute(eq, zero));
    m.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && m[p][c].is_zero()) ++p;
    if (p == n) throw NumericError("reduced system cannot be solved for the first derivatives");
    std::swap(m[p], m[c]);
    const Expr lead = m[c][c];
    for (auto& x : m[c]) x = x / lead;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || m[r][c].is_zero()) continue;
      const Expr f = m[r][c];
      for (std::size_t k = 0; k <= n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  for (std::size_t i = 0; i < n; ++i) sys.rhs.push_back(-m[i][n]);
  return sys;
}

namespace {

std::vector<double> rates_at(const ExplicitSystem& sys, NumericEnv& env, double t, const std::vector<double>& y) {
  env.values[sys.time] = t;
  for (std::size_t i = 0; i < y.size(); ++i) env.values[sys.state[i]] = y[i];
  std::vector<double> out;
  for (const Expr& r : sys.rhs) {
    const double v = evaluate(r, env);
    if (!std::isfinite(v)) throw NumericError("non-finite state encountered during integration");
    out.push_back(v);
  }
  return out;
}

}  // namespace

Trajectory integrate_reduced(const ExplicitSystem& sys, const NumericEnv& base, const std::vector<double>& y0,
                             double t0, double t1, double step) {
  if (!(step > 0)) throw NumericError("integration step must be positive");
  if (y0.size() != sys.state.size()) throw NumericError("initial condition count does not match the system");
  const double count = (t1 - t0) / step;
  const long steps = std::lround(count);
  if (steps < 1 || std::abs(count - static_cast<double>(steps)) > 1e-9 * std::max(1.0, count)) {
    throw NumericError("integration step does not divide the interval");
  }
  NumericEnv env = base;
  Trajectory tr;
  std::vector<double> y = y0;
  auto axpy = [](const std::vector<double>& a, double s, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * b[i];
    return out;
  };
  for (long k = 0; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k) * step;
    const auto k1 = rates_at(sys, env, t, y);
    tr.t.push_back(t);
    tr.y.push_back(y);
    tr.dy.push_back(k1);
    if (k == steps) break;
    const auto k2 = rates_at(sys, env, t + step / 2, axpy(y, step / 2, k1));
    const auto k3 = rates_at(sys, env, t + step / 2, axpy(y, step / 2, k2));
    const auto k4 = rates_at(sys, env, t + step, axpy(y, step, k3));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += step / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return tr;
}

double trajectory_rate(const Trajectory& tr, std::size_t k, std::size_t i) {
  const std::size_t n = tr.t.size();
  if (k >= 2 && k + 2 < n) {
    const double h = tr.t[k + 1] - tr.t[k];
    return (tr.y[k - 2][i] - 8 * tr.y[k - 1][i] + 8 * tr.y[k + 1][i] - tr.y[k + 2][i]) / (12 * h);
  }
  return tr.dy.at(k)[i];
}

namespace {

/// Symbolic D_J(u) for every jet of dep in pde; the pde is then evaluated on
/// the numeric values of these derivatives.
Bindings jet_images(const Expr& pde, int dep, const Expr& u, const Context& ctx) {
  Bindings b;
  for (const Atom& a : collect_atoms(pde)) {
    if (a.kind() == AtomKind::Jet && a.index() == dep) b.emplace(a, total_derivative(u, a.multi_index(), ctx));
  }
  return b;
}

double pde_value(const Expr& pde, const Bindings& images, NumericEnv& env) {
  for (const auto& [jet, img] : images) env.values[jet] = evaluate(img, env);
  return evaluate(pde, env);
}

}  // namespace

double residual_closed_form(const Expr& pde, int dep, const Expr& candidate, const std::vector<NumericEnv>& points,
                            const std::vector<Guard>& guards, const Context& ctx) {
  const Bindings images = jet_images(pde, dep, candidate, ctx);
  double worst = 0;
  for (NumericEnv env : points) {
    check_guards(guards, env);
    worst = std::max(worst, std::abs(pde_value(pde, images, env)));
  }
  return worst;
}

double residual_trajectory(const Expr& pde, const Ansatz& a, const ExplicitSystem& sys, const Trajectory& tr,
                           const std::vector<std::size_t>& times, const std::vector<double>& xs,
                           const NumericEnv& base, const std::vector<Guard>& guards, const Context& ctx) {
  Bindings images;
  try {
    images = jet_images(pde, a.dep, a.F, ctx);
  } catch (const JetError& e) {
    throw ReductionError(std::string("ansatz '") + a.name + "' does not close under differentiation: " + e.what());
  }
  const Atom x = ctx.indep_atom(a.eliminated);
  NumericEnv env = base;
  double worst = 0;
  for (std::size_t k : times) {
    env.values[sys.time] = tr.t.at(k);
    for (std::size_t i = 0; i < sys.state.size(); ++i) {
      env.values[sys.state[i]] = tr.y[k][i];
      env.values[sys.rates[i]] = trajectory_rate(tr, k, i);
    }
    for (double xv : xs) {
      env.values[x] = xv;
      check_guards(guards, env);
      worst = std::max(worst, std::abs(pde_value(pde, images, env)));
    }
  }
  return worst;
}

FdCheck fd_check(const Expr& e, const Atom& a, const NumericEnv& env, double h, const Context& ctx) {
  const Expr d = a.kind() == AtomKind::Indep ? total_derivative(e, a.index(), ctx) : diff_atom(e, a);
  auto it = env.values.find(a);
  if (it == env.values.end()) throw NumericError("fd_check needs a value for '" + a.name() + "'");
  FdCheck out;
  out.symbolic = evaluate(d, env);
  NumericEnv shifted = env;
  shifted.values[a] = it->second + h;
  const double plus = evaluate(e, shifted);
  shifted.values[a] = it->second - h;
  const double minus = evaluate(e, shifted);
  out.finite_difference = (plus - minus) / (2 * h);
  out.abs_diff = std::abs(out.symbolic - out.finite_difference);
  return out;
}

}  // namespace symred
