#pragma once

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "symred/reduction.hpp"

namespace symred {

/// Evaluation failures, guard violations and non-finite states.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value of a function symbol at numeric arguments, for given derivative orders.
using NumFunction = std::function<double(const std::vector<double>& args, const std::vector<int>& orders)>;

/// Numeric values of atoms. Function applications are looked up as atoms first
/// (e.g. phi1(t) on a trajectory), then through functions.
struct NumericEnv {
  std::map<Atom, double, AtomLess> values;
  std::map<int, NumFunction> functions;
};

/// Evaluates e in double precision. Relation atoms without an explicit value
/// take the principal real root of a pure-radical relation.
double evaluate(const Expr& e, const NumericEnv& env);

/// expr >= min must hold at every evaluated point.
struct Guard {
  Expr expr;
  double min = 0;
  std::string text;
};

void check_guards(const std::vector<Guard>& guards, const NumericEnv& env);

/// phi_i' = rhs_i(t, phi) obtained by solving reduced equations for the first derivatives.
struct ExplicitSystem {
  Atom time;
  std::vector<Atom> state;
  std::vector<Atom> rates;
  std::vector<Expr> rhs;
};

ExplicitSystem explicit_form(const std::vector<Expr>& equations, const std::vector<int>& funcs, int time_var,
                             const Context& ctx);

struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> y;
  std::vector<std::vector<double>> dy;
};

/// Classical fixed-step RK4 on [t0, t1]; the step must divide the interval.
Trajectory integrate_reduced(const ExplicitSystem& sys, const NumericEnv& env, const std::vector<double>& y0,
                             double t0, double t1, double step);

/// Derivative of a state component at grid index k: five-point central
/// difference where the grid allows, otherwise the stored right-hand side.
double trajectory_rate(const Trajectory& tr, std::size_t k, std::size_t component);

/// Max |pde| for u = candidate at the given points, derivatives taken symbolically.
double residual_closed_form(const Expr& pde, int dep, const Expr& candidate, const std::vector<NumericEnv>& points,
                            const std::vector<Guard>& guards, const Context& ctx);

/// Max |pde| for u = ansatz with phi_i taken from a trajectory: at each grid
/// index in times and each value of the eliminated variable in xs.
double residual_trajectory(const Expr& pde, const Ansatz& a, const ExplicitSystem& sys, const Trajectory& tr,
                           const std::vector<std::size_t>& times, const std::vector<double>& xs,
                           const NumericEnv& base, const std::vector<Guard>& guards, const Context& ctx);

struct FdCheck {
  double symbolic = 0;
  double finite_difference = 0;
  double abs_diff = 0;
};

/// Central difference in atom a against its symbolic derivative (total
/// derivative for independent variables, diff_atom otherwise).
FdCheck fd_check(const Expr& e, const Atom& a, const NumericEnv& env, double h, const Context& ctx);

}  // namespace symred
