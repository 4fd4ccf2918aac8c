#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symred/jet.hpp"

namespace symred {

/// Generalized vector field eta * d/du acting on dependent variable dep.
struct EvolutionaryField {
  std::string name;
  Expr eta;
  int dep = 0;
};

/// Point field xi_j d/dx_j + eta d/du; xi has one entry per independent variable.
struct PointField {
  std::string name;
  std::vector<Expr> xi;
  Expr eta;
  int dep = 0;
};

/// Highest derivative order of dep occurring in e (0 if only dep itself, -1 if absent).
int jet_order(const Expr& e, int dep);

/// pr Q(e) = sum_J D_J(eta) * de/du_J over the jet variables of Q's dependent variable.
Expr prolong_apply(const EvolutionaryField& Q, const Expr& e, const Context& ctx);

struct DefectReport {
  Expr defect;
  bool is_invariant = false;
  /// Filled when the defect is nonzero.
  std::optional<MonomialFactorization> factors;
};

/// Defect of the equation delta = 0 under Q, reduced modulo cs.
DefectReport invariance_defect(const Expr& delta, const EvolutionaryField& Q, const ConstraintSet& cs,
                               const Context& ctx);
/// Defect of a constraint under Q, reduced modulo the constraint itself.
DefectReport invariance_defect(const Constraint& c, const EvolutionaryField& Q, const Context& ctx);

/// Rational constant c with a = c * b, if one exists.
std::optional<Rational> constant_ratio(const Expr& a, const Expr& b);

/// Linearization sum_J (d delta/du_J) * w_J.
Expr frechet(const Expr& delta, int u, int w, const Context& ctx);

/// Bindings u_J -> D_J(seed) for every jet of dep occurring in e.
Bindings solution_bindings(const Expr& seed, const Expr& e, int dep, const Context& ctx);
/// Q u evaluated on the solution given by sol (every jet of eta must be bound).
Expr map_solution(const EvolutionaryField& Q, const Bindings& sol);

/// Characteristic of [Q1, Q2]: pr Q1(eta2) - pr Q2(eta1).
EvolutionaryField commutator(const EvolutionaryField& Q1, const EvolutionaryField& Q2, const Context& ctx);

/// eta - sum_j xi_j * u_{x_j}.
EvolutionaryField evolutionary_rep(const PointField& P, const Context& ctx);

class SymmetryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DeterminingSolution {
  std::vector<Atom> unknowns;
  /// Linear equations in the unknowns (one per collected monomial).
  std::vector<Expr> equations;
  bool consistent = true;
  std::vector<Rational> particular;
  /// Basis of the homogeneous solution space, in reduced echelon form.
  std::vector<std::vector<Rational>> basis;
  /// Unknowns left free by the solution (one per basis vector).
  std::vector<Atom> free_unknowns;
};

/// Solves the linear determining equations for the unknown parameters of a
/// template characteristic so that the defect vanishes modulo cs.
DeterminingSolution solve_determining(const ConstraintSet& cs, const Expr& delta, const EvolutionaryField& templ,
                                      const std::vector<Atom>& unknowns, const Context& ctx);
/// Template with unknowns replaced by the given values.
Expr instantiate_unknowns(const Expr& templ, const std::vector<Atom>& unknowns, const std::vector<Rational>& values);

struct SystemInvariance {
  bool invariant = true;
  std::vector<Constraint> solved;
  /// defects[g][i]: defect of equation i under generator g.
  std::vector<std::vector<Expr>> defects;
};

/// Invariance of a first-order quasilinear system under a list of generators,
/// with defects reduced modulo the system solved for leading first derivatives.
SystemInvariance check_system_invariance(const std::vector<Expr>& system,
                                         const std::vector<EvolutionaryField>& algebra, int dep,
                                         const Context& ctx);

struct Theorem2Input {
  int s = 0;
  int k1 = 1;
  bool equation_invariant = false;
  bool system_invariant = false;
};

/// "classical-invariant" when both invariances hold and s >= k1 + 1, else "inconclusive".
std::string theorem2_verdict(const Theorem2Input& in);

}  // namespace symred
