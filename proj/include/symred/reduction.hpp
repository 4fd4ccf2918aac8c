#pragma once

#include <string>
#include <vector>

#include "symred/jet.hpp"

namespace symred {

class ReductionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// u = F(x, phi_1, ..., phi_m'), where the phi_i are function symbols of the
/// surviving variables and x_1 = eliminated is removed by collection.
struct Ansatz {
  std::string name;
  int dep = 0;
  Expr F;
  int eliminated = 0;
  std::vector<int> reduced_functions;
};

struct ReducedSystem {
  /// Coefficients of the collected numerator, one per basis monomial.
  std::vector<Expr> equations;
  std::vector<Expr> basis;
  /// Denominator cleared before collection; the system is equivalent where it is nonzero.
  Expr denominator;
  /// The expression in collection coordinates; basis . equations equals its numerator.
  Expr collected;
  int k1 = 0;
};

/// pde with u_J replaced by D_J F.
Expr apply_ansatz(const Expr& pde, const Ansatz& a, const Context& ctx);

/// True when the atom depends on variable v through its arguments, relation or
/// derivative rules.
bool depends_on(const Atom& a, int v, const Context& ctx);

/// Splits the cleared numerator of e by monomials in x_1 and x_1-dependent atoms.
ReducedSystem collect_system(const Expr& e, const Ansatz& a, const Context& ctx);

/// Integer-primitive form with positive leading coefficient: a canonical
/// representative of an equation up to rational scaling.
Expr scale_normal(const Expr& eq);

}  // namespace symred
