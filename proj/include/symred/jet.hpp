#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "symred/context.hpp"

namespace symred {

/// Missing derivative rules, broken rankings and inconsistent constraints.
class JetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Total derivative D_v along independent variable v.
Expr total_derivative(const Expr& e, int v, const Context& ctx);
/// Iterated total derivative D_J.
Expr total_derivative(const Expr& e, const MultiIndex& J, const Context& ctx);

/// Partial derivative by one atom, all other top-level atoms held fixed;
/// chain rules apply through exp, ln, roots and function arguments.
Expr diff_atom(const Expr& e, const Atom& a);

using Bindings = std::map<Atom, Expr, AtomLess>;

enum class SubstMode {
  Partial,  // unbound atoms are kept
  Total,    // every jet variable must be bound
};

/// Simultaneous substitution of atoms, including inside function arguments.
Expr substitute(const Expr& e, const Bindings& bindings, SubstMode mode = SubstMode::Partial);

/// Replaces every application of func, and of its derivatives, by body with
/// vars bound to the arguments (derivatives are taken symbolically in vars).
Expr instantiate_function(const Expr& e, int func, const std::vector<Atom>& vars, const Expr& body);

/// Jet variables and function applications whose arguments are distinct
/// independent variables carry a derivative multi-index over those variables.
bool is_jet_like(const Atom& a);
/// Multi-index of a jet-like atom in independent-variable coordinates.
MultiIndex jet_index(const Atom& a);
/// Same base atom differentiated further by delta.
Atom raise_jet(const Atom& a, const MultiIndex& delta);
/// True when b is a derivative of a (same base, index componentwise >=).
bool jet_divides(const Atom& a, const Atom& b);

/// Solved-form differential constraint: leader = rhs.
struct Constraint {
  std::string name;
  Atom leader;
  Expr rhs;

  Expr as_zero() const { return Expr(leader) - rhs; }
};

/// Builds a constraint from lhs = rhs, where lhs must be a single jet-like atom.
/// For jet variables the rhs must rank strictly below the leader; for function
/// applications it must not contain derivatives of the leader.
Constraint make_constraint(const std::string& name, const Expr& lhs, const Expr& rhs);

/// A triangular set of constraints with memoized reduction of derivatives of
/// their leaders.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  ConstraintSet(const Context& ctx, std::vector<Constraint> cs);

  const std::vector<Constraint>& constraints() const { return cs_; }
  bool empty() const { return cs_.empty(); }

  /// Replaces every derivative of a leader by its reduced value, to a fixed point.
  Expr reduce(const Expr& e) const;
  /// True when some derivative of a leader occurs in e.
  bool reducible(const Expr& e) const;
  /// The constraints plus all their derivatives whose index stays below bound.
  std::vector<Constraint> prolong(const MultiIndex& bound) const;

  static constexpr int kOrderCap = 40;
  static constexpr int kRoundCap = 64;

 private:
  std::optional<std::size_t> leader_for(const Atom& a) const;
  Expr reduced_value(const Atom& a) const;

  const Context* ctx_ = nullptr;
  std::vector<Constraint> cs_;
  mutable std::map<Atom, Expr, AtomLess> memo_;
};

std::vector<Constraint> prolong_constraints(const std::vector<Constraint>& cs, const MultiIndex& bound,
                                            const Context& ctx);
Expr reduce_mod(const Expr& e, const std::vector<Constraint>& cs, const Context& ctx);

/// Checks that every defined atom's derivative rules preserve its relation and
/// reference declared names only; throws JetError otherwise.
void validate_defined_atoms(const Context& ctx);

}  // namespace symred
