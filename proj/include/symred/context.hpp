#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symred/expr.hpp"

namespace symred {

enum class SymbolKind { Indep, Dep, Param, Func, Defined };

struct SymbolRef {
  SymbolKind kind;
  int index;
};

struct FunctionSymbol {
  std::string name;
  int arity = 1;
  /// Arguments used when the symbol is written bare (reduced functions).
  std::vector<Expr> default_args;
};

struct DefinedAtomInfo {
  Atom atom;
  bool has_relation = false;
  /// Total-derivative rules D_v(atom), keyed by independent-variable index.
  std::map<int, Expr> derivative_rules;
};

/// Error for name clashes, unknown names and malformed declarations.
class ContextError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Declarations shared by every symbolic operation: independent and dependent
/// variables, parameters, function symbols and defined atoms. Declarations are
/// append-only, so atoms created earlier keep their canonical order.
class Context {
 public:
  int add_indep(const std::string& name);
  int add_dep(const std::string& name);
  int add_param(const std::string& name);
  int add_func(const std::string& name, int arity);
  void set_default_args(int func, std::vector<Expr> args);
  /// Declares a defined atom without relation; the relation can be attached
  /// later with set_relation (after which expressions must be re-parsed).
  int declare_atom(const std::string& name);
  /// relation_zero = 0 is a polynomial relation in the atom (e.g. r^2 - phi1 + 2*x).
  void set_relation(int atom, const Expr& relation_zero);
  void add_derivative_rule(int atom, int var, const Expr& rule);

  std::optional<SymbolRef> lookup(const std::string& name) const;
  bool is_declared(const std::string& name) const { return lookup(name).has_value(); }

  std::size_t indep_count() const { return indep_.size(); }
  std::size_t dep_count() const { return deps_.size(); }
  std::size_t param_count() const { return params_.size(); }
  const std::string& indep_name(int i) const { return indep_.at(static_cast<std::size_t>(i)); }
  const std::string& dep_name(int i) const { return deps_.at(static_cast<std::size_t>(i)); }
  const std::string& param_name(int i) const { return params_.at(static_cast<std::size_t>(i)); }
  const FunctionSymbol& func(int i) const { return funcs_.at(static_cast<std::size_t>(i)); }
  std::size_t func_count() const { return funcs_.size(); }
  const DefinedAtomInfo& defined(int i) const { return defined_.at(static_cast<std::size_t>(i)); }
  std::size_t defined_count() const { return defined_.size(); }

  int indep_index(const std::string& name) const;
  int dep_index(const std::string& name) const;
  int param_index(const std::string& name) const;
  int func_index(const std::string& name) const;
  int defined_index(const std::string& name) const;

  Atom indep_atom(int i) const;
  Atom param_atom(int i) const;
  Atom jet_atom(int dep, const MultiIndex& mi) const;
  Atom func_atom(int func, std::vector<Expr> args, std::vector<int> orders = {}) const;
  Atom defined_atom(int i) const { return defined(i).atom; }

  Expr var(const std::string& name) const { return Expr(indep_atom(indep_index(name))); }
  Expr param(const std::string& name) const { return Expr(param_atom(param_index(name))); }
  Expr jet(const std::string& dep, const MultiIndex& mi = {}) const;
  /// Jet from a list of variable names, e.g. jet("u", {"x", "x", "t"}).
  Expr jet(const std::string& dep, const std::vector<std::string>& vars) const;
  Expr apply(const std::string& func, std::vector<Expr> args, std::vector<int> orders = {}) const;

  /// ln(exp(v)) -> v folding (on by default).
  bool fold_ln_exp = true;

 private:
  void claim(const std::string& name, SymbolKind kind, int index);

  std::vector<std::string> indep_;
  std::vector<std::string> deps_;
  std::vector<std::string> params_;
  std::vector<FunctionSymbol> funcs_;
  std::vector<DefinedAtomInfo> defined_;
  std::map<std::string, SymbolRef> names_;
};

/// Canonical DSL text of an expression.
std::string to_string(const Expr& e, const Context& ctx);
std::string to_string(const Atom& a, const Context& ctx);
std::string to_string(const MultiIndex& mi, const Context& ctx);

}  // namespace symred
