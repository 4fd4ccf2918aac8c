#include "symred/context.hpp"

#include <regex>

namespace symred {

namespace {

const std::regex& identifier_pattern() {
  static const std::regex re("[A-Za-z_][A-Za-z0-9_]*");
  return re;
}

bool reserved(const std::string& name) {
  return name == "exp" || name == "ln" || name == "d" || name == "sqrt" || name == "D";
}

}  // namespace

void Context::claim(const std::string& name, SymbolKind kind, int index) {
  if (!std::regex_match(name, identifier_pattern())) {
    throw ContextError("invalid identifier '" + name + "'");
  }
  if (reserved(name)) throw ContextError("'" + name + "' is a reserved name");
  if (names_.count(name)) throw ContextError("name '" + name + "' is already declared");
  names_[name] = {kind, index};
}

int Context::add_indep(const std::string& name) {
  const int i = static_cast<int>(indep_.size());
  claim(name, SymbolKind::Indep, i);
  indep_.push_back(name);
  return i;
}

int Context::add_dep(const std::string& name) {
  const int i = static_cast<int>(deps_.size());
  claim(name, SymbolKind::Dep, i);
  deps_.push_back(name);
  return i;
}

int Context::add_param(const std::string& name) {
  const int i = static_cast<int>(params_.size());
  claim(name, SymbolKind::Param, i);
  params_.push_back(name);
  return i;
}

int Context::add_func(const std::string& name, int arity) {
  if (arity < 1) throw ContextError("function '" + name + "' must take at least one argument");
  const int i = static_cast<int>(funcs_.size());
  claim(name, SymbolKind::Func, i);
  funcs_.push_back({name, arity, {}});
  return i;
}

void Context::set_default_args(int func, std::vector<Expr> args) {
  auto& f = funcs_.at(static_cast<std::size_t>(func));
  if (static_cast<int>(args.size()) != f.arity) {
    throw ContextError("default arguments of '" + f.name + "' do not match its arity");
  }
  f.default_args = std::move(args);
}

int Context::declare_atom(const std::string& name) {
  const int i = static_cast<int>(defined_.size());
  claim(name, SymbolKind::Defined, i);
  defined_.push_back({Atom::defined(i, name, {}), false, {}});
  return i;
}

void Context::set_relation(int atom, const Expr& relation_zero) {
  auto& info = defined_.at(static_cast<std::size_t>(atom));
  const Atom placeholder = info.atom;
  if (info.has_relation) throw ContextError("atom '" + placeholder.name() + "' already has a relation");
  const auto coeffs = relation_zero.num().coefficients_in(placeholder);
  if (coeffs.size() < 2) {
    throw ContextError("relation of '" + placeholder.name() + "' must involve the atom");
  }
  const Expr lead = Expr::polynomial(coeffs.back());
  std::vector<Expr> lower;
  for (std::size_t k = 0; k + 1 < coeffs.size(); ++k) {
    Expr c = Expr::polynomial(coeffs[k]);
    if (contains_atom(c, placeholder) || contains_atom(lead, placeholder)) {
      throw ContextError("relation of '" + placeholder.name() + "' is not polynomial in the atom");
    }
    lower.push_back(-c / lead);
  }
  info.atom = Atom::defined(atom, placeholder.name(), std::move(lower));
  info.has_relation = true;
}

void Context::add_derivative_rule(int atom, int var, const Expr& rule) {
  auto& info = defined_.at(static_cast<std::size_t>(atom));
  if (var < 0 || var >= static_cast<int>(indep_.size())) {
    throw ContextError("derivative rule refers to an unknown variable");
  }
  if (info.derivative_rules.count(var)) {
    throw ContextError("duplicate derivative rule D[" + indep_name(var) + "](" + info.atom.name() + ")");
  }
  info.derivative_rules[var] = rule;
}

std::optional<SymbolRef> Context::lookup(const std::string& name) const {
  auto it = names_.find(name);
  if (it == names_.end()) return std::nullopt;
  return it->second;
}

namespace {

int expect_kind(const Context& ctx, const std::string& name, SymbolKind kind, const char* what) {
  auto ref = ctx.lookup(name);
  if (!ref || ref->kind != kind) {
    throw ContextError("'" + name + "' is not a declared " + what);
  }
  return ref->index;
}

}  // namespace

int Context::indep_index(const std::string& name) const {
  return expect_kind(*this, name, SymbolKind::Indep, "independent variable");
}
int Context::dep_index(const std::string& name) const {
  return expect_kind(*this, name, SymbolKind::Dep, "dependent variable");
}
int Context::param_index(const std::string& name) const {
  return expect_kind(*this, name, SymbolKind::Param, "parameter");
}
int Context::func_index(const std::string& name) const {
  return expect_kind(*this, name, SymbolKind::Func, "function symbol");
}
int Context::defined_index(const std::string& name) const {
  return expect_kind(*this, name, SymbolKind::Defined, "defined atom");
}

Atom Context::indep_atom(int i) const { return Atom::indep(i, indep_name(i)); }
Atom Context::param_atom(int i) const { return Atom::param(i, param_name(i)); }

Atom Context::jet_atom(int dep, const MultiIndex& mi) const {
  return Atom::jet(dep, dep_name(dep), mi);
}

Atom Context::func_atom(int func, std::vector<Expr> args, std::vector<int> orders) const {
  const auto& f = this->func(func);
  if (static_cast<int>(args.size()) != f.arity) {
    throw ContextError("function '" + f.name + "' expects " + std::to_string(f.arity) +
                       " argument(s), got " + std::to_string(args.size()));
  }
  if (orders.empty()) orders.assign(args.size(), 0);
  if (orders.size() != args.size()) {
    throw ContextError("derivative of '" + f.name + "' needs one order per argument");
  }
  return Atom::func(func, f.name, std::move(orders), std::move(args));
}

Expr Context::jet(const std::string& dep, const MultiIndex& mi) const {
  return Expr(jet_atom(dep_index(dep), mi));
}

Expr Context::jet(const std::string& dep, const std::vector<std::string>& vars) const {
  std::vector<int> counts(indep_.size(), 0);
  for (const auto& v : vars) ++counts[static_cast<std::size_t>(indep_index(v))];
  return jet(dep, MultiIndex(std::move(counts)));
}

Expr Context::apply(const std::string& func, std::vector<Expr> args, std::vector<int> orders) const {
  return Expr(func_atom(func_index(func), std::move(args), std::move(orders)));
}

}  // namespace symred
