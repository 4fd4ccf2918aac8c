#include "symred/parser.hpp"

#include <cctype>
#include <cstdlib>

namespace symred {

ParseError::ParseError(const std::string& message, SourcePos pos)
    : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message),
      message_(message),
      pos_(pos) {}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  SourcePos pos;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
  };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    Token tok;
    tok.pos = pos;
    std::size_t len = 1;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i + len < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i + len])) || text[i + len] == '_')) {
        ++len;
      }
      tok.kind = TokenKind::Ident;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i + len < text.size() && std::isdigit(static_cast<unsigned char>(text[i + len]))) ++len;
      tok.kind = TokenKind::Integer;
      const bool fraction = i + len + 1 < text.size() && text[i + len] == '.' &&
                            std::isdigit(static_cast<unsigned char>(text[i + len + 1]));
      if (fraction) {
        ++len;
        while (i + len < text.size() && std::isdigit(static_cast<unsigned char>(text[i + len]))) ++len;
        tok.kind = TokenKind::Decimal;
      }
      if (i + len < text.size() && (text[i + len] == 'e' || text[i + len] == 'E')) {
        std::size_t k = len + 1;
        if (i + k < text.size() && (text[i + k] == '-' || text[i + k] == '+')) ++k;
        if (i + k < text.size() && std::isdigit(static_cast<unsigned char>(text[i + k]))) {
          len = k;
          while (i + len < text.size() && std::isdigit(static_cast<unsigned char>(text[i + len]))) ++len;
          tok.kind = TokenKind::Decimal;
        }
      }
    } else {
      static const char* const two[] = {"<=", ">=", ".."};
      tok.kind = TokenKind::Symbol;
      for (const char* s : two) {
        if (text.substr(i, 2) == s) len = 2;
      }
      if (len == 1 && std::string_view("+-*/^()[],;=:{}<>").find(c) == std::string_view::npos) {
        throw ParseError(std::string("unexpected character '") + c + "'", pos);
      }
    }
    tok.text = std::string(text.substr(i, len));
    out.push_back(std::move(tok));
    advance(len);
  }
  Token end;
  end.kind = TokenKind::End;
  end.pos = pos;
  out.push_back(end);
  return out;
}

// ------------------------------------------------------------ TokenCursor

const Token& TokenCursor::peek(std::size_t ahead) const {
  const std::size_t k = std::min(pos_ + ahead, tokens_.size() - 1);
  return tokens_[k];
}

const Token& TokenCursor::next() {
  const Token& t = peek();
  if (pos_ < tokens_.size() - 1) ++pos_;
  return t;
}

bool TokenCursor::is_symbol(std::string_view s, std::size_t ahead) const {
  const Token& t = peek(ahead);
  return t.kind == TokenKind::Symbol && t.text == s;
}

bool TokenCursor::is_ident(std::string_view s, std::size_t ahead) const {
  const Token& t = peek(ahead);
  return t.kind == TokenKind::Ident && t.text == s;
}

bool TokenCursor::accept_symbol(std::string_view s) {
  if (!is_symbol(s)) return false;
  next();
  return true;
}

bool TokenCursor::accept_ident(std::string_view s) {
  if (!is_ident(s)) return false;
  next();
  return true;
}

void TokenCursor::expect_symbol(std::string_view s) {
  if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
}

void TokenCursor::expect_ident(std::string_view s) {
  if (!accept_ident(s)) fail("expected '" + std::string(s) + "'");
}

std::string TokenCursor::expect_identifier() {
  if (peek().kind != TokenKind::Ident) fail("expected an identifier");
  return next().text;
}

long TokenCursor::expect_integer() {
  bool negative = accept_symbol("-");
  if (peek().kind != TokenKind::Integer) fail("expected an integer");
  const long v = std::strtol(next().text.c_str(), nullptr, 10);
  return negative ? -v : v;
}

void TokenCursor::fail(const std::string& message) const { fail_at(peek(), message); }

void TokenCursor::fail_at(const Token& tok, const std::string& message) const {
  std::string where = tok.kind == TokenKind::End ? "end of input" : "'" + tok.text + "'";
  throw ParseError(message + " at " + where, tok.pos);
}

// ------------------------------------------------------------ expressions

namespace {

class ExprReader {
 public:
  ExprReader(TokenCursor& cur, const Context& ctx) : cur_(cur), ctx_(ctx) {}

  Expr sum() {
    Expr acc = term();
    while (true) {
      if (cur_.accept_symbol("+")) {
        acc += term();
      } else if (cur_.accept_symbol("-")) {
        acc -= term();
      } else {
        return acc;
      }
    }
  }

 private:
  Expr term() {
    Expr acc = unary();
    while (true) {
      if (cur_.accept_symbol("*")) {
        acc *= unary();
      } else if (cur_.is_symbol("/")) {
        const Token& tok = cur_.next();
        Expr d = unary();
        if (d.is_zero()) cur_.fail_at(tok, "division by zero");
        acc = acc / d;
      } else {
        return acc;
      }
    }
  }

  Expr unary() {
    if (cur_.accept_symbol("-")) return -unary();
    if (cur_.accept_symbol("+")) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (!cur_.is_symbol("^")) return base;
    const Token& tok = cur_.next();
    Expr e = unary();
    auto q = e.constant();
    if (!q) cur_.fail_at(tok, "exponent must be a rational constant");
    if (base.is_zero() && *q <= 0) cur_.fail_at(tok, "zero raised to a non-positive power");
    try {
      return pow(base, *q);
    } catch (const std::exception& ex) {
      cur_.fail_at(tok, ex.what());
    }
  }

  std::vector<Expr> arguments() {
    cur_.expect_symbol("(");
    std::vector<Expr> args;
    if (!cur_.is_symbol(")")) {
      args.push_back(sum());
      while (cur_.accept_symbol(",")) args.push_back(sum());
    }
    cur_.expect_symbol(")");
    return args;
  }

  Expr apply(const Token& name_tok, int f, std::vector<Expr> args, std::vector<int> orders) {
    const auto& sym = ctx_.func(f);
    if (static_cast<int>(args.size()) != sym.arity) {
      cur_.fail_at(name_tok, "arity mismatch: '" + sym.name + "' takes " + std::to_string(sym.arity) +
                                 " argument(s), got " + std::to_string(args.size()));
    }
    if (!orders.empty() && orders.size() != args.size()) {
      cur_.fail_at(name_tok, "arity mismatch: derivative of '" + sym.name + "' needs " +
                                 std::to_string(sym.arity) + " order(s)");
    }
    return Expr(ctx_.func_atom(f, std::move(args), std::move(orders)));
  }

  Expr primary() {
    const Token tok = cur_.peek();
    if (tok.kind == TokenKind::Integer) {
      cur_.next();
      return Expr(Rational(mpz_class(tok.text)));
    }
    if (tok.kind == TokenKind::Decimal) {
      cur_.fail("floating-point literals are not allowed in symbolic expressions");
    }
    if (cur_.accept_symbol("(")) {
      Expr e = sum();
      cur_.expect_symbol(")");
      return e;
    }
    if (tok.kind != TokenKind::Ident) cur_.fail("expected an expression");
    cur_.next();
    const std::string& name = tok.text;
    if ((name == "exp" || name == "ln" || name == "sqrt") && cur_.is_symbol("(")) {
      auto args = arguments();
      if (args.size() != 1) cur_.fail_at(tok, "arity mismatch: '" + name + "' takes 1 argument");
      try {
        if (name == "exp") return exp(args[0]);
        if (name == "ln") return ln(args[0], ctx_.fold_ln_exp);
        return root(args[0], 2);
      } catch (const std::exception& ex) {
        cur_.fail_at(tok, ex.what());
      }
    }
    if (name == "d" && cur_.is_symbol("(") && !ctx_.is_declared("d")) {
      cur_.expect_symbol("(");
      const Token ftok = cur_.peek();
      const std::string fname = cur_.expect_identifier();
      auto ref = ctx_.lookup(fname);
      if (!ref) cur_.fail_at(ftok, "undeclared identifier '" + fname + "'");
      if (ref->kind != SymbolKind::Func) cur_.fail_at(ftok, "'" + fname + "' is not a function symbol");
      std::vector<int> orders;
      while (cur_.accept_symbol(",")) {
        const long k = cur_.expect_integer();
        if (k < 0) cur_.fail("derivative orders must be non-negative");
        orders.push_back(static_cast<int>(k));
      }
      cur_.expect_symbol(")");
      if (orders.empty()) cur_.fail_at(ftok, "derivative needs at least one order");
      std::vector<Expr> args;
      if (cur_.is_symbol("(")) {
        args = arguments();
      } else if (!ctx_.func(ref->index).default_args.empty()) {
        args = ctx_.func(ref->index).default_args;
      } else {
        cur_.fail("expected '(' with arguments of d(" + fname + ",...)");
      }
      return apply(ftok, ref->index, std::move(args), std::move(orders));
    }
    auto ref = ctx_.lookup(name);
    if (!ref) cur_.fail_at(tok, "undeclared identifier '" + name + "'");
    switch (ref->kind) {
      case SymbolKind::Indep:
        return Expr(ctx_.indep_atom(ref->index));
      case SymbolKind::Param:
        return Expr(ctx_.param_atom(ref->index));
      case SymbolKind::Defined:
        return Expr(ctx_.defined_atom(ref->index));
      case SymbolKind::Dep: {
        std::vector<int> counts(ctx_.indep_count(), 0);
        if (cur_.accept_symbol("[")) {
          if (!cur_.is_symbol("]")) {
            do {
              const Token vtok = cur_.peek();
              const std::string v = cur_.expect_identifier();
              auto vr = ctx_.lookup(v);
              if (!vr) cur_.fail_at(vtok, "undeclared identifier '" + v + "'");
              if (vr->kind != SymbolKind::Indep) {
                cur_.fail_at(vtok, "'" + v + "' is not an independent variable");
              }
              ++counts[static_cast<std::size_t>(vr->index)];
            } while (cur_.accept_symbol(","));
          }
          cur_.expect_symbol("]");
        } else if (cur_.is_symbol("(")) {
          cur_.fail_at(tok, "'" + name + "' is a dependent variable; use " + name + "[...] for derivatives");
        }
        return Expr(ctx_.jet_atom(ref->index, MultiIndex(std::move(counts))));
      }
      case SymbolKind::Func: {
        if (cur_.is_symbol("(")) return apply(tok, ref->index, arguments(), {});
        const auto& defaults = ctx_.func(ref->index).default_args;
        if (defaults.empty()) cur_.fail_at(tok, "function '" + name + "' needs arguments");
        return apply(tok, ref->index, defaults, {});
      }
    }
    cur_.fail_at(tok, "unexpected identifier");
  }

  TokenCursor& cur_;
  const Context& ctx_;
};

}  // namespace

Expr parse_expression(TokenCursor& cur, const Context& ctx) {
  ExprReader reader(cur, ctx);
  return reader.sum();
}

double parse_number(TokenCursor& cur) {
  const bool negative = cur.accept_symbol("-");
  const Token& tok = cur.peek();
  if (tok.kind == TokenKind::Decimal) {
    cur.next();
    const double v = std::strtod(tok.text.c_str(), nullptr);
    return negative ? -v : v;
  }
  if (tok.kind != TokenKind::Integer) cur.fail("expected a number");
  cur.next();
  double v = std::strtod(tok.text.c_str(), nullptr);
  if (cur.is_symbol("/") && cur.peek(1).kind == TokenKind::Integer) {
    cur.next();
    v /= std::strtod(cur.next().text.c_str(), nullptr);
  }
  return negative ? -v : v;
}

Expr parse(std::string_view text, const Context& ctx) {
  TokenCursor cur(tokenize(text));
  Expr e = parse_expression(cur, ctx);
  if (!cur.at_end()) cur.fail("unexpected trailing input");
  return e;
}

}  // namespace symred
