#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symred/context.hpp"

namespace symred {

struct SourcePos {
  int line = 1;
  int column = 1;
};

/// Syntax or resolution error with the position of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, SourcePos pos);
  const SourcePos& pos() const { return pos_; }
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  SourcePos pos_;
};

enum class TokenKind { Ident, Integer, Decimal, Symbol, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  SourcePos pos;
};

/// Splits DSL text into tokens; '#' starts a comment running to end of line.
std::vector<Token> tokenize(std::string_view text);

/// Recursive-descent reader over a token range; used for standalone
/// expressions and embedded in the scenario reader.
class TokenCursor {
 public:
  explicit TokenCursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t ahead = 0) const;
  const Token& next();
  bool at_end() const { return peek().kind == TokenKind::End; }
  bool is_symbol(std::string_view s, std::size_t ahead = 0) const;
  bool is_ident(std::string_view s, std::size_t ahead = 0) const;
  bool accept_symbol(std::string_view s);
  bool accept_ident(std::string_view s);
  void expect_symbol(std::string_view s);
  void expect_ident(std::string_view s);
  std::string expect_identifier();
  long expect_integer();
  [[noreturn]] void fail(const std::string& message) const;
  [[noreturn]] void fail_at(const Token& tok, const std::string& message) const;

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

/// Parses one expression at the cursor (stops before ',', ';', ')' etc.).
Expr parse_expression(TokenCursor& cur, const Context& ctx);
/// Parses a number that may be a decimal or a rational constant expression,
/// used for numeric settings.
double parse_number(TokenCursor& cur);

/// Parses a complete expression string in canonical form.
Expr parse(std::string_view text, const Context& ctx);

}  // namespace symred
