#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pdml/script/diagnostic.h"

namespace pdml::script {

enum class TokenKind {
  Ident,
  Number,
  Plus,
  Minus,
  Star,
  Slash,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Assign,
  Colon,
  Less,
  LessEq,
  Greater,
  GreaterEq,
  EqEq,
  NotEq,
  KwInit,  // `init:`
  KwPays,
  KwDiscountBy,
  KwNoDiscount,
  KwIf,
  KwElse,
  EndOfStatement,
  EndOfFile,
};

struct Token {
  TokenKind kind;
  std::string text;
  double number = 0.0;
  SourceLoc loc;
};

[[nodiscard]] std::string_view to_string(TokenKind kind);

/// Splits script source into tokens. `#` starts a comment running to the end
/// of the line, a trailing `\` joins the next line, and newlines inside open
/// brackets do not end a statement. Every statement is closed by an
/// EndOfStatement token; the stream always ends with EndOfFile.
///
/// Throws ScriptError on an illegal character.
[[nodiscard]] std::vector<Token> tokenize(std::string_view source);

}  // namespace pdml::script
