#include <cctype>
#include <charconv>
#include <string>

#include "pdml/script/token.h"

namespace pdml::script {

std::string Diagnostic::render(std::string_view file) const {
  return std::string(file) + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + message;
}

namespace {

std::string join_messages(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) {
    if (!out.empty()) out += "\n";
    out += d.render("<script>");
  }
  return out;
}

}  // namespace

ScriptError::ScriptError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_messages(diags)), diags_(std::move(diags)) {}

ScriptError::ScriptError(SourceLoc loc, std::string message)
    : ScriptError(std::vector<Diagnostic>{Diagnostic{loc, std::move(message)}}) {}

std::string ScriptError::render(std::string_view file) const {
  std::string out;
  for (const auto& d : diags_) {
    if (!out.empty()) out += "\n";
    out += d.render(file);
  }
  return out;
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Ident: return "identifier";
    case TokenKind::Number: return "number";
    case TokenKind::Plus: return "'+'";
    case TokenKind::Minus: return "'-'";
    case TokenKind::Star: return "'*'";
    case TokenKind::Slash: return "'/'";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::LBracket: return "'['";
    case TokenKind::RBracket: return "']'";
    case TokenKind::Comma: return "','";
    case TokenKind::Assign: return "'='";
    case TokenKind::Colon: return "':'";
    case TokenKind::Less: return "'<'";
    case TokenKind::LessEq: return "'<='";
    case TokenKind::Greater: return "'>'";
    case TokenKind::GreaterEq: return "'>='";
    case TokenKind::EqEq: return "'=='";
    case TokenKind::NotEq: return "'!='";
    case TokenKind::KwInit: return "'init:'";
    case TokenKind::KwPays: return "'pays'";
    case TokenKind::KwDiscountBy: return "'discountby'";
    case TokenKind::KwNoDiscount: return "'nodiscount'";
    case TokenKind::KwIf: return "'if'";
    case TokenKind::KwElse: return "'else'";
    case TokenKind::EndOfStatement: return "end of statement";
    case TokenKind::EndOfFile: return "end of file";
  }
  return "?";
}

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        newline();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (c == '\\') {
        continuation();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        identifier();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        number();
        continue;
      }
      punctuation();
    }
    end_statement(here());
    tokens_.push_back(Token{TokenKind::EndOfFile, "", 0.0, here()});
    return std::move(tokens_);
  }

 private:
  SourceLoc here() const { return SourceLoc{line_, col_}; }

  void advance() {
    ++pos_;
    ++col_;
  }

  void newline() {
    const SourceLoc loc = here();
    ++pos_;
    ++line_;
    col_ = 1;
    if (depth_ == 0) end_statement(loc);
  }

  void end_statement(SourceLoc loc) {
    if (!tokens_.empty() && tokens_.back().kind != TokenKind::EndOfStatement) {
      tokens_.push_back(Token{TokenKind::EndOfStatement, "", 0.0, loc});
    }
  }

  void continuation() {
    const SourceLoc loc = here();
    std::size_t p = pos_ + 1;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\r')) ++p;
    if (p < src_.size() && src_[p] != '\n') {
      throw ScriptError(loc, "'\\' must be the last character on a line");
    }
    pos_ = p;
    if (pos_ < src_.size()) {
      ++pos_;
      ++line_;
      col_ = 1;
    }
  }

  void identifier() {
    const SourceLoc loc = here();
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      advance();
    }
    std::string text(src_.substr(start, pos_ - start));
    if (text == "init") {
      std::size_t p = pos_;
      while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) ++p;
      if (p < src_.size() && src_[p] == ':') {
        while (pos_ <= p) advance();
        tokens_.push_back(Token{TokenKind::KwInit, "init:", 0.0, loc});
        return;
      }
    }
    TokenKind kind = TokenKind::Ident;
    if (text == "pays") kind = TokenKind::KwPays;
    else if (text == "discountby") kind = TokenKind::KwDiscountBy;
    else if (text == "nodiscount") kind = TokenKind::KwNoDiscount;
    else if (text == "if") kind = TokenKind::KwIf;
    else if (text == "else") kind = TokenKind::KwElse;
    tokens_.push_back(Token{kind, std::move(text), 0.0, loc});
  }

  void number() {
    const SourceLoc loc = here();
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        while (pos_ < p) advance();
        digits();
      }
    }
    const std::string_view text = src_.substr(start, pos_ - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ScriptError(loc, "malformed number '" + std::string(text) + "'");
    }
    tokens_.push_back(Token{TokenKind::Number, std::string(text), value, loc});
  }

  void punctuation() {
    const SourceLoc loc = here();
    const char c = src_[pos_];
    const char next = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
    auto emit = [&](TokenKind kind, int width) {
      tokens_.push_back(Token{kind, std::string(src_.substr(pos_, width)), 0.0, loc});
      for (int i = 0; i < width; ++i) advance();
    };
    switch (c) {
      case '+': return emit(TokenKind::Plus, 1);
      case '-': return emit(TokenKind::Minus, 1);
      case '*': return emit(TokenKind::Star, 1);
      case '/': return emit(TokenKind::Slash, 1);
      case ',': return emit(TokenKind::Comma, 1);
      case ':': return emit(TokenKind::Colon, 1);
      case '(':
        ++depth_;
        return emit(TokenKind::LParen, 1);
      case '[':
        ++depth_;
        return emit(TokenKind::LBracket, 1);
      case ')':
        if (depth_ > 0) --depth_;
        return emit(TokenKind::RParen, 1);
      case ']':
        if (depth_ > 0) --depth_;
        return emit(TokenKind::RBracket, 1);
      case '=':
        return next == '=' ? emit(TokenKind::EqEq, 2) : emit(TokenKind::Assign, 1);
      case '<':
        return next == '=' ? emit(TokenKind::LessEq, 2) : emit(TokenKind::Less, 1);
      case '>':
        return next == '=' ? emit(TokenKind::GreaterEq, 2) : emit(TokenKind::Greater, 1);
      case '!':
        if (next == '=') return emit(TokenKind::NotEq, 2);
        break;
      default:
        break;
    }
    std::string shown(1, c);
    if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f) {
      shown = "\\x" + std::to_string(static_cast<unsigned char>(c));
    }
    throw ScriptError(loc, "illegal character '" + shown + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  int depth_ = 0;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace pdml::script
