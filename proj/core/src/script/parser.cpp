#include <map>
#include <optional>

#include "pdml/script/parser.h"

namespace pdml::script {

namespace {

const Expr* first_differential(const Expr& e) {
  const Expr* found = nullptr;
  visit(e, [&](const Expr& n) {
    if (!found && n.kind == ExprKind::Ident && is_differential(n.name)) found = &n;
  });
  return found;
}

bool is_one(const ExprPtr& e) { return e->kind == ExprKind::Number && e->number == 1.0; }

// An SDE right-hand side as a linear combination of differentials. Keys are
// "t" for d_t and the Brownian name otherwise, kept in first-seen order.
struct LinearForm {
  std::vector<std::pair<std::string, ExprPtr>> terms;

  void add(const std::string& key, ExprPtr coeff, SourceLoc loc) {
    for (auto& [k, c] : terms) {
      if (k == key) {
        c = Expr::make_binary(BinaryOp::Add, c, std::move(coeff), loc);
        return;
      }
    }
    terms.emplace_back(key, std::move(coeff));
  }
};

// Returns nullopt when `e` has no differential; throws when the differentials
// do not enter linearly.
std::optional<LinearForm> linear_form(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Ident: {
      if (!is_differential(e->name)) return std::nullopt;
      LinearForm f;
      f.terms.emplace_back(e->name.substr(2), Expr::make_number(1.0, e->loc));
      return f;
    }
    case ExprKind::Number:
      return std::nullopt;
    case ExprKind::Unary: {
      auto inner = linear_form(e->args[0]);
      if (!inner) return std::nullopt;
      for (auto& [k, c] : inner->terms) c = Expr::make_neg(c, e->loc);
      return inner;
    }
    case ExprKind::Binary: {
      const auto& lhs = e->args[0];
      const auto& rhs = e->args[1];
      if (is_comparison(e->op)) break;
      auto lf = linear_form(lhs);
      auto rf = linear_form(rhs);
      if (e->op == BinaryOp::Add || e->op == BinaryOp::Sub) {
        if (!lf && !rf) return std::nullopt;
        if (!lf || !rf) {
          const auto& pure = lf ? rhs : lhs;
          throw ScriptError(pure->loc, "addend without d_t or Brownian increment in SDE right-hand side");
        }
        for (auto& [k, c] : rf->terms) {
          lf->add(k, e->op == BinaryOp::Sub ? Expr::make_neg(c, rhs->loc) : c, e->loc);
        }
        return lf;
      }
      if (e->op == BinaryOp::Mul) {
        if (lf && rf) throw ScriptError(e->loc, "product of two differentials in SDE right-hand side");
        if (!lf && !rf) return std::nullopt;
        if (lf) {
          for (auto& [k, c] : lf->terms) c = is_one(c) ? rhs : Expr::make_binary(BinaryOp::Mul, c, rhs, e->loc);
          return lf;
        }
        for (auto& [k, c] : rf->terms) c = is_one(c) ? lhs : Expr::make_binary(BinaryOp::Mul, lhs, c, e->loc);
        return rf;
      }
      if (e->op == BinaryOp::Div) {
        if (rf) throw ScriptError(rhs->loc, "division by a differential in SDE right-hand side");
        if (!lf) return std::nullopt;
        for (auto& [k, c] : lf->terms) c = Expr::make_binary(BinaryOp::Div, c, rhs, e->loc);
        return lf;
      }
      break;
    }
    default:
      break;
  }
  if (const Expr* d = first_differential(*e)) {
    throw ScriptError(d->loc, "differential '" + d->name + "' must enter the SDE right-hand side linearly");
  }
  return std::nullopt;
}

bool references_name(const Expr& e, std::string_view name) {
  bool found = false;
  visit(e, [&](const Expr& n) {
    if ((n.kind == ExprKind::Ident || n.kind == ExprKind::TimeIndex) && n.name == name) found = true;
  });
  return found;
}

class Parser {
 public:
  explicit Parser(std::span<const Token> tokens) : toks_(tokens) {}

  ScriptAST parse_script() {
    ScriptAST ast;
    while (peek().kind != TokenKind::EndOfFile) {
      if (peek().kind == TokenKind::EndOfStatement) {
        ++pos_;
        continue;
      }
      try {
        statement(ast);
      } catch (const ScriptError& err) {
        for (const auto& d : err.diagnostics()) diags_.push_back(d);
        skip_statement();
      }
    }
    if (!diags_.empty()) throw ScriptError(diags_);
    return ast;
  }

  ExprPtr parse_single_expression() {
    auto e = expression();
    while (peek().kind == TokenKind::EndOfStatement) ++pos_;
    expect(TokenKind::EndOfFile, "after expression");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }

  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  bool accept(TokenKind kind) {
    if (peek().kind != kind) return false;
    next();
    return true;
  }

  const Token& expect(TokenKind kind, std::string_view context) {
    if (peek().kind != kind) {
      throw ScriptError(peek().loc, "expected " + std::string(to_string(kind)) + " " + std::string(context) +
                                        ", found " + describe(peek()));
    }
    return next();
  }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::Ident || t.kind == TokenKind::Number) return "'" + t.text + "'";
    return std::string(to_string(t.kind));
  }

  void skip_statement() {
    while (peek().kind != TokenKind::EndOfStatement && peek().kind != TokenKind::EndOfFile) ++pos_;
  }

  void end_of_statement() {
    if (peek().kind != TokenKind::EndOfStatement && peek().kind != TokenKind::EndOfFile) {
      throw ScriptError(peek().loc, "unexpected " + describe(peek()) + " at end of statement");
    }
  }

  bool statement_has(TokenKind kind) const {
    for (std::size_t i = pos_; i < toks_.size(); ++i) {
      if (toks_[i].kind == TokenKind::EndOfStatement || toks_[i].kind == TokenKind::EndOfFile) return false;
      if (toks_[i].kind == kind) return true;
    }
    return false;
  }

  void statement(ScriptAST& ast) {
    const SourceLoc start = peek().loc;
    if (accept(TokenKind::KwInit)) {
      const Token& name = expect(TokenKind::Ident, "after 'init:'");
      expect(TokenKind::Assign, "in init statement");
      auto e = expression();
      end_of_statement();
      reject_differentials(*e, "initial value");
      if (ast.find_init(name.text)) throw ScriptError(name.loc, "duplicate init for '" + name.text + "'");
      ast.inits.push_back(InitDef{name.text, std::move(e), start});
      return;
    }
    if (statement_has(TokenKind::KwPays)) {
      payoff(ast, start);
      return;
    }

    auto lhs = expression();
    expect(TokenKind::Assign, "in statement");
    auto rhs = expression();
    end_of_statement();

    if (lhs->kind == ExprKind::Binary && lhs->op == BinaryOp::Mul && lhs->args[0]->kind == ExprKind::Ident &&
        lhs->args[1]->kind == ExprKind::Ident && is_differential(lhs->args[0]->name) &&
        is_differential(lhs->args[1]->name)) {
      reject_differentials(*rhs, "correlation");
      const auto a = lhs->args[0]->name.substr(2);
      const auto b = lhs->args[1]->name.substr(2);
      if (a == "t" || b == "t") throw ScriptError(lhs->loc, "d_t cannot be correlated");
      ast.correlations.push_back(Correlation{a, b, std::move(rhs), start});
      return;
    }
    if (lhs->kind == ExprKind::Ident && is_differential(lhs->name)) {
      const std::string name = lhs->name.substr(2);
      if (name == "t") throw ScriptError(lhs->loc, "d_t cannot be defined");
      check_new_component(ast, name, lhs->loc);
      auto form = linear_form(rhs);
      if (!form) throw ScriptError(rhs->loc, "SDE right-hand side for '" + name + "' has no d_t or Brownian term");
      ComponentDef c;
      c.name = name;
      c.kind = ComponentKind::Sde;
      c.loc = start;
      for (auto& [key, coeff] : form->terms) {
        if (key == "t") {
          c.drift = coeff;
        } else {
          c.vol_terms.push_back(VolTerm{coeff, key});
        }
      }
      ast.components.push_back(std::move(c));
      return;
    }
    if (lhs->kind == ExprKind::Call) {
      FunctionDef f;
      f.name = lhs->name;
      f.loc = start;
      for (const auto& p : lhs->args) {
        if (p->kind != ExprKind::Ident || is_differential(p->name)) {
          throw ScriptError(p->loc, "function parameters must be plain identifiers");
        }
        f.params.push_back(p->name);
      }
      if (is_builtin_function(f.name)) throw ScriptError(lhs->loc, "'" + f.name + "' is a builtin function");
      if (ast.find_function(f.name)) throw ScriptError(lhs->loc, "duplicate function definition '" + f.name + "'");
      reject_differentials(*rhs, "function definition");
      f.body = std::move(rhs);
      ast.function_defs.push_back(std::move(f));
      return;
    }
    if (lhs->kind == ExprKind::Ident) {
      check_new_component(ast, lhs->name, lhs->loc);
      reject_differentials(*rhs, "right-hand side of '" + lhs->name + "'");
      ComponentDef c;
      c.name = lhs->name;
      c.loc = start;
      c.kind = references_name(*rhs, lhs->name) ? ComponentKind::Update : ComponentKind::Function;
      c.expr = std::move(rhs);
      ast.components.push_back(std::move(c));
      return;
    }
    throw ScriptError(lhs->loc, "malformed statement: left-hand side must be 'd_name', 'name', "
                                "'name(params)' or 'd_A*d_B'");
  }

  static void check_new_component(const ScriptAST& ast, const std::string& name, SourceLoc loc) {
    if (ast.find_component(name)) throw ScriptError(loc, "duplicate component definition '" + name + "'");
    if (name == kTime || name == kBatchSize || is_builtin_function(name)) {
      throw ScriptError(loc, "'" + name + "' is reserved");
    }
  }

  static void reject_differentials(const Expr& e, const std::string& where) {
    if (const Expr* d = first_differential(e)) {
      throw ScriptError(d->loc, "'" + d->name + "' may only appear in an SDE right-hand side, not in " + where);
    }
  }

  void payoff(ScriptAST& ast, SourceLoc start) {
    PayoffDef p;
    p.loc = start;
    p.at_time = expression();
    expect(TokenKind::Colon, "after payoff time");
    p.name = expect(TokenKind::Ident, "as payoff name").text;
    expect(TokenKind::KwPays, "after payoff name");
    p.payoff = expression();
    if (accept(TokenKind::KwDiscountBy)) {
      p.discount = expression();
    } else {
      expect(TokenKind::KwNoDiscount, "or 'discountby' after payoff expression");
    }
    end_of_statement();
    reject_differentials(*p.at_time, "payoff time");
    reject_differentials(*p.payoff, "payoff");
    if (p.discount) reject_differentials(*p.discount, "discount");
    for (const auto& q : ast.payoffs) {
      if (q.name == p.name) throw ScriptError(start, "duplicate payoff '" + p.name + "'");
    }
    ast.payoffs.push_back(std::move(p));
  }

  ExprPtr expression() {
    auto then = comparison();
    if (peek().kind == TokenKind::KwIf) {
      const SourceLoc loc = next().loc;
      auto cond = comparison();
      expect(TokenKind::KwElse, "in conditional expression");
      auto otherwise = expression();
      return Expr::make_conditional(std::move(then), std::move(cond), std::move(otherwise), loc);
    }
    return then;
  }

  ExprPtr comparison() {
    auto lhs = additive();
    static const std::map<TokenKind, BinaryOp> kOps = {
        {TokenKind::Less, BinaryOp::Less},       {TokenKind::LessEq, BinaryOp::LessEq},
        {TokenKind::Greater, BinaryOp::Greater}, {TokenKind::GreaterEq, BinaryOp::GreaterEq},
        {TokenKind::EqEq, BinaryOp::Equal},      {TokenKind::NotEq, BinaryOp::NotEqual}};
    if (const auto it = kOps.find(peek().kind); it != kOps.end()) {
      const SourceLoc loc = next().loc;
      auto rhs = additive();
      return Expr::make_binary(it->second, std::move(lhs), std::move(rhs), loc);
    }
    return lhs;
  }

  ExprPtr additive() {
    auto lhs = multiplicative();
    while (peek().kind == TokenKind::Plus || peek().kind == TokenKind::Minus) {
      const Token& op = next();
      auto rhs = multiplicative();
      lhs = Expr::make_binary(op.kind == TokenKind::Plus ? BinaryOp::Add : BinaryOp::Sub, std::move(lhs),
                              std::move(rhs), op.loc);
    }
    return lhs;
  }

  ExprPtr multiplicative() {
    auto lhs = unary();
    while (peek().kind == TokenKind::Star || peek().kind == TokenKind::Slash) {
      const Token& op = next();
      auto rhs = unary();
      lhs = Expr::make_binary(op.kind == TokenKind::Star ? BinaryOp::Mul : BinaryOp::Div, std::move(lhs),
                              std::move(rhs), op.loc);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (peek().kind == TokenKind::Minus) {
      const SourceLoc loc = next().loc;
      return Expr::make_neg(unary(), loc);
    }
    if (accept(TokenKind::Plus)) return unary();
    return primary();
  }

  std::vector<ExprPtr> expression_list(TokenKind close) {
    std::vector<ExprPtr> items;
    if (accept(close)) return items;
    do {
      items.push_back(expression());
    } while (accept(TokenKind::Comma));
    expect(close, "to close list");
    return items;
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Number:
        next();
        return Expr::make_number(t.number, t.loc);
      case TokenKind::Ident: {
        next();
        if (accept(TokenKind::LParen)) return Expr::make_call(t.text, expression_list(TokenKind::RParen), t.loc);
        if (accept(TokenKind::LBracket)) {
          auto time = expression();
          expect(TokenKind::RBracket, "to close time index");
          return Expr::make_time_index(t.text, std::move(time), t.loc);
        }
        return Expr::make_ident(t.text, t.loc);
      }
      case TokenKind::LParen: {
        next();
        auto e = expression();
        expect(TokenKind::RParen, "to close parenthesis");
        return e;
      }
      case TokenKind::LBracket:
        next();
        return Expr::make_list(expression_list(TokenKind::RBracket), t.loc);
      default:
        throw ScriptError(t.loc, "expected expression, found " + describe(t));
    }
  }

  std::span<const Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic> diags_;
};

}  // namespace

ScriptAST parse_script(std::span<const Token> tokens) {
  if (tokens.empty() || tokens.back().kind != TokenKind::EndOfFile) {
    throw ScriptError(SourceLoc{}, "token stream must end with end of file");
  }
  return Parser(tokens).parse_script();
}

ScriptAST parse_script(std::string_view source) {
  const auto tokens = tokenize(source);
  return parse_script(tokens);
}

ExprPtr parse_expression(std::string_view source) {
  const auto tokens = tokenize(source);
  return Parser(tokens).parse_single_expression();
}

}  // namespace pdml::script
