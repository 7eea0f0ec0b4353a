#include <cstdio>

#include "pdml/script/printer.h"

namespace pdml::script {

namespace {

constexpr int kPrecConditional = 1;
constexpr int kPrecComparison = 2;
constexpr int kPrecAdditive = 3;
constexpr int kPrecMultiplicative = 4;
constexpr int kPrecUnary = 5;
constexpr int kPrecPrimary = 6;

int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Conditional: return kPrecConditional;
    case ExprKind::Unary: return kPrecUnary;
    case ExprKind::Binary:
      if (is_comparison(e.op)) return kPrecComparison;
      return (e.op == BinaryOp::Add || e.op == BinaryOp::Sub) ? kPrecAdditive : kPrecMultiplicative;
    default: return kPrecPrimary;
  }
}

std::string_view op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Less: return "<";
    case BinaryOp::LessEq: return "<=";
    case BinaryOp::Greater: return ">";
    case BinaryOp::GreaterEq: return ">=";
    case BinaryOp::Equal: return "==";
    case BinaryOp::NotEqual: return "!=";
  }
  return "?";
}

std::string number_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print(const Expr& e, int min_prec, std::string& out);

void print_list(const std::vector<ExprPtr>& items, std::string& out) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    print(*items[i], kPrecConditional, out);
  }
}

void print(const Expr& e, int min_prec, std::string& out) {
  const int prec = precedence(e);
  const bool parens = prec < min_prec;
  if (parens) out += "(";
  switch (e.kind) {
    case ExprKind::Number:
      out += number_text(e.number);
      break;
    case ExprKind::Ident:
      out += e.name;
      break;
    case ExprKind::Unary:
      out += "-";
      print(*e.args[0], kPrecUnary, out);
      break;
    case ExprKind::Binary:
      // Left-associative: equal precedence on the right needs parentheses.
      print(*e.args[0], prec, out);
      out += op_text(e.op);
      print(*e.args[1], prec + 1, out);
      break;
    case ExprKind::Call:
      out += e.name;
      out += "(";
      print_list(e.args, out);
      out += ")";
      break;
    case ExprKind::Conditional:
      print(*e.args[0], kPrecComparison, out);
      out += " if ";
      print(*e.args[1], kPrecComparison, out);
      out += " else ";
      print(*e.args[2], kPrecConditional, out);
      break;
    case ExprKind::TimeIndex:
      out += e.name;
      out += "[";
      print(*e.args[0], kPrecConditional, out);
      out += "]";
      break;
    case ExprKind::List:
      out += "[";
      print_list(e.args, out);
      out += "]";
      break;
  }
  if (parens) out += ")";
}

std::string coefficient(const Expr& e) {
  std::string out = "(";
  print(e, kPrecConditional, out);
  out += ")";
  return out;
}

}  // namespace

std::string to_source(const Expr& e) {
  std::string out;
  print(e, kPrecConditional, out);
  return out;
}

std::string pretty_print(const ScriptAST& ast) {
  std::string out;
  if (!ast.function_defs.empty()) {
    out += "# function definitions\n";
    for (const auto& f : ast.function_defs) {
      out += f.name + "(";
      for (std::size_t i = 0; i < f.params.size(); ++i) {
        if (i) out += ", ";
        out += f.params[i];
      }
      out += ") = " + to_source(*f.body) + "\n";
    }
    out += "\n";
  }
  out += "# system\n";
  for (const auto& c : ast.components) {
    if (c.kind == ComponentKind::Sde) {
      out += "d_" + c.name + " = ";
      bool first = true;
      if (c.drift) {
        out += coefficient(*c.drift) + "*d_t";
        first = false;
      }
      for (const auto& v : c.vol_terms) {
        if (!first) out += " + ";
        out += coefficient(*v.coeff) + "*d_" + v.brownian;
        first = false;
      }
      out += "\n";
    } else {
      out += c.name + " = " + to_source(*c.expr) + "\n";
    }
  }
  if (!ast.correlations.empty()) {
    out += "\n# correlations\n";
    for (const auto& r : ast.correlations) {
      out += "d_" + r.brownian_a + "*d_" + r.brownian_b + " = " + to_source(*r.expr) + "\n";
    }
  }
  if (!ast.inits.empty()) {
    out += "\n# initial values\n";
    for (const auto& i : ast.inits) out += "init: " + i.component + " = " + to_source(*i.expr) + "\n";
  }
  if (!ast.payoffs.empty()) {
    out += "\n# payoff\n";
    for (const auto& p : ast.payoffs) {
      std::string at;
      print(*p.at_time, kPrecConditional, at);
      out += at + ": " + p.name + " pays " + to_source(*p.payoff);
      out += p.discount ? " discountby " + to_source(*p.discount) : std::string(" nodiscount");
      out += "\n";
    }
  }
  return out;
}

}  // namespace pdml::script
