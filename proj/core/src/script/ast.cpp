#include <algorithm>
#include <array>

#include "pdml/script/ast.h"

namespace pdml::script {

ExprPtr Expr::make_number(double v, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Number;
  e->number = v;
  e->loc = loc;
  return e;
}

ExprPtr Expr::make_ident(std::string name, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Ident;
  e->name = std::move(name);
  e->loc = loc;
  return e;
}

ExprPtr Expr::make_neg(ExprPtr operand, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Unary;
  e->args = {std::move(operand)};
  e->loc = loc;
  return e;
}

ExprPtr Expr::make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Binary;
  e->op = op;
  e->args = {std::move(lhs), std::move(rhs)};
  e->loc = loc;
  return e;
}

ExprPtr Expr::make_call(std::string callee, std::vector<ExprPtr> args, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Call;
  e->name = std::move(callee);
  e->args = std::move(args);
  e->loc = loc;
  return e;
}

ExprPtr Expr::make_conditional(ExprPtr then, ExprPtr cond, ExprPtr otherwise, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Conditional;
  e->args = {std::move(then), std::move(cond), std::move(otherwise)};
  e->loc = loc;
  return e;
}

ExprPtr Expr::make_time_index(std::string component, ExprPtr time, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::TimeIndex;
  e->name = std::move(component);
  e->args = {std::move(time)};
  e->loc = loc;
  return e;
}

ExprPtr Expr::make_list(std::vector<ExprPtr> elems, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::List;
  e->args = std::move(elems);
  e->loc = loc;
  return e;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case ExprKind::Number:
      if (a.number != b.number) return false;
      break;
    case ExprKind::Ident:
    case ExprKind::Call:
    case ExprKind::TimeIndex:
      if (a.name != b.name) return false;
      break;
    case ExprKind::Binary:
      if (a.op != b.op) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!structurally_equal(a.args[i], b.args[i])) return false;
  }
  return true;
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return structurally_equal(*a, *b);
}

void visit(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  for (const auto& child : e.args) visit(*child, fn);
}

bool is_comparison(BinaryOp op) {
  return op != BinaryOp::Add && op != BinaryOp::Sub && op != BinaryOp::Mul && op != BinaryOp::Div;
}

std::string_view to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::Sde: return "sde";
    case ComponentKind::Function: return "function";
    case ComponentKind::Update: return "update";
  }
  return "?";
}

const ComponentDef* ScriptAST::find_component(std::string_view name) const {
  const auto it = std::find_if(components.begin(), components.end(),
                               [&](const ComponentDef& c) { return c.name == name; });
  return it == components.end() ? nullptr : &*it;
}

std::optional<std::size_t> ScriptAST::component_index(std::string_view name) const {
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].name == name) return i;
  }
  return std::nullopt;
}

const InitDef* ScriptAST::find_init(std::string_view component) const {
  const auto it = std::find_if(inits.begin(), inits.end(),
                               [&](const InitDef& d) { return d.component == component; });
  return it == inits.end() ? nullptr : &*it;
}

const FunctionDef* ScriptAST::find_function(std::string_view name) const {
  const auto it = std::find_if(function_defs.begin(), function_defs.end(),
                               [&](const FunctionDef& f) { return f.name == name; });
  return it == function_defs.end() ? nullptr : &*it;
}

bool structurally_equal(const ScriptAST& a, const ScriptAST& b) {
  if (a.function_defs.size() != b.function_defs.size() || a.components.size() != b.components.size() ||
      a.correlations.size() != b.correlations.size() || a.inits.size() != b.inits.size() ||
      a.payoffs.size() != b.payoffs.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.function_defs.size(); ++i) {
    const auto& x = a.function_defs[i];
    const auto& y = b.function_defs[i];
    if (x.name != y.name || x.params != y.params || !structurally_equal(x.body, y.body)) return false;
  }
  for (std::size_t i = 0; i < a.components.size(); ++i) {
    const auto& x = a.components[i];
    const auto& y = b.components[i];
    if (x.name != y.name || x.kind != y.kind || !structurally_equal(x.drift, y.drift) ||
        !structurally_equal(x.expr, y.expr) || x.vol_terms.size() != y.vol_terms.size()) {
      return false;
    }
    for (std::size_t k = 0; k < x.vol_terms.size(); ++k) {
      if (x.vol_terms[k].brownian != y.vol_terms[k].brownian ||
          !structurally_equal(x.vol_terms[k].coeff, y.vol_terms[k].coeff)) {
        return false;
      }
    }
  }
  for (std::size_t i = 0; i < a.correlations.size(); ++i) {
    const auto& x = a.correlations[i];
    const auto& y = b.correlations[i];
    if (x.brownian_a != y.brownian_a || x.brownian_b != y.brownian_b || !structurally_equal(x.expr, y.expr)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.inits.size(); ++i) {
    if (a.inits[i].component != b.inits[i].component || !structurally_equal(a.inits[i].expr, b.inits[i].expr)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.payoffs.size(); ++i) {
    const auto& x = a.payoffs[i];
    const auto& y = b.payoffs[i];
    if (x.name != y.name || !structurally_equal(x.at_time, y.at_time) || !structurally_equal(x.payoff, y.payoff) ||
        !structurally_equal(x.discount, y.discount)) {
      return false;
    }
  }
  return true;
}

bool is_builtin_function(std::string_view name) {
  static constexpr std::array<std::string_view, 10> kBuiltins = {
      "exp", "log", "sqrt", "max", "min", "positivepart", "oneslike", "zeroslike", "ones", "zeros"};
  return std::find(kBuiltins.begin(), kBuiltins.end(), name) != kBuiltins.end();
}

bool is_differential(std::string_view ident) { return ident.size() > 2 && ident.substr(0, 2) == "d_"; }

}  // namespace pdml::script
