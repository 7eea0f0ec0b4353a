#include <cmath>

#include "pdml/script/scalar_eval.h"

namespace pdml::script {

namespace {

[[noreturn]] void fail(const Expr& e, std::string msg) { throw ScriptError({Diagnostic{e.loc, std::move(msg)}}); }

}  // namespace

double eval_scalar(const Expr& e, const ScalarLookup& lookup) {
  switch (e.kind) {
    case ExprKind::Number:
      return e.number;
    case ExprKind::Ident: {
      if (auto v = lookup(e.name)) return *v;
      fail(e, "unresolved symbol " + e.name);
    }
    case ExprKind::Unary:
      return -eval_scalar(*e.args[0], lookup);
    case ExprKind::Binary: {
      const double a = eval_scalar(*e.args[0], lookup);
      const double b = eval_scalar(*e.args[1], lookup);
      switch (e.op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return a / b;
        case BinaryOp::Less: return a < b ? 1.0 : 0.0;
        case BinaryOp::LessEq: return a <= b ? 1.0 : 0.0;
        case BinaryOp::Greater: return a > b ? 1.0 : 0.0;
        case BinaryOp::GreaterEq: return a >= b ? 1.0 : 0.0;
        case BinaryOp::Equal: return a == b ? 1.0 : 0.0;
        case BinaryOp::NotEqual: return a != b ? 1.0 : 0.0;
      }
      break;
    }
    case ExprKind::Conditional:
      return eval_scalar(*e.args[1], lookup) != 0.0 ? eval_scalar(*e.args[0], lookup)
                                                    : eval_scalar(*e.args[2], lookup);
    case ExprKind::Call: {
      auto arg = [&](std::size_t i) {
        if (i >= e.args.size()) fail(e, "too few arguments to '" + e.name + "'");
        return eval_scalar(*e.args[i], lookup);
      };
      if (e.name == "exp") return std::exp(arg(0));
      if (e.name == "log") return std::log(arg(0));
      if (e.name == "sqrt") return std::sqrt(arg(0));
      if (e.name == "max") return std::max(arg(0), arg(1));
      if (e.name == "min") return std::min(arg(0), arg(1));
      if (e.name == "positivepart") return std::max(arg(0), 0.0);
      if (e.name == "oneslike") return 1.0;
      if (e.name == "zeroslike") return 0.0;
      fail(e, "'" + e.name + "' has no scalar value");
    }
    case ExprKind::TimeIndex:
      fail(e, "time-indexed value has no scalar meaning here");
    case ExprKind::List:
      fail(e, "shape list has no scalar value");
  }
  fail(e, "unsupported expression");
}

}  // namespace pdml::script
