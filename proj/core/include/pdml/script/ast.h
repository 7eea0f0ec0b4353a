#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdml/script/diagnostic.h"

namespace pdml::script {

enum class ExprKind { Number, Ident, Unary, Binary, Call, Conditional, TimeIndex, List };

enum class BinaryOp { Add, Sub, Mul, Div, Less, LessEq, Greater, GreaterEq, Equal, NotEqual };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression tree node.
///
/// Child layout per kind: Unary {operand}; Binary {lhs, rhs};
/// Call {args...}; Conditional {then, condition, otherwise};
/// TimeIndex {time}; List {elements...}.
struct Expr {
  ExprKind kind = ExprKind::Number;
  SourceLoc loc;
  double number = 0.0;
  std::string name;  // identifier, callee, or time-indexed component
  BinaryOp op = BinaryOp::Add;
  std::vector<ExprPtr> args;

  static ExprPtr make_number(double v, SourceLoc loc = {});
  static ExprPtr make_ident(std::string name, SourceLoc loc = {});
  static ExprPtr make_neg(ExprPtr operand, SourceLoc loc = {});
  static ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourceLoc loc = {});
  static ExprPtr make_call(std::string callee, std::vector<ExprPtr> args, SourceLoc loc = {});
  static ExprPtr make_conditional(ExprPtr then, ExprPtr cond, ExprPtr otherwise, SourceLoc loc = {});
  static ExprPtr make_time_index(std::string component, ExprPtr time, SourceLoc loc = {});
  static ExprPtr make_list(std::vector<ExprPtr> elems, SourceLoc loc = {});
};

/// Tree equality ignoring source locations.
[[nodiscard]] bool structurally_equal(const Expr& a, const Expr& b);
[[nodiscard]] bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

/// Calls `fn` for every node in pre-order.
void visit(const Expr& e, const std::function<void(const Expr&)>& fn);

[[nodiscard]] bool is_comparison(BinaryOp op);

enum class ComponentKind { Sde, Function, Update };

[[nodiscard]] std::string_view to_string(ComponentKind kind);

struct VolTerm {
  ExprPtr coeff;
  std::string brownian;
};

struct ComponentDef {
  std::string name;
  ComponentKind kind = ComponentKind::Sde;
  SourceLoc loc;
  ExprPtr drift;                  // Sde only; null when there is no d_t term
  std::vector<VolTerm> vol_terms;  // Sde only; empty for an ODE
  ExprPtr expr;                   // Function or Update right-hand side
};

/// Expression macro `name(p1, p2, ...) = body`.
struct FunctionDef {
  std::string name;
  std::vector<std::string> params;
  ExprPtr body;
  SourceLoc loc;
};

struct Correlation {
  std::string brownian_a;
  std::string brownian_b;
  ExprPtr expr;
  SourceLoc loc;
};

struct InitDef {
  std::string component;
  ExprPtr expr;
  SourceLoc loc;
};

struct PayoffDef {
  ExprPtr at_time;
  std::string name;
  ExprPtr payoff;
  ExprPtr discount;  // null means `nodiscount`
  SourceLoc loc;
};

struct ScriptAST {
  std::vector<FunctionDef> function_defs;
  std::vector<ComponentDef> components;
  std::vector<Correlation> correlations;
  std::vector<InitDef> inits;
  std::vector<PayoffDef> payoffs;

  [[nodiscard]] const ComponentDef* find_component(std::string_view name) const;
  [[nodiscard]] std::optional<std::size_t> component_index(std::string_view name) const;
  [[nodiscard]] const InitDef* find_init(std::string_view component) const;
  [[nodiscard]] const FunctionDef* find_function(std::string_view name) const;
};

[[nodiscard]] bool structurally_equal(const ScriptAST& a, const ScriptAST& b);

/// Reserved identifiers that are always in scope.
inline constexpr std::string_view kTime = "t";
inline constexpr std::string_view kTimeStep = "d_t";
inline constexpr std::string_view kBatchSize = "batchsize";
inline constexpr std::string_view kNewSuffix = "_new";

[[nodiscard]] bool is_builtin_function(std::string_view name);
[[nodiscard]] bool is_differential(std::string_view ident);

}  // namespace pdml::script
