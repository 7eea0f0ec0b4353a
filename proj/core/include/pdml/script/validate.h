#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pdml/script/ast.h"

namespace pdml::script {

/// A script that passed validation, with user functions inlined and the
/// per-step evaluation order fixed: SDE components advance from the previous
/// step's state, then function components, then update components, each in
/// declaration order.
struct ValidatedScript {
  ScriptAST source;    // as parsed
  ScriptAST expanded;  // user function calls inlined
  std::vector<std::size_t> sde_order;
  std::vector<std::size_t> function_order;
  std::vector<std::size_t> update_order;
  std::vector<std::string> brownians;  // order of first appearance
  std::set<std::string, std::less<>> externals;

  /// Full evaluation order as component indices.
  [[nodiscard]] std::vector<std::size_t> evaluation_order() const;
};

struct ValidationResult {
  std::optional<ValidatedScript> script;
  std::vector<Diagnostic> diagnostics;

  [[nodiscard]] bool ok() const { return script.has_value(); }
};

[[nodiscard]] ValidationResult validate(const ScriptAST& ast,
                                        const std::set<std::string, std::less<>>& external_params);

/// validate(), throwing ScriptError when there are diagnostics.
[[nodiscard]] ValidatedScript validate_or_throw(const ScriptAST& ast,
                                                const std::set<std::string, std::less<>>& external_params);

/// Free identifiers that are neither components, reserved names, builtins nor
/// function parameters; useful when no parameter set is available.
[[nodiscard]] std::set<std::string, std::less<>> infer_externals(const ScriptAST& ast);

}  // namespace pdml::script
