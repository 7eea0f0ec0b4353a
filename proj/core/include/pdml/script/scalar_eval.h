#pragma once

#include <functional>
#include <optional>
#include <string_view>

#include "pdml/script/ast.h"

namespace pdml::script {

using ScalarLookup = std::function<std::optional<double>(std::string_view)>;

/// Evaluates an expression to a double. Supports arithmetic, comparisons,
/// conditionals and the scalar builtins. Throws ScriptError for names that
/// `lookup` cannot resolve or constructs with no scalar meaning.
[[nodiscard]] double eval_scalar(const Expr& e, const ScalarLookup& lookup);

}  // namespace pdml::script
