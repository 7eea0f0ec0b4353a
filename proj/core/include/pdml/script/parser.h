#pragma once

#include <span>
#include <string_view>

#include "pdml/script/ast.h"
#include "pdml/script/token.h"

namespace pdml::script {

/// Builds the AST from a token stream. Component kinds are inferred from the
/// statement shape: `d_x = ...` is an SDE, a self-referencing `x = ...` is an
/// update and any other `x = ...` a function component. Throws ScriptError.
[[nodiscard]] ScriptAST parse_script(std::span<const Token> tokens);

/// tokenize + parse_script.
[[nodiscard]] ScriptAST parse_script(std::string_view source);

/// Parses a single expression (used by tests and the config layer).
[[nodiscard]] ExprPtr parse_expression(std::string_view source);

}  // namespace pdml::script
