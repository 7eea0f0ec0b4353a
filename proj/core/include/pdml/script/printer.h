#pragma once

#include <string>

#include "pdml/script/ast.h"

namespace pdml::script {

[[nodiscard]] std::string to_source(const Expr& e);

/// Canonical script text; reparsing it yields a structurally identical AST.
[[nodiscard]] std::string pretty_print(const ScriptAST& ast);

}  // namespace pdml::script
