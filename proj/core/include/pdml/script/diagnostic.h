#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pdml::script {

struct SourceLoc {
  int line = 1;
  int col = 1;

  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
};

struct Diagnostic {
  SourceLoc loc;
  std::string message;

  /// Renders as `file:line:col: message`.
  [[nodiscard]] std::string render(std::string_view file) const;
};

/// Lexical, syntactic or semantic failure in a script. Carries every
/// diagnostic collected before giving up.
class ScriptError : public std::runtime_error {
 public:
  explicit ScriptError(std::vector<Diagnostic> diags);
  ScriptError(SourceLoc loc, std::string message);

  [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }
  [[nodiscard]] std::string render(std::string_view file) const;

 private:
  std::vector<Diagnostic> diags_;
};

}  // namespace pdml::script
