#include <algorithm>
#include <map>

#include "pdml/script/validate.h"

namespace pdml::script {

std::vector<std::size_t> ValidatedScript::evaluation_order() const {
  std::vector<std::size_t> order = sde_order;
  order.insert(order.end(), function_order.begin(), function_order.end());
  order.insert(order.end(), update_order.begin(), update_order.end());
  return order;
}

namespace {

enum class Context { SdeCoeff, FunctionExpr, UpdateExpr, Init, Correlation, Payoff, PayoffTime, IndexTime };

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool ends_with_new(std::string_view name) {
  return name.size() > kNewSuffix.size() && name.substr(name.size() - kNewSuffix.size()) == kNewSuffix;
}

int builtin_arity(std::string_view name) {
  if (name == "max" || name == "min") return 2;
  return 1;
}

class Validator {
 public:
  Validator(const ScriptAST& ast, const std::set<std::string, std::less<>>& externals)
      : ast_(ast), externals_(externals) {}

  ValidationResult run() {
    ValidationResult result;
    if (ast_.components.empty()) {
      report({}, "no components");
      result.diagnostics = std::move(diags_);
      return result;
    }
    check_names();
    ScriptAST expanded = expand_all();
    check_inits();
    check_references(expanded);
    auto brownians = check_brownians();

    if (!diags_.empty()) {
      std::stable_sort(diags_.begin(), diags_.end(), [](const Diagnostic& a, const Diagnostic& b) {
        return a.loc.line != b.loc.line ? a.loc.line < b.loc.line : a.loc.col < b.loc.col;
      });
      result.diagnostics = std::move(diags_);
      return result;
    }
    ValidatedScript vs;
    vs.source = ast_;
    vs.expanded = std::move(expanded);
    for (std::size_t i = 0; i < ast_.components.size(); ++i) {
      switch (ast_.components[i].kind) {
        case ComponentKind::Sde: vs.sde_order.push_back(i); break;
        case ComponentKind::Function: vs.function_order.push_back(i); break;
        case ComponentKind::Update: vs.update_order.push_back(i); break;
      }
    }
    vs.brownians = std::move(brownians);
    vs.externals = externals_;
    result.script = std::move(vs);
    return result;
  }

 private:
  void report(SourceLoc loc, std::string message) { diags_.push_back(Diagnostic{loc, std::move(message)}); }

  void check_names() {
    for (const auto& c : ast_.components) {
      if (externals_.count(c.name)) report(c.loc, "component '" + c.name + "' collides with an external parameter");
      if (ast_.find_function(c.name)) report(c.loc, "component '" + c.name + "' collides with a function definition");
    }
  }

  // --- user function inlining ----------------------------------------------

  ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr, std::less<>>& args) {
    if (e->kind == ExprKind::Ident) {
      if (const auto it = args.find(e->name); it != args.end()) return it->second;
      return e;
    }
    if (e->args.empty()) return e;
    auto copy = std::make_shared<Expr>(*e);
    for (auto& a : copy->args) a = substitute(a, args);
    return copy;
  }

  ExprPtr expand(const ExprPtr& e, int depth = 0) {
    if (!e) return e;
    if (depth > 32) {
      report(e->loc, "function expansion too deep (recursive definition?)");
      return e;
    }
    if (e->args.empty()) return e;
    auto copy = std::make_shared<Expr>(*e);
    for (auto& a : copy->args) a = expand(a, depth);
    if (copy->kind == ExprKind::Call) {
      if (const FunctionDef* f = ast_.find_function(copy->name)) {
        if (f->params.size() != copy->args.size()) {
          report(copy->loc, "function '" + f->name + "' expects " + std::to_string(f->params.size()) +
                                " argument(s), got " + std::to_string(copy->args.size()));
          return copy;
        }
        std::map<std::string, ExprPtr, std::less<>> bind;
        for (std::size_t i = 0; i < f->params.size(); ++i) bind[f->params[i]] = copy->args[i];
        return expand(substitute(f->body, bind), depth + 1);
      }
    }
    return copy;
  }

  ScriptAST expand_all() {
    ScriptAST out = ast_;
    for (auto& c : out.components) {
      c.drift = expand(c.drift);
      c.expr = expand(c.expr);
      for (auto& v : c.vol_terms) v.coeff = expand(v.coeff);
    }
    for (auto& r : out.correlations) r.expr = expand(r.expr);
    for (auto& i : out.inits) i.expr = expand(i.expr);
    for (auto& p : out.payoffs) {
      p.at_time = expand(p.at_time);
      p.payoff = expand(p.payoff);
      p.discount = expand(p.discount);
    }
    // Function bodies are checked for unknown calls only; their free names
    // are resolved at each expansion site.
    for (const auto& f : ast_.function_defs) {
      visit(*f.body, [&](const Expr& n) {
        if (n.kind == ExprKind::Call && !is_builtin_function(n.name) && !ast_.find_function(n.name)) {
          report(n.loc, "unknown function '" + n.name + "'");
        }
      });
    }
    return out;
  }

  // --- checks ----------------------------------------------------------------

  void check_inits() {
    for (const auto& c : ast_.components) {
      const InitDef* init = ast_.find_init(c.name);
      if (c.kind == ComponentKind::Function) {
        if (init) report(init->loc, "function component '" + c.name + "' must not have an init");
      } else if (!init) {
        report(c.loc, std::string(to_string(c.kind)) + " component '" + c.name + "' requires an init");
      }
    }
    for (const auto& i : ast_.inits) {
      if (!ast_.find_component(i.component)) report(i.loc, "init for unknown component '" + i.component + "'");
    }
  }

  std::string suggestions(std::string_view name) const {
    std::vector<std::pair<std::size_t, std::string>> scored;
    auto consider = [&](std::string_view cand) {
      const std::size_t d = edit_distance(name, cand);
      const std::size_t limit = std::max<std::size_t>(1, std::min<std::size_t>(3, name.size() / 3));
      if (d <= limit) scored.emplace_back(d, std::string(cand));
    };
    for (const auto& c : ast_.components) consider(c.name);
    for (const auto& e : externals_) consider(e);
    consider(kTime);
    consider(kBatchSize);
    std::sort(scored.begin(), scored.end());
    if (scored.empty()) return "";
    std::string out = " (did you mean";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, scored.size()); ++i) {
      out += (i ? ", " : " ") + scored[i].second;
    }
    return out + "?)";
  }

  void resolve(const Expr& e, Context ctx, std::size_t self) {
    switch (e.kind) {
      case ExprKind::Number:
        return;
      case ExprKind::Ident:
        resolve_ident(e, ctx, self);
        return;
      case ExprKind::TimeIndex: {
        if (ctx != Context::Payoff) {
          report(e.loc, "time-indexing '" + e.name + "[...]' is only allowed in payoff expressions");
        } else if (!ast_.find_component(e.name)) {
          report(e.loc, "time-indexed name '" + e.name + "' is not a component" + suggestions(e.name));
        }
        resolve(*e.args[0], Context::IndexTime, self);
        return;
      }
      case ExprKind::Call: {
        if (!is_builtin_function(e.name)) {
          if (!ast_.find_function(e.name)) report(e.loc, "unknown function '" + e.name + "'");
          return;
        }
        const int arity = builtin_arity(e.name);
        if (static_cast<int>(e.args.size()) != arity) {
          report(e.loc, "'" + e.name + "' expects " + std::to_string(arity) + " argument(s), got " +
                            std::to_string(e.args.size()));
        }
        for (const auto& a : e.args) {
          if (a->kind == ExprKind::List) {
            if (e.name != "ones" && e.name != "zeros") {
              report(a->loc, "shape list is only valid as argument of ones()/zeros()");
            }
            for (const auto& item : a->args) resolve(*item, ctx, self);
          } else {
            resolve(*a, ctx, self);
          }
        }
        return;
      }
      case ExprKind::List:
        report(e.loc, "shape list is only valid as argument of ones()/zeros()");
        return;
      default:
        for (const auto& a : e.args) resolve(*a, ctx, self);
        return;
    }
  }

  void resolve_ident(const Expr& e, Context ctx, std::size_t self) {
    const std::string& name = e.name;
    if (name == kTime || name == kBatchSize) return;
    if (ends_with_new(name)) {
      const std::string base = name.substr(0, name.size() - kNewSuffix.size());
      if (auto idx = ast_.component_index(base)) {
        if (ctx != Context::UpdateExpr) {
          report(e.loc, "'" + name + "' (current-step value) is only allowed in update expressions");
        } else if (*idx == self) {
          report(e.loc, "update component cannot reference its own current-step value '" + name + "'");
        } else if (*idx > self) {
          report(e.loc, "'" + name + "' refers to component '" + base + "' which is computed later in the step");
        }
        return;
      }
    }
    if (auto idx = ast_.component_index(name)) {
      const ComponentDef& c = ast_.components[*idx];
      switch (ctx) {
        case Context::FunctionExpr:
          if (*idx >= self) {
            report(e.loc, "function component '" + ast_.components[self].name + "' references '" + name +
                              "' which is declared later");
          } else if (c.kind == ComponentKind::Update) {
            report(e.loc, "function component '" + ast_.components[self].name + "' cannot reference update component '" +
                              name + "'");
          }
          return;
        case Context::Init:
          report(e.loc, "initial value cannot reference component '" + name + "'");
          return;
        case Context::PayoffTime:
        case Context::IndexTime:
          report(e.loc, "observation time cannot reference component '" + name + "'");
          return;
        default:
          return;
      }
    }
    if (externals_.count(name)) return;
    if (ast_.find_function(name)) {
      report(e.loc, "function '" + name + "' used without arguments");
      return;
    }
    report(e.loc, "unresolved symbol " + name + suggestions(name));
  }

  void check_references(const ScriptAST& expanded) {
    for (std::size_t i = 0; i < expanded.components.size(); ++i) {
      const auto& c = expanded.components[i];
      switch (c.kind) {
        case ComponentKind::Sde:
          if (c.drift) resolve(*c.drift, Context::SdeCoeff, i);
          for (const auto& v : c.vol_terms) resolve(*v.coeff, Context::SdeCoeff, i);
          break;
        case ComponentKind::Function:
          resolve(*c.expr, Context::FunctionExpr, i);
          break;
        case ComponentKind::Update:
          resolve(*c.expr, Context::UpdateExpr, i);
          break;
      }
    }
    for (const auto& r : expanded.correlations) resolve(*r.expr, Context::Correlation, 0);
    for (const auto& init : expanded.inits) resolve(*init.expr, Context::Init, 0);
    for (const auto& p : expanded.payoffs) {
      resolve(*p.at_time, Context::PayoffTime, 0);
      resolve(*p.payoff, Context::Payoff, 0);
      if (p.discount) resolve(*p.discount, Context::Payoff, 0);
    }
  }

  std::vector<std::string> check_brownians() {
    std::vector<std::string> brownians;
    for (const auto& c : ast_.components) {
      for (const auto& v : c.vol_terms) {
        if (ast_.find_component(v.brownian)) {
          report(c.loc, "'d_" + v.brownian + "' is the differential of a component, not a Brownian increment");
        }
        if (std::find(brownians.begin(), brownians.end(), v.brownian) == brownians.end()) {
          brownians.push_back(v.brownian);
        }
      }
    }
    std::vector<std::pair<std::string, std::string>> seen;
    for (const auto& r : ast_.correlations) {
      for (const auto* b : {&r.brownian_a, &r.brownian_b}) {
        if (std::find(brownians.begin(), brownians.end(), *b) == brownians.end()) {
          report(r.loc, "Brownian 'd_" + *b + "' in correlation does not appear in any vol term");
        }
      }
      if (r.brownian_a == r.brownian_b) report(r.loc, "a Brownian cannot be correlated with itself");
      auto key = std::minmax(r.brownian_a, r.brownian_b);
      std::pair<std::string, std::string> k{key.first, key.second};
      if (std::find(seen.begin(), seen.end(), k) != seen.end()) {
        report(r.loc, "duplicate correlation for d_" + r.brownian_a + ", d_" + r.brownian_b);
      }
      seen.push_back(k);
    }
    return brownians;
  }

  const ScriptAST& ast_;
  const std::set<std::string, std::less<>>& externals_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

ValidationResult validate(const ScriptAST& ast, const std::set<std::string, std::less<>>& external_params) {
  return Validator(ast, external_params).run();
}

ValidatedScript validate_or_throw(const ScriptAST& ast, const std::set<std::string, std::less<>>& external_params) {
  auto result = validate(ast, external_params);
  if (!result.ok()) throw ScriptError(std::move(result.diagnostics));
  return std::move(*result.script);
}

std::set<std::string, std::less<>> infer_externals(const ScriptAST& ast) {
  std::set<std::string, std::less<>> out;
  auto scan = [&](const ExprPtr& e, const std::vector<std::string>* params) {
    if (!e) return;
    visit(*e, [&](const Expr& n) {
      if (n.kind != ExprKind::Ident) return;
      const std::string& name = n.name;
      if (name == kTime || name == kBatchSize || is_differential(name)) return;
      if (params && std::find(params->begin(), params->end(), name) != params->end()) return;
      if (ast.find_component(name) || ast.find_function(name)) return;
      if (ends_with_new(name) && ast.find_component(name.substr(0, name.size() - kNewSuffix.size()))) return;
      out.insert(name);
    });
  };
  for (const auto& f : ast.function_defs) scan(f.body, &f.params);
  for (const auto& c : ast.components) {
    scan(c.drift, nullptr);
    scan(c.expr, nullptr);
    for (const auto& v : c.vol_terms) scan(v.coeff, nullptr);
  }
  for (const auto& r : ast.correlations) scan(r.expr, nullptr);
  for (const auto& i : ast.inits) scan(i.expr, nullptr);
  for (const auto& p : ast.payoffs) {
    scan(p.at_time, nullptr);
    scan(p.payoff, nullptr);
    scan(p.discount, nullptr);
  }
  return out;
}

}  // namespace pdml::script
