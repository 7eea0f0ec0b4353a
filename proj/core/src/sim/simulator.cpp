#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <mutex>
#include <thread>

#include "pdml/script/scalar_eval.h"
#include "pdml/sim/correlation.h"
#include "pdml/sim/simulator.h"
#include "pdml/util/rng.h"

namespace pdml::sim {

using graph::NodeId;
using graph::Shape;
using script::BinaryOp;
using script::Expr;
using script::ExprKind;

namespace {

constexpr NodeId kUnset = static_cast<NodeId>(-1);

graph::Op compare_op(BinaryOp op) {
  switch (op) {
    case BinaryOp::Less: return graph::Op::Less;
    case BinaryOp::LessEq: return graph::Op::LessEq;
    case BinaryOp::Greater: return graph::Op::Greater;
    case BinaryOp::GreaterEq: return graph::Op::GreaterEq;
    case BinaryOp::Equal: return graph::Op::Equal;
    case BinaryOp::NotEqual: return graph::Op::NotEqual;
    default: break;
  }
  throw SimError("internal: not a comparison");
}

bool ends_with_new(std::string_view name) {
  return name.size() > script::kNewSuffix.size() &&
         name.substr(name.size() - script::kNewSuffix.size()) == script::kNewSuffix;
}

script::ScalarLookup param_lookup(const ParamSet& params, double t) {
  return [&params, t](std::string_view name) -> std::optional<double> {
    if (name == script::kTime) return t;
    if (!params.contains(name)) return std::nullopt;
    return params.scalar_at(name, t);
  };
}

double eval_time(const Expr& e, const ParamSet& params, double t, const char* what) {
  try {
    return script::eval_scalar(e, param_lookup(params, t));
  } catch (const script::ScriptError& err) {
    throw SimError(std::string(what) + " must be a scalar expression of parameters: " + err.render("script"));
  }
}

}  // namespace

std::vector<double> required_times(const script::ValidatedScript& vs, const ParamSet& params) {
  std::vector<double> out;
  for (const auto& p : vs.expanded.payoffs) {
    const double at = eval_time(*p.at_time, params, 0.0, "payoff time");
    out.push_back(at);
    auto scan = [&](const script::ExprPtr& e) {
      if (!e) return;
      script::visit(*e, [&](const Expr& n) {
        if (n.kind == ExprKind::TimeIndex) out.push_back(eval_time(*n.args[0], params, at, "observation time"));
      });
    };
    scan(p.payoff);
    scan(p.discount);
  }
  return out;
}

// Shape-aware symbolic value for Cholesky assembly: exact zeros and ones
// stay out of the graph.
struct Sym {
  enum Kind { Zero, One, Node } kind = Zero;
  NodeId id = 0;
};

class Simulator::Builder {
 public:
  Builder(Simulator& sim, const script::ValidatedScript& vs) : sim_(sim), g_(sim.graph_), vs_(vs), ast_(vs.expanded) {}

  void build() {
    const auto& grid = sim_.grid_;
    sim_.brownians_ = vs_.brownians;
    sim_.batchsize_input_ = g_.input("batchsize", Shape::Scalar);
    make_param_inputs();

    const std::size_t nc = ast_.components.size();
    std::vector<NodeId> cur(nc, kUnset);

    // Initial state.
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& comp = ast_.components[c];
      if (comp.kind == script::ComponentKind::Function) continue;
      const auto* init = ast_.find_init(comp.name);
      Env env{&cur, nullptr, 0.0};
      cur[c] = emit(*init->expr, env);
    }
    for (std::size_t c : vs_.function_order) {
      Env env{&cur, nullptr, 0.0};
      cur[c] = emit(*ast_.components[c].expr, env);
    }
    hist_.push_back(cur);

    const std::size_t nbm = sim_.brownians_.size();
    prepare_static_correlation();

    for (std::size_t i = 0; i < grid.n_steps(); ++i) {
      const double t0 = grid.times()[i];
      const double t1 = grid.times()[i + 1];
      const double dt = grid.dt(i);
      Env prev{&cur, nullptr, t0};

      std::vector<NodeId> xi(nbm);
      for (std::size_t k = 0; k < nbm; ++k) {
        xi[k] = g_.input("xi[" + std::to_string(i) + "," + sim_.brownians_[k] + "]", Shape::Batch);
        sim_.noise_inputs_.push_back(xi[k]);
      }
      const auto& L = static_L_.empty() ? cholesky(correlation_matrix(prev), i) : static_L_;
      const NodeId sqdt = konst(std::sqrt(dt));
      std::vector<NodeId> dw(nbm);
      for (std::size_t k = 0; k < nbm; ++k) {
        NodeId acc = kUnset;
        for (std::size_t j = 0; j <= k; ++j) {
          const Sym& l = L[k * nbm + j];
          if (l.kind == Sym::Zero) continue;
          const NodeId term = l.kind == Sym::One ? xi[j] : g_.mul(l.id, xi[j]);
          acc = acc == kUnset ? term : g_.add(acc, term);
        }
        dw[k] = g_.mul(sqdt, acc);
      }

      std::vector<NodeId> next = cur;
      for (std::size_t c : vs_.sde_order) {
        const auto& comp = ast_.components[c];
        NodeId x = cur[c];
        if (comp.drift) x = g_.add(x, g_.mul(emit(*comp.drift, prev), konst(dt)));
        for (const auto& v : comp.vol_terms) {
          const std::size_t k = brownian_index(v.brownian);
          x = g_.add(x, g_.mul(emit(*v.coeff, prev), dw[k]));
        }
        next[c] = x;
      }
      for (std::size_t c : vs_.function_order) {
        Env env{&next, nullptr, t1};
        next[c] = emit(*ast_.components[c].expr, env);
      }
      for (std::size_t c : vs_.update_order) {
        Env env{&cur, &next, t1};
        next[c] = emit(*ast_.components[c].expr, env);
      }
      cur = std::move(next);
      hist_.push_back(cur);
    }

    for (const auto& p : ast_.payoffs) {
      const double at = eval_time(*p.at_time, sim_.params_, 0.0, "payoff time");
      const std::size_t idx = snap(at, p.name);
      Env env{&hist_[idx], nullptr, at};
      env.payoff = true;
      NodeId y = emit(*p.payoff, env);
      if (p.discount) y = g_.mul(y, emit(*p.discount, env));
      g_.set_label(y, "payoff " + p.name);
      g_.mark_output(y);
      sim_.payoff_nodes_.push_back(y);
      sim_.payoff_names_.push_back(p.name);
    }
  }

 private:
  struct Env {
    const std::vector<NodeId>* comps;
    const std::vector<NodeId>* news;
    double t;
    bool payoff = false;
  };

  std::size_t snap(double t, const std::string& what) const {
    if (auto i = sim_.grid_.snap(t)) return *i;
    throw SimError("observation time " + std::to_string(t) + " of '" + what + "' is not on the simulation grid");
  }

  std::size_t brownian_index(const std::string& name) const {
    auto it = std::find(sim_.brownians_.begin(), sim_.brownians_.end(), name);
    return static_cast<std::size_t>(it - sim_.brownians_.begin());
  }

  bool is_diff_input(const std::string& param, std::size_t piece) const {
    for (const auto& d : sim_.diff_wrt_) {
      if (d == param || d == sim_.params_.input_name(param, piece)) return true;
    }
    return false;
  }

  void make_param_inputs() {
    const auto& params = sim_.params_;
    std::set<std::string> wanted(vs_.externals.begin(), vs_.externals.end());
    for (const auto& d : sim_.diff_wrt_) {
      bool found = params.contains(d);
      for (const auto& name : params.names()) {
        for (std::size_t k = 0; k < params.pieces(name).size() && !found; ++k) {
          if (params.input_name(name, k) == d) {
            found = true;
            wanted.insert(name);
          }
        }
      }
      if (!found) throw SimError("cannot differentiate with respect to unbound parameter '" + d + "'");
      if (params.contains(d)) wanted.insert(d);
    }
    for (const auto& name : wanted) {
      if (!params.contains(name)) continue;
      const auto& pieces = params.pieces(name);
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        const Shape shape = pieces[k].per_path || is_diff_input(name, k) ? Shape::Batch : Shape::Scalar;
        const NodeId id = g_.input(params.input_name(name, k), shape);
        param_nodes_[{name, k}] = id;
        sim_.param_inputs_.push_back({name, k, id});
      }
    }
    sim_.diff_inputs_.assign(sim_.diff_wrt_.size(), {});
    for (std::size_t d = 0; d < sim_.diff_wrt_.size(); ++d) {
      for (const auto& pi : sim_.param_inputs_) {
        if (sim_.diff_wrt_[d] == pi.name || sim_.diff_wrt_[d] == params.input_name(pi.name, pi.piece)) {
          sim_.diff_inputs_[d].push_back(pi.node);
        }
      }
    }
  }

  NodeId konst(double v, Shape shape = Shape::Scalar) {
    auto key = std::make_pair(v, shape);
    if (auto it = consts_.find(key); it != consts_.end()) return it->second;
    const NodeId id = g_.constant(v, shape);
    consts_.emplace(key, id);
    return id;
  }

  NodeId param(const std::string& name, double t) {
    const auto& params = sim_.params_;
    if (!params.contains(name)) throw SimError("parameter '" + name + "' is not bound");
    const std::size_t k = params.piece_index(name, t);
    auto it = param_nodes_.find({name, k});
    if (it == param_nodes_.end()) throw SimError("parameter '" + name + "' is not an input of this script");
    return it->second;
  }

  NodeId component(std::size_t idx, const std::vector<NodeId>& vals) const {
    const NodeId id = vals[idx];
    if (id == kUnset) {
      throw SimError("internal: component '" + ast_.components[idx].name + "' used before it is computed");
    }
    return id;
  }

  NodeId emit(const Expr& e, const Env& env) {
    switch (e.kind) {
      case ExprKind::Number:
        return konst(e.number);
      case ExprKind::Ident: {
        if (e.name == script::kTime) return konst(env.t);
        if (e.name == script::kBatchSize) return sim_.batchsize_input_;
        if (auto idx = ast_.component_index(e.name)) return component(*idx, *env.comps);
        if (ends_with_new(e.name) && env.news) {
          const auto base = e.name.substr(0, e.name.size() - script::kNewSuffix.size());
          if (auto idx = ast_.component_index(base)) return component(*idx, *env.news);
        }
        return param(e.name, env.t);
      }
      case ExprKind::Unary:
        return g_.neg(emit(*e.args[0], env));
      case ExprKind::Binary: {
        const NodeId a = emit(*e.args[0], env);
        const NodeId b = emit(*e.args[1], env);
        switch (e.op) {
          case BinaryOp::Add: return g_.add(a, b);
          case BinaryOp::Sub: return g_.sub(a, b);
          case BinaryOp::Mul: return g_.mul(a, b);
          case BinaryOp::Div: return g_.div(a, b);
          default: return g_.compare(compare_op(e.op), a, b);
        }
      }
      case ExprKind::Conditional: {
        const NodeId then = emit(*e.args[0], env);
        const NodeId cond = emit(*e.args[1], env);
        const NodeId otherwise = emit(*e.args[2], env);
        return g_.select(cond, then, otherwise);
      }
      case ExprKind::Call: {
        const std::string& f = e.name;
        if (f == "ones" || f == "zeros") return konst(f == "ones" ? 1.0 : 0.0, Shape::Batch);
        if (f == "oneslike" || f == "zeroslike") {
          const NodeId x = emit(*e.args[0], env);
          return konst(f == "oneslike" ? 1.0 : 0.0, g_.node(x).shape);
        }
        if (f == "max" || f == "min") {
          const NodeId a = emit(*e.args[0], env);
          const NodeId b = emit(*e.args[1], env);
          return f == "max" ? g_.max(a, b) : g_.min(a, b);
        }
        const NodeId a = emit(*e.args[0], env);
        if (f == "exp") return g_.exp(a);
        if (f == "log") return g_.log(a);
        if (f == "sqrt") return g_.sqrt(a);
        if (f == "positivepart") return g_.positive_part(a);
        throw SimError("unsupported function '" + f + "'");
      }
      case ExprKind::TimeIndex: {
        if (!env.payoff) throw SimError("time-indexing is only valid in payoffs");
        const double tau = eval_time(*e.args[0], sim_.params_, env.t, "observation time");
        const std::size_t idx = snap(tau, e.name);
        return component(*ast_.component_index(e.name), hist_[idx]);
      }
      case ExprKind::List:
        break;
    }
    throw SimError("expression has no value");
  }

  // --- correlations ------------------------------------------------------

  bool is_static(const Expr& e) const {
    bool ok = true;
    script::visit(e, [&](const Expr& n) {
      if (n.kind != ExprKind::Ident) return;
      if (n.name == script::kTime || ast_.component_index(n.name) || ends_with_new(n.name)) ok = false;
      if (sim_.params_.contains(n.name) && sim_.params_.pieces(n.name).size() > 1) ok = false;
    });
    return ok;
  }

  bool reads_state(const Expr& e) const {
    bool state = false;
    script::visit(e, [&](const Expr& n) {
      if (n.kind == ExprKind::Ident && (ast_.component_index(n.name) || ends_with_new(n.name))) state = true;
    });
    return state;
  }

  // State-dependent entries use the batch mean; parameter-only entries stay
  // per path.
  std::vector<Sym> correlation_matrix(const Env& env) {
    const std::size_t n = sim_.brownians_.size();
    std::vector<Sym> sigma(n * n);
    for (std::size_t i = 0; i < n; ++i) sigma[i * n + i] = {Sym::One, 0};
    for (const auto& r : ast_.correlations) {
      const std::size_t a = brownian_index(r.brownian_a), b = brownian_index(r.brownian_b);
      NodeId v = emit(*r.expr, env);
      if (g_.node(v).shape == Shape::Batch && reads_state(*r.expr)) v = g_.reduce_mean(v);
      sigma[a * n + b] = sigma[b * n + a] = {Sym::Node, v};
    }
    return sigma;
  }

  void prepare_static_correlation() {
    bool all_static = true;
    for (const auto& r : ast_.correlations) all_static = all_static && is_static(*r.expr);
    if (!all_static) return;
    Env env{nullptr, nullptr, 0.0};
    static_L_ = cholesky(correlation_matrix(env), std::nullopt);
    // Constant correlations are checked numerically up front when every
    // entry has a scalar value.
    const std::size_t n = sim_.brownians_.size();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& r : ast_.correlations) {
      double v = 0;
      try {
        v = script::eval_scalar(*r.expr, param_lookup(sim_.params_, 0.0));
      } catch (const script::ScriptError&) {
        return;
      }
      const auto a = static_cast<Eigen::Index>(brownian_index(r.brownian_a));
      const auto b = static_cast<Eigen::Index>(brownian_index(r.brownian_b));
      sigma(a, b) = sigma(b, a) = v;
    }
    try {
      (void)cholesky_lower(sigma);
    } catch (const CorrelationError& e) {
      throw SimError(e.what());
    }
  }

  Sym mul(Sym a, Sym b) {
    if (a.kind == Sym::Zero || b.kind == Sym::Zero) return {};
    if (a.kind == Sym::One) return b;
    if (b.kind == Sym::One) return a;
    return {Sym::Node, g_.mul(a.id, b.id)};
  }
  NodeId node_of(Sym a) { return a.kind == Sym::Node ? a.id : konst(a.kind == Sym::One ? 1.0 : 0.0); }
  Sym sub(Sym a, Sym b) {
    if (b.kind == Sym::Zero) return a;
    return {Sym::Node, g_.sub(node_of(a), node_of(b))};
  }

  std::vector<Sym> cholesky(const std::vector<Sym>& sigma, std::optional<std::size_t> step) {
    const std::size_t n = sim_.brownians_.size();
    std::vector<Sym> L(n * n);
    for (std::size_t j = 0; j < n; ++j) {
      Sym s = sigma[j * n + j];
      for (std::size_t k = 0; k < j; ++k) s = sub(s, mul(L[j * n + k], L[j * n + k]));
      Sym d = s;
      if (s.kind == Sym::Node) {
        d = {Sym::Node, g_.sqrt(s.id)};
        g_.set_label(d.id, "cholesky pivot " + std::to_string(j) +
                               (step ? " at step " + std::to_string(*step) : std::string(" (constant correlation)")));
      } else if (s.kind == Sym::Zero) {
        throw SimError("correlation matrix is singular");
      }
      L[j * n + j] = d;
      for (std::size_t i = j + 1; i < n; ++i) {
        Sym v = sigma[i * n + j];
        for (std::size_t k = 0; k < j; ++k) v = sub(v, mul(L[i * n + k], L[j * n + k]));
        if (v.kind != Sym::Zero && d.kind == Sym::Node) v = {Sym::Node, g_.div(node_of(v), d.id)};
        L[i * n + j] = v;
      }
    }
    return L;
  }

  Simulator& sim_;
  graph::Graph& g_;
  const script::ValidatedScript& vs_;
  const script::ScriptAST& ast_;
  std::map<std::pair<double, Shape>, NodeId> consts_;
  std::map<std::pair<std::string, std::size_t>, NodeId> param_nodes_;
  std::vector<std::vector<NodeId>> hist_;
  std::vector<Sym> static_L_;
};

Simulator::Simulator(const script::ValidatedScript& script, ParamSet params, TimeGrid grid,
                     std::vector<std::string> diff_wrt)
    : params_(std::move(params)), grid_(std::move(grid)), diff_wrt_(std::move(diff_wrt)) {
  if (grid_.n_steps() == 0) throw SimError("simulation grid has no steps");
  Builder(*this, script).build();
}

void Simulator::rebind(ParamSet params) {
  for (const auto& pi : param_inputs_) {
    if (!params.contains(pi.name)) throw SimError("rebind: parameter '" + pi.name + "' missing");
    const auto& a = params.pieces(pi.name);
    const auto& b = params_.pieces(pi.name);
    if (a.size() != b.size() || a[pi.piece].per_path != b[pi.piece].per_path ||
        std::abs(a[pi.piece].start - b[pi.piece].start) > 0) {
      throw SimError("rebind: parameter '" + pi.name + "' changed structure");
    }
  }
  params_ = std::move(params);
}

SimOutput Simulator::run(const SimConfig& cfg) const {
  const std::size_t n = cfg.batch_size;
  if (n == 0) throw SimError("batch size must be at least 1");
  if (cfg.shard_size == 0) throw SimError("shard size must be at least 1");
  const std::size_t pp = params_.per_path_size();
  if (pp != 0 && pp != n) {
    throw SimError("per-path parameters have " + std::to_string(pp) + " values but batch size is " + std::to_string(n));
  }
  SimOutput out;
  out.n_paths = n;
  out.payoff_names = payoff_names_;
  out.diff_names = diff_wrt_;
  out.seed = cfg.seed;
  out.grid = grid_.times();
  const std::size_t n_pay = payoff_nodes_.size();
  const std::size_t n_diff = diff_wrt_.size();
  out.Y.assign(n * n_pay, 0.0);
  if (cfg.compute_dy) out.DY.assign(n * n_pay * n_diff, 0.0);

  const std::size_t n_noise = noise_inputs_.size();
  const std::size_t n_shards = (n + cfg.shard_size - 1) / cfg.shard_size;
  std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n_shards);

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::size_t err_shard = n_shards;
  std::exception_ptr err;

  auto work = [&] {
    std::vector<double> noise, column;
    while (true) {
      const std::size_t s = next.fetch_add(1);
      if (s >= n_shards) return;
      const std::size_t begin = s * cfg.shard_size;
      const std::size_t m = std::min(cfg.shard_size, n - begin);
      try {
        graph::Tape tape(graph_, m);
        const double bs = static_cast<double>(n);
        tape.bind(batchsize_input_, std::span<const double>(&bs, 1));
        for (const auto& pi : param_inputs_) {
          const auto& piece = params_.pieces(pi.name)[pi.piece];
          if (piece.per_path) {
            tape.bind(pi.node, std::span<const double>(piece.values.data() + begin, m));
          } else {
            tape.bind(pi.node, std::span<const double>(piece.values.data(), 1));
          }
        }
        noise.resize(m * n_noise);
        for (std::size_t p = 0; p < m; ++p) {
          std::span<double> row(noise.data() + p * n_noise, n_noise);
          if (cfg.noise_override) {
            for (std::size_t k = 0; k < n_noise; ++k) row[k] = cfg.noise_override(begin + p, k);
          } else {
            PathRng(cfg.seed, begin + p).fill_normals(row);
          }
        }
        column.resize(m);
        for (std::size_t k = 0; k < n_noise; ++k) {
          for (std::size_t p = 0; p < m; ++p) column[p] = noise[p * n_noise + k];
          tape.bind(noise_inputs_[k], column);
        }
        try {
          tape.forward();
        } catch (const graph::GraphError& e) {
          if (e.lane() >= 0 && graph_.node(static_cast<NodeId>(e.node())).shape == Shape::Batch) {
            throw SimError(std::string(e.what()) + " on path " + std::to_string(begin + static_cast<std::size_t>(e.lane())));
          }
          throw SimError(e.what());
        }
        for (std::size_t j = 0; j < n_pay; ++j) {
          auto v = tape.value(payoff_nodes_[j]);
          for (std::size_t p = 0; p < m; ++p) out.Y[(begin + p) * n_pay + j] = v[v.size() == 1 ? 0 : p];
        }
        if (cfg.compute_dy && n_diff > 0) {
          for (std::size_t j = 0; j < n_pay; ++j) {
            tape.backward(payoff_nodes_[j]);
            for (std::size_t d = 0; d < n_diff; ++d) {
              for (NodeId id : diff_inputs_[d]) {
                if (id > payoff_nodes_[j]) continue;
                auto a = tape.adjoint(id);
                for (std::size_t p = 0; p < m; ++p) out.DY[((begin + p) * n_pay + j) * n_diff + d] += a[p];
              }
            }
          }
        }
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (s < err_shard) {
          err_shard = s;
          err = std::current_exception();
        }
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

SimOutput simulate(const script::ValidatedScript& script, const ParamSet& params, double max_dt, const SimConfig& config,
                   const std::vector<std::string>& diff_wrt) {
  TimeGrid grid = TimeGrid::build(required_times(script, params), max_dt);
  return Simulator(script, params, std::move(grid), diff_wrt).run(config);
}

}  // namespace pdml::sim
