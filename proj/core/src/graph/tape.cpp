#include <algorithm>
#include <cmath>
#include <functional>

#include "pdml/graph/graph.h"

namespace pdml::graph {

Tape::Tape(const Graph& g, std::size_t batch) : g_(g), batch_(batch) {
  if (batch == 0) throw GraphError("batch size must be at least 1");
  offset_.resize(g.size() + 1);
  std::size_t off = 0;
  for (NodeId id = 0; id < g.size(); ++id) {
    offset_[id] = off;
    off += width(id);
  }
  offset_[g.size()] = off;
  val_.assign(off, 0.0);
  bound_.assign(g.size(), 0);
}

void Tape::bind(NodeId input, std::span<const double> values) {
  const Node& n = g_.node(input);
  if (n.op != Op::Input) throw GraphError("node " + std::to_string(input) + " is not an input");
  const std::size_t w = width(input);
  double* dst = val_.data() + offset_[input];
  if (values.size() == w) {
    std::copy(values.begin(), values.end(), dst);
  } else if (values.size() == 1) {
    std::fill(dst, dst + w, values[0]);
  } else {
    throw GraphError("input '" + g_.input_name(input) + "' expects " + std::to_string(w) + " value(s), got " +
                     std::to_string(values.size()));
  }
  bound_[input] = 1;
  evaluated_ = false;
}

void Tape::bind(std::string_view name, std::span<const double> values) { bind(g_.input_id(name), values); }

std::span<const double> Tape::value(NodeId id) const {
  return {val_.data() + offset_.at(id), width(id)};
}

std::span<const double> Tape::adjoint(NodeId id) const {
  if (adj_.empty()) throw GraphError("backward() has not been run");
  return {adj_.data() + offset_.at(id), width(id)};
}

void Tape::check_node(NodeId id) const {
  const double* v = val_.data() + offset_[id];
  const std::size_t w = width(id);
  for (std::size_t i = 0; i < w; ++i) {
    if (!std::isfinite(v[i])) {
      std::string msg = "non-finite value at node " + std::to_string(id) + " (" +
                        std::string(to_string(g_.node(id).op));
      if (auto l = g_.label(id); !l.empty()) msg += ", " + l;
      msg += ")";
      if (w > 1) msg += " in lane " + std::to_string(i);
      throw GraphError(msg, static_cast<long>(id), static_cast<long>(i));
    }
  }
}

namespace {

template <class F>
void map1(double* out, const double* a, std::size_t w, std::size_t sa, F f) {
  for (std::size_t i = 0; i < w; ++i) out[i] = f(a[i * sa]);
}

template <class F>
void map2(double* out, const double* a, const double* b, std::size_t w, std::size_t sa, std::size_t sb, F f) {
  if (sa && sb) {
    for (std::size_t i = 0; i < w; ++i) out[i] = f(a[i], b[i]);
  } else {
    for (std::size_t i = 0; i < w; ++i) out[i] = f(a[i * sa], b[i * sb]);
  }
}

}  // namespace

void Tape::forward() {
  const auto& nodes = g_.nodes();
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& n = nodes[id];
    const std::size_t w = width(id);
    double* out = val_.data() + offset_[id];
    auto in = [&](int k) { return val_.data() + offset_[n.in[k]]; };
    auto stride = [&](int k) -> std::size_t { return nodes[n.in[k]].shape == Shape::Batch ? 1 : 0; };
    switch (n.op) {
      case Op::Const:
        std::fill(out, out + w, n.value);
        break;
      case Op::Input:
        if (!bound_[id]) throw GraphError("unbound input '" + g_.input_name(id) + "'");
        break;
      case Op::Add: map2(out, in(0), in(1), w, stride(0), stride(1), std::plus<>()); break;
      case Op::Sub: map2(out, in(0), in(1), w, stride(0), stride(1), std::minus<>()); break;
      case Op::Mul: map2(out, in(0), in(1), w, stride(0), stride(1), std::multiplies<>()); break;
      case Op::Div: map2(out, in(0), in(1), w, stride(0), stride(1), std::divides<>()); break;
      case Op::Max: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return a < b ? b : a; }); break;
      case Op::Min: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return b < a ? b : a; }); break;
      case Op::Less: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return a < b ? 1.0 : 0.0; }); break;
      case Op::LessEq: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return a <= b ? 1.0 : 0.0; }); break;
      case Op::Greater: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return a > b ? 1.0 : 0.0; }); break;
      case Op::GreaterEq: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return a >= b ? 1.0 : 0.0; }); break;
      case Op::Equal: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return a == b ? 1.0 : 0.0; }); break;
      case Op::NotEqual: map2(out, in(0), in(1), w, stride(0), stride(1), [](double a, double b) { return a != b ? 1.0 : 0.0; }); break;
      case Op::Neg: map1(out, in(0), w, stride(0), [](double a) { return -a; }); break;
      case Op::Exp: map1(out, in(0), w, stride(0), [](double a) { return std::exp(a); }); break;
      case Op::Log: map1(out, in(0), w, stride(0), [](double a) { return std::log(a); }); break;
      case Op::Sqrt: map1(out, in(0), w, stride(0), [](double a) { return std::sqrt(a); }); break;
      case Op::PositivePart: map1(out, in(0), w, stride(0), [](double a) { return a > 0 ? a : 0.0; }); break;
      case Op::Act: {
        const Activation act = n.act;
        map1(out, in(0), w, stride(0), [act](double a) { return activation_value(act, a); });
        break;
      }
      case Op::Select: {
        const double* c = in(0);
        const double* a = in(1);
        const double* b = in(2);
        const std::size_t sc = stride(0), sa = stride(1), sb = stride(2);
        for (std::size_t i = 0; i < w; ++i) out[i] = c[i * sc] != 0.0 ? a[i * sa] : b[i * sb];
        break;
      }
      case Op::ReduceMean: {
        const std::size_t wi = width(n.in[0]);
        const double* a = in(0);
        double s = 0.0;
        for (std::size_t i = 0; i < wi; ++i) s += a[i];
        out[0] = s / static_cast<double>(wi);
        break;
      }
    }
    if (check_finite_ && n.op != Op::Select) check_node(id);
  }
  // Select may legitimately discard a non-finite branch; check its result.
  if (check_finite_) {
    for (NodeId id = 0; id < nodes.size(); ++id) {
      if (nodes[id].op == Op::Select) check_node(id);
    }
  }
  evaluated_ = true;
}

void Tape::backward(NodeId output) {
  if (!evaluated_) throw GraphError("backward() requires a forward() on the current bindings");
  const auto& nodes = g_.nodes();
  if (output >= nodes.size()) throw GraphError("node id " + std::to_string(output) + " does not exist");
  if (adj_.size() != val_.size()) adj_.assign(val_.size(), 0.0);
  std::fill(adj_.begin(), adj_.begin() + static_cast<std::ptrdiff_t>(offset_[output + 1]), 0.0);
  touched_.assign(output + 1, 0);
  touched_[output] = 1;
  std::fill(adj_.begin() + static_cast<std::ptrdiff_t>(offset_[output]),
            adj_.begin() + static_cast<std::ptrdiff_t>(offset_[output + 1]), 1.0);

  for (NodeId id = output + 1; id-- > 0;) {
    if (!touched_[id]) continue;
    const Node& n = nodes[id];
    const std::size_t w = width(id);
    const double* yb = adj_.data() + offset_[id];
    const double* y = val_.data() + offset_[id];
    auto a_val = [&](int k) { return val_.data() + offset_[n.in[k]]; };
    auto a_adj = [&](int k) {
      touched_[n.in[k]] = 1;
      return adj_.data() + offset_[n.in[k]];
    };
    auto stride = [&](int k) -> std::size_t { return nodes[n.in[k]].shape == Shape::Batch ? 1 : 0; };

    switch (n.op) {
      case Op::Const:
      case Op::Input:
      case Op::Less:
      case Op::LessEq:
      case Op::Greater:
      case Op::GreaterEq:
      case Op::Equal:
      case Op::NotEqual:
        break;
      case Op::Add:
      case Op::Sub: {
        double* ab = a_adj(0);
        double* bb = a_adj(1);
        const std::size_t sa = stride(0), sb = stride(1);
        const double sign = n.op == Op::Add ? 1.0 : -1.0;
        for (std::size_t i = 0; i < w; ++i) {
          ab[i * sa] += yb[i];
          bb[i * sb] += sign * yb[i];
        }
        break;
      }
      case Op::Mul: {
        const double* a = a_val(0);
        const double* b = a_val(1);
        double* ab = a_adj(0);
        double* bb = a_adj(1);
        const std::size_t sa = stride(0), sb = stride(1);
        for (std::size_t i = 0; i < w; ++i) {
          ab[i * sa] += yb[i] * b[i * sb];
          bb[i * sb] += yb[i] * a[i * sa];
        }
        break;
      }
      case Op::Div: {
        const double* b = a_val(1);
        double* ab = a_adj(0);
        double* bb = a_adj(1);
        const std::size_t sa = stride(0), sb = stride(1);
        for (std::size_t i = 0; i < w; ++i) {
          const double g = yb[i] / b[i * sb];
          ab[i * sa] += g;
          bb[i * sb] -= g * y[i];
        }
        break;
      }
      case Op::Max:
      case Op::Min: {
        const double* a = a_val(0);
        const double* b = a_val(1);
        double* ab = a_adj(0);
        double* bb = a_adj(1);
        const std::size_t sa = stride(0), sb = stride(1);
        const bool is_max = n.op == Op::Max;
        for (std::size_t i = 0; i < w; ++i) {
          const double av = a[i * sa], bv = b[i * sb];
          if (av == bv) {
            ab[i * sa] += 0.5 * yb[i];
            bb[i * sb] += 0.5 * yb[i];
          } else if ((av > bv) == is_max) {
            ab[i * sa] += yb[i];
          } else {
            bb[i * sb] += yb[i];
          }
        }
        break;
      }
      case Op::Neg: {
        double* ab = a_adj(0);
        const std::size_t sa = stride(0);
        for (std::size_t i = 0; i < w; ++i) ab[i * sa] -= yb[i];
        break;
      }
      case Op::Exp: {
        double* ab = a_adj(0);
        const std::size_t sa = stride(0);
        for (std::size_t i = 0; i < w; ++i) ab[i * sa] += yb[i] * y[i];
        break;
      }
      case Op::Log: {
        const double* a = a_val(0);
        double* ab = a_adj(0);
        const std::size_t sa = stride(0);
        for (std::size_t i = 0; i < w; ++i) ab[i * sa] += yb[i] / a[i * sa];
        break;
      }
      case Op::Sqrt: {
        double* ab = a_adj(0);
        const std::size_t sa = stride(0);
        for (std::size_t i = 0; i < w; ++i) {
          if (y[i] > 0) ab[i * sa] += yb[i] / (2.0 * y[i]);
        }
        break;
      }
      case Op::PositivePart: {
        const double* a = a_val(0);
        double* ab = a_adj(0);
        const std::size_t sa = stride(0);
        for (std::size_t i = 0; i < w; ++i) {
          if (a[i * sa] > 0) ab[i * sa] += yb[i];
        }
        break;
      }
      case Op::Act: {
        const double* a = a_val(0);
        double* ab = a_adj(0);
        const std::size_t sa = stride(0);
        for (std::size_t i = 0; i < w; ++i) ab[i * sa] += yb[i] * activation_d1(n.act, a[i * sa]);
        break;
      }
      case Op::Select: {
        const double* c = a_val(0);
        double* ab = a_adj(1);
        double* bb = a_adj(2);
        const std::size_t sc = stride(0), sa = stride(1), sb = stride(2);
        for (std::size_t i = 0; i < w; ++i) {
          if (c[i * sc] != 0.0) {
            ab[i * sa] += yb[i];
          } else {
            bb[i * sb] += yb[i];
          }
        }
        break;
      }
      case Op::ReduceMean: {
        const std::size_t wi = width(n.in[0]);
        double* ab = a_adj(0);
        const double g = yb[0] / static_cast<double>(wi);
        for (std::size_t i = 0; i < wi; ++i) ab[i] += g;
        break;
      }
    }
  }
}

Tape eval(const Graph& g, const Bindings& bindings, std::size_t batch) {
  Tape tape(g, batch);
  for (const auto& [name, values] : bindings) tape.bind(name, values);
  tape.forward();
  return tape;
}

std::vector<std::vector<double>> grad(Tape& tape, NodeId output, const std::vector<std::string>& wrt) {
  const Graph& g = tape.graph();
  if (!g.is_output(output)) throw GraphError("node " + std::to_string(output) + " is not an output node");
  tape.backward(output);
  std::vector<std::vector<double>> out;
  out.reserve(wrt.size());
  for (const auto& name : wrt) {
    const NodeId id = g.input_id(name);
    if (id > output) {
      out.emplace_back(g.node(id).shape == Shape::Batch ? tape.batch() : 1, 0.0);
      continue;
    }
    auto a = tape.adjoint(id);
    out.emplace_back(a.begin(), a.end());
  }
  return out;
}

}  // namespace pdml::graph
