#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pdml/graph/activation.h"

namespace pdml::graph {

using NodeId = std::uint32_t;

enum class Op {
  Const,
  Input,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Log,
  Sqrt,
  Max,
  Min,
  PositivePart,
  Select,  // select(cond, a, b): a where cond != 0, else b
  Less,
  LessEq,
  Greater,
  GreaterEq,
  Equal,
  NotEqual,
  Act,
  ReduceMean,
};

enum class Shape : std::uint8_t { Scalar, Batch };

[[nodiscard]] std::string_view to_string(Op op);

class GraphError : public std::runtime_error {
 public:
  explicit GraphError(const std::string& msg, long node = -1, long lane = -1)
      : std::runtime_error(msg), node_(node), lane_(lane) {}
  /// Offending node and batch lane, or -1 when not applicable.
  [[nodiscard]] long node() const { return node_; }
  [[nodiscard]] long lane() const { return lane_; }

 private:
  long node_;
  long lane_;
};

struct Node {
  Op op = Op::Const;
  Shape shape = Shape::Scalar;
  std::uint8_t arity = 0;
  Activation act = Activation::Softplus;
  std::array<NodeId, 3> in{};
  double value = 0.0;  // Const only
};

/// Append-only batched expression DAG. Node inputs always have smaller ids,
/// so id order is a topological order.
class Graph {
 public:
  NodeId constant(double v, Shape shape = Shape::Scalar);
  NodeId input(std::string name, Shape shape);

  NodeId add(NodeId a, NodeId b) { return binary(Op::Add, a, b); }
  NodeId sub(NodeId a, NodeId b) { return binary(Op::Sub, a, b); }
  NodeId mul(NodeId a, NodeId b) { return binary(Op::Mul, a, b); }
  NodeId div(NodeId a, NodeId b) { return binary(Op::Div, a, b); }
  NodeId max(NodeId a, NodeId b) { return binary(Op::Max, a, b); }
  NodeId min(NodeId a, NodeId b) { return binary(Op::Min, a, b); }
  NodeId neg(NodeId a) { return unary(Op::Neg, a); }
  NodeId exp(NodeId a) { return unary(Op::Exp, a); }
  NodeId log(NodeId a) { return unary(Op::Log, a); }
  NodeId sqrt(NodeId a) { return unary(Op::Sqrt, a); }
  NodeId positive_part(NodeId a) { return unary(Op::PositivePart, a); }
  NodeId activation(Activation act, NodeId a);
  NodeId reduce_mean(NodeId a);
  NodeId compare(Op cmp, NodeId a, NodeId b);
  NodeId select(NodeId cond, NodeId a, NodeId b);

  NodeId binary(Op op, NodeId a, NodeId b);
  NodeId unary(Op op, NodeId a);

  void mark_output(NodeId id);
  void set_label(NodeId id, std::string label);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const Node& node(NodeId id) const { return nodes_.at(id); }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<NodeId>& outputs() const { return outputs_; }
  [[nodiscard]] bool is_output(NodeId id) const;

  /// Inputs in creation order.
  [[nodiscard]] const std::vector<NodeId>& input_nodes() const { return input_nodes_; }
  [[nodiscard]] const std::string& input_name(NodeId id) const;
  [[nodiscard]] NodeId input_id(std::string_view name) const;
  [[nodiscard]] bool has_input(std::string_view name) const;

  /// Label or "" when none was set.
  [[nodiscard]] std::string label(NodeId id) const;

  /// One node per line: `id op inputs shape [name/label]`.
  [[nodiscard]] std::string dump() const;

 private:
  NodeId push(Node n);
  void check_id(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> outputs_;
  std::vector<NodeId> input_nodes_;
  std::unordered_map<NodeId, std::string> input_names_;
  std::unordered_map<std::string, NodeId> input_by_name_;
  std::unordered_map<NodeId, std::string> labels_;
};

/// Forward values and adjoints for one evaluation of a graph at a fixed batch
/// size. Scalar nodes hold one value; batch nodes hold `batch` values.
class Tape {
 public:
  Tape(const Graph& g, std::size_t batch);

  /// Binds an input: one value (broadcast) or `batch` values for batch inputs.
  void bind(NodeId input, std::span<const double> values);
  void bind(std::string_view name, std::span<const double> values);
  void bind(std::string_view name, double value) { bind(name, std::span<const double>(&value, 1)); }

  /// Evaluates all nodes. Throws GraphError on unbound inputs or non-finite
  /// values (unless finite checking is disabled).
  void forward();
  void set_check_finite(bool on) { check_finite_ = on; }

  /// Reverse sweep seeded with 1 at `output` (each batch lane seeded
  /// independently). Adjoints from a previous sweep are cleared.
  void backward(NodeId output);

  [[nodiscard]] std::span<const double> value(NodeId id) const;
  [[nodiscard]] std::span<const double> adjoint(NodeId id) const;
  [[nodiscard]] std::size_t batch() const { return batch_; }
  [[nodiscard]] const Graph& graph() const { return g_; }

 private:
  [[nodiscard]] std::size_t width(NodeId id) const { return g_.node(id).shape == Shape::Batch ? batch_ : 1; }
  void check_node(NodeId id) const;

  const Graph& g_;
  std::size_t batch_;
  std::vector<std::size_t> offset_;
  std::vector<double> val_;
  std::vector<double> adj_;
  std::vector<std::uint8_t> bound_;
  std::vector<std::uint8_t> touched_;
  bool check_finite_ = true;
  bool evaluated_ = false;
};

using Bindings = std::unordered_map<std::string, std::vector<double>>;

/// Convenience wrapper: bind by name and run forward.
[[nodiscard]] Tape eval(const Graph& g, const Bindings& bindings, std::size_t batch);

/// Samplewise gradients of `output` with respect to named inputs. Batch
/// inputs yield `batch` values; scalar inputs yield one value (the sum over
/// lanes). Throws when `output` is not marked as an output.
[[nodiscard]] std::vector<std::vector<double>> grad(Tape& tape, NodeId output, const std::vector<std::string>& wrt);

}  // namespace pdml::graph
