#include <algorithm>
#include <sstream>

#include "pdml/graph/graph.h"

namespace pdml::graph {

std::string_view to_string(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Input: return "input";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Max: return "max";
    case Op::Min: return "min";
    case Op::PositivePart: return "positivepart";
    case Op::Select: return "select";
    case Op::Less: return "lt";
    case Op::LessEq: return "le";
    case Op::Greater: return "gt";
    case Op::GreaterEq: return "ge";
    case Op::Equal: return "eq";
    case Op::NotEqual: return "ne";
    case Op::Act: return "act";
    case Op::ReduceMean: return "reduce_mean";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Softplus: return "softplus";
    case Activation::Elu: return "elu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Swish: return "swish";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::Softplus, Activation::Elu, Activation::Sigmoid, Activation::Swish}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

namespace {

Shape join(Shape a, Shape b) { return a == Shape::Batch || b == Shape::Batch ? Shape::Batch : Shape::Scalar; }

bool is_compare(Op op) {
  return op == Op::Less || op == Op::LessEq || op == Op::Greater || op == Op::GreaterEq || op == Op::Equal ||
         op == Op::NotEqual;
}

}  // namespace

void Graph::check_id(NodeId id) const {
  if (id >= nodes_.size()) throw GraphError("node id " + std::to_string(id) + " does not exist");
}

NodeId Graph::push(Node n) {
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant(double v, Shape shape) {
  Node n;
  n.op = Op::Const;
  n.shape = shape;
  n.value = v;
  return push(n);
}

NodeId Graph::input(std::string name, Shape shape) {
  if (input_by_name_.count(name)) throw GraphError("duplicate input '" + name + "'");
  Node n;
  n.op = Op::Input;
  n.shape = shape;
  const NodeId id = push(n);
  input_nodes_.push_back(id);
  input_by_name_.emplace(name, id);
  input_names_.emplace(id, std::move(name));
  return id;
}

NodeId Graph::binary(Op op, NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  switch (op) {
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Max: case Op::Min:
      break;
    default:
      if (!is_compare(op)) throw GraphError("'" + std::string(to_string(op)) + "' is not a binary op");
  }
  Node n;
  n.op = op;
  n.arity = 2;
  n.in = {a, b, 0};
  n.shape = join(nodes_[a].shape, nodes_[b].shape);
  return push(n);
}

NodeId Graph::unary(Op op, NodeId a) {
  check_id(a);
  switch (op) {
    case Op::Neg: case Op::Exp: case Op::Log: case Op::Sqrt: case Op::PositivePart:
      break;
    default:
      throw GraphError("'" + std::string(to_string(op)) + "' is not a unary op");
  }
  Node n;
  n.op = op;
  n.arity = 1;
  n.in = {a, 0, 0};
  n.shape = nodes_[a].shape;
  return push(n);
}

NodeId Graph::activation(Activation act, NodeId a) {
  check_id(a);
  Node n;
  n.op = Op::Act;
  n.arity = 1;
  n.act = act;
  n.in = {a, 0, 0};
  n.shape = nodes_[a].shape;
  return push(n);
}

NodeId Graph::reduce_mean(NodeId a) {
  check_id(a);
  Node n;
  n.op = Op::ReduceMean;
  n.arity = 1;
  n.in = {a, 0, 0};
  n.shape = Shape::Scalar;
  return push(n);
}

NodeId Graph::compare(Op cmp, NodeId a, NodeId b) {
  if (!is_compare(cmp)) throw GraphError("'" + std::string(to_string(cmp)) + "' is not a comparison");
  return binary(cmp, a, b);
}

NodeId Graph::select(NodeId cond, NodeId a, NodeId b) {
  check_id(cond);
  check_id(a);
  check_id(b);
  Node n;
  n.op = Op::Select;
  n.arity = 3;
  n.in = {cond, a, b};
  n.shape = join(nodes_[cond].shape, join(nodes_[a].shape, nodes_[b].shape));
  return push(n);
}

void Graph::mark_output(NodeId id) {
  check_id(id);
  if (!is_output(id)) outputs_.push_back(id);
}

bool Graph::is_output(NodeId id) const { return std::find(outputs_.begin(), outputs_.end(), id) != outputs_.end(); }

void Graph::set_label(NodeId id, std::string label) {
  check_id(id);
  labels_[id] = std::move(label);
}

std::string Graph::label(NodeId id) const {
  if (auto it = labels_.find(id); it != labels_.end()) return it->second;
  if (auto it = input_names_.find(id); it != input_names_.end()) return it->second;
  return "";
}

const std::string& Graph::input_name(NodeId id) const {
  auto it = input_names_.find(id);
  if (it == input_names_.end()) throw GraphError("node " + std::to_string(id) + " is not an input");
  return it->second;
}

NodeId Graph::input_id(std::string_view name) const {
  auto it = input_by_name_.find(std::string(name));
  if (it == input_by_name_.end()) throw GraphError("no input named '" + std::string(name) + "'");
  return it->second;
}

bool Graph::has_input(std::string_view name) const { return input_by_name_.count(std::string(name)) != 0; }

std::string Graph::dump() const {
  std::ostringstream os;
  os.precision(17);
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    os << id << ' ' << to_string(n.op);
    if (n.op == Op::Act) os << ':' << to_string(n.act);
    os << " [";
    for (int k = 0; k < n.arity; ++k) os << (k ? "," : "") << n.in[k];
    os << "] " << (n.shape == Shape::Batch ? "batch" : "scalar");
    if (n.op == Op::Const) os << " =" << n.value;
    if (auto l = label(id); !l.empty()) os << " \"" << l << '"';
    if (is_output(id)) os << " out";
    os << '\n';
  }
  return os.str();
}

}  // namespace pdml::graph
