#ifndef QDAG_CIRCUIT_HPP
#define QDAG_CIRCUIT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qdag/error.hpp"

namespace qdag {

using NodeId = std::uint32_t;

enum class NodeType : std::uint8_t { Num, Esn, Add, Mul };

const char* node_type_name(NodeType t);

// A single circuit node. `label` is meaningful for Num nodes only,
// `variable`/`state` for Esn nodes only.
struct Node {
  NodeType type = NodeType::Num;
  double label = 0.0;
  std::string variable;
  std::string state;

  static Node num(double label) { return Node{NodeType::Num, label, {}, {}}; }
  static Node esn(std::string variable, std::string state) {
    return Node{NodeType::Esn, 0.0, std::move(variable), std::move(state)};
  }
  static Node add() { return Node{NodeType::Add, 0.0, {}, {}}; }
  static Node mul() { return Node{NodeType::Mul, 0.0, {}, {}}; }
};

using VarState = std::pair<std::string, std::string>;

struct Violation {
  std::string rule;
  NodeId node = 0;
  std::string detail;
};

// Arithmetic circuit over Num/Esn/Add/Mul nodes. Values flow from parents
// to children: roots (Num, Esn) are the inputs and the designated query
// nodes are the outputs. Node ids are dense and, for any dag built through
// add_node or parse_qdag, every node's parents have smaller ids, so
// ascending id order is a topological order.
struct QDag {
  std::vector<Node> nodes;
  std::vector<std::vector<NodeId>> parents;
  std::vector<std::vector<NodeId>> children;
  std::map<VarState, NodeId> query_nodes;
  std::map<VarState, NodeId> esn_nodes;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t edge_count() const;

  // Appends a node. Parents must already exist, which keeps the dag acyclic
  // by construction. Throws Error: unknown-parent, duplicate-parent,
  // root-kind-with-parents, missing-parents, duplicate-esn-pair.
  NodeId add_node(Node node, std::vector<NodeId> node_parents);

  NodeId num(double label) { return add_node(Node::num(label), {}); }
  NodeId esn(const std::string& variable, const std::string& state) {
    return add_node(Node::esn(variable, state), {});
  }
  NodeId add(std::vector<NodeId> ps) { return add_node(Node::add(), std::move(ps)); }
  NodeId mul(std::vector<NodeId> ps) { return add_node(Node::mul(), std::move(ps)); }

  // Marks an existing node as the query node for (variable, state).
  void register_query(const std::string& variable, const std::string& state, NodeId id);
};

// Deterministic topological order, ties broken by ascending id. Throws
// Error("cycle-detected: ...") on corrupted structure.
std::vector<NodeId> topological_order(const QDag& dag);

// Structural invariant check; empty result means the dag is well formed.
std::vector<Violation> validate(const QDag& dag);

// Canonical text form: nodes renumbered into the deterministic topological
// order, labels rendered as shortest round-trip decimals. Byte-identical
// for identical structures.
std::string serialize(const QDag& dag);

QDag parse_qdag(const std::string& text);

// Shortest decimal rendering that parses back to the same 64-bit float.
std::string format_double(double v);

}  // namespace qdag

#endif
