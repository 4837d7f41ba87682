#include "qdag/circuit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_set>

namespace qdag {

const char* node_type_name(NodeType t) {
  switch (t) {
    case NodeType::Num: return "NUM";
    case NodeType::Esn: return "ESN";
    case NodeType::Add: return "ADD";
    case NodeType::Mul: return "MUL";
  }
  return "?";
}

std::size_t QDag::edge_count() const {
  std::size_t e = 0;
  for (const auto& ps : parents) e += ps.size();
  return e;
}

NodeId QDag::add_node(Node node, std::vector<NodeId> node_parents) {
  const NodeId id = static_cast<NodeId>(nodes.size());
  const bool is_root_kind = node.type == NodeType::Num || node.type == NodeType::Esn;

  if (is_root_kind && !node_parents.empty())
    throw Error("root-kind-with-parents: " + std::string(node_type_name(node.type)) +
                " node may not have parents");
  if (!is_root_kind && node_parents.empty())
    throw Error("missing-parents: " + std::string(node_type_name(node.type)) +
                " node needs at least one parent");

  std::unordered_set<NodeId> seen;
  for (NodeId p : node_parents) {
    if (p >= id)
      throw Error("unknown-parent: node " + std::to_string(p) + " does not exist yet");
    if (!seen.insert(p).second)
      throw Error("duplicate-parent: node " + std::to_string(p) + " listed twice");
  }

  if (node.type == NodeType::Esn) {
    VarState key{node.variable, node.state};
    if (esn_nodes.count(key))
      throw Error("duplicate-esn-pair: (" + node.variable + ", " + node.state + ")");
    esn_nodes.emplace(std::move(key), id);
  }

  nodes.push_back(std::move(node));
  parents.push_back(node_parents);
  children.emplace_back();
  for (NodeId p : node_parents) children[p].push_back(id);
  return id;
}

void QDag::register_query(const std::string& variable, const std::string& state, NodeId id) {
  if (id >= nodes.size())
    throw Error("unknown-query-node: id " + std::to_string(id) + " out of range");
  VarState key{variable, state};
  if (query_nodes.count(key))
    throw Error("duplicate-query: (" + variable + ", " + state + ")");
  query_nodes.emplace(std::move(key), id);
}

namespace {

// Kahn's algorithm with a min-heap over ready nodes. Returns an empty
// vector when a cycle prevents completion.
std::vector<NodeId> topo_or_empty(const QDag& dag) {
  const std::size_t n = dag.node_count();
  std::vector<std::size_t> indeg(n);
  for (std::size_t i = 0; i < n; ++i) indeg[i] = dag.parents[i].size();

  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<NodeId>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(static_cast<NodeId>(i));

  std::vector<NodeId> order;
  order.reserve(n);
  while (!ready.empty()) {
    NodeId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (NodeId c : dag.children[v])
      if (--indeg[c] == 0) ready.push(c);
  }
  if (order.size() != n) order.clear();
  return order;
}

}  // namespace

std::vector<NodeId> topological_order(const QDag& dag) {
  std::vector<NodeId> order = topo_or_empty(dag);
  if (order.empty() && dag.node_count() != 0)
    throw Error("cycle-detected: dag has no topological order");
  return order;
}

std::vector<Violation> validate(const QDag& dag) {
  std::vector<Violation> out;
  const std::size_t n = dag.node_count();
  if (dag.parents.size() != n || dag.children.size() != n) {
    out.push_back({"structure", 0, "parents/children tables sized differently from nodes"});
    return out;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const NodeId id = static_cast<NodeId>(i);
    const Node& nd = dag.nodes[i];
    const auto& ps = dag.parents[i];

    std::unordered_set<NodeId> seen;
    for (NodeId p : ps) {
      if (p >= n) {
        out.push_back({"unknown-parent", id, "parent " + std::to_string(p) + " out of range"});
        return out;  // adjacency unusable past this point
      }
      if (!seen.insert(p).second)
        out.push_back({"duplicate-parent", id, "parent " + std::to_string(p) + " listed twice"});
    }

    switch (nd.type) {
      case NodeType::Num:
        if (!(nd.label >= 0.0) || !std::isfinite(nd.label))
          out.push_back({"bad-label", id, "label " + std::to_string(nd.label)});
        [[fallthrough]];
      case NodeType::Esn:
        if (!ps.empty())
          out.push_back({"root-kind-with-parents", id, node_type_name(nd.type)});
        break;
      case NodeType::Add:
      case NodeType::Mul:
        if (ps.empty())
          out.push_back({"missing-parents", id, node_type_name(nd.type)});
        break;
    }
  }

  // Mirror property: m in parents(n) <=> n in children(m).
  for (std::size_t i = 0; i < n; ++i) {
    const NodeId id = static_cast<NodeId>(i);
    for (NodeId p : dag.parents[i]) {
      const auto& cs = dag.children[p];
      if (std::count(cs.begin(), cs.end(), id) != 1)
        out.push_back({"mirror-mismatch", id,
                       "edge " + std::to_string(p) + "->" + std::to_string(i) +
                           " not mirrored exactly once"});
    }
  }
  std::size_t parent_edges = dag.edge_count(), child_edges = 0;
  for (const auto& cs : dag.children) child_edges += cs.size();
  if (parent_edges != child_edges)
    out.push_back({"mirror-mismatch", 0, "edge totals differ"});

  // Esn uniqueness and index consistency.
  std::map<VarState, NodeId> esn_seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (dag.nodes[i].type != NodeType::Esn) continue;
    VarState key{dag.nodes[i].variable, dag.nodes[i].state};
    auto [it, fresh] = esn_seen.emplace(key, static_cast<NodeId>(i));
    if (!fresh)
      out.push_back({"duplicate-esn", static_cast<NodeId>(i),
                     "(" + key.first + ", " + key.second + ") also at node " +
                         std::to_string(it->second)});
  }
  if (esn_seen != dag.esn_nodes)
    out.push_back({"esn-index", 0, "esn index out of sync with nodes"});

  for (const auto& [key, id] : dag.query_nodes)
    if (id >= n)
      out.push_back({"bad-query", id, "(" + key.first + ", " + key.second + ") out of range"});

  if (topo_or_empty(dag).empty() && n != 0)
    out.push_back({"cycle", 0, "dag has no topological order"});

  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string serialize(const QDag& dag) {
  const std::vector<NodeId> order = topological_order(dag);
  std::vector<NodeId> renumber(dag.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) renumber[order[i]] = static_cast<NodeId>(i);

  std::string out = "qdag v1 " + std::to_string(dag.node_count()) + "\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const NodeId old = order[i];
    const Node& nd = dag.nodes[old];
    out += std::to_string(i);
    out += ' ';
    out += node_type_name(nd.type);
    switch (nd.type) {
      case NodeType::Num:
        out += ' ';
        out += format_double(nd.label);
        break;
      case NodeType::Esn:
        out += ' ';
        out += nd.variable;
        out += ' ';
        out += nd.state;
        break;
      case NodeType::Add:
      case NodeType::Mul:
        for (NodeId p : dag.parents[old]) {
          out += ' ';
          out += std::to_string(renumber[p]);
        }
        break;
    }
    out += '\n';
  }
  for (const auto& [key, id] : dag.query_nodes) {
    out += "query " + std::to_string(renumber[id]) + ' ' + key.first + ' ' + key.second + '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream in(line);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

[[noreturn]] void syntax(std::size_t lineno, const std::string& what) {
  throw Error("syntax-error: line " + std::to_string(lineno) + ": " + what);
}

double parse_label(const std::string& tok, std::size_t lineno) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    syntax(lineno, "bad numeric label '" + tok + "'");
  return v;
}

std::uint64_t parse_id(const std::string& tok, std::size_t lineno) {
  std::uint64_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    syntax(lineno, "bad node id '" + tok + "'");
  return v;
}

}  // namespace

QDag parse_qdag(const std::string& text) {
  QDag dag;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  bool query_section = false;
  std::uint64_t declared_count = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') continue;
    std::vector<std::string> toks = split_ws(line);
    if (toks.empty()) continue;

    if (!header_seen) {
      if (toks.size() != 3 || toks[0] != "qdag" || toks[1] != "v1")
        syntax(lineno, "expected header 'qdag v1 <node-count>'");
      declared_count = parse_id(toks[2], lineno);
      header_seen = true;
      continue;
    }

    if (toks[0] == "query") {
      query_section = true;
      if (toks.size() != 4) syntax(lineno, "expected 'query <id> <variable> <state>'");
      std::uint64_t id = parse_id(toks[1], lineno);
      if (id >= dag.node_count())
        syntax(lineno, "query references unknown node " + toks[1]);
      try {
        dag.register_query(toks[2], toks[3], static_cast<NodeId>(id));
      } catch (const Error& e) {
        syntax(lineno, e.what());
      }
      continue;
    }

    if (query_section) syntax(lineno, "node line after query section");
    if (toks.size() < 2) syntax(lineno, "truncated node line");

    std::uint64_t id = parse_id(toks[0], lineno);
    if (id != dag.node_count())
      syntax(lineno, "expected node id " + std::to_string(dag.node_count()) + ", got " + toks[0]);

    const std::string& kind = toks[1];
    try {
      if (kind == "NUM") {
        if (toks.size() != 3) syntax(lineno, "NUM takes exactly one label");
        double label = parse_label(toks[2], lineno);
        if (!(label >= 0.0) || !std::isfinite(label))
          syntax(lineno, "NUM label must be finite and >= 0");
        dag.num(label);
      } else if (kind == "ESN") {
        if (toks.size() != 4) syntax(lineno, "ESN takes '<variable> <state>'");
        dag.esn(toks[2], toks[3]);
      } else if (kind == "ADD" || kind == "MUL") {
        if (toks.size() < 3) syntax(lineno, kind + " needs at least one parent");
        std::vector<NodeId> ps;
        for (std::size_t i = 2; i < toks.size(); ++i) {
          std::uint64_t p = parse_id(toks[i], lineno);
          if (p >= id)
            throw Error("forward-reference: line " + std::to_string(lineno) + ": parent " +
                        toks[i] + " at node " + std::to_string(id));
          ps.push_back(static_cast<NodeId>(p));
        }
        dag.add_node(kind == "ADD" ? Node::add() : Node::mul(), std::move(ps));
      } else {
        syntax(lineno, "unknown node kind '" + kind + "'");
      }
    } catch (const Error& e) {
      std::string msg = e.what();
      if (msg.rfind("syntax-error", 0) == 0 || msg.rfind("forward-reference", 0) == 0) throw;
      syntax(lineno, msg);
    }
  }

  if (!header_seen) throw Error("syntax-error: empty input, missing header");
  if (declared_count != dag.node_count())
    throw Error("syntax-error: header declares " + std::to_string(declared_count) +
                " nodes, found " + std::to_string(dag.node_count()));

  std::vector<Violation> bad = validate(dag);
  if (!bad.empty())
    throw Error("invalid-qdag: " + bad.front().rule + " at node " +
                std::to_string(bad.front().node) + ": " + bad.front().detail);
  return dag;
}

}  // namespace qdag
