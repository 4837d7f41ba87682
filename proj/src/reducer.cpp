#include "qdag/reducer.hpp"

#include <algorithm>
#include <chrono>
#include <deque>

namespace qdag {

namespace {

void rebuild_children(QDag& dag) {
  const std::size_t n = dag.node_count();
  for (auto& cs : dag.children) cs.clear();
  for (std::size_t m = 0; m < n; ++m)
    for (NodeId p : dag.parents[m]) dag.children[p].push_back(static_cast<NodeId>(m));
}

PassReport begin_pass(const char* name, const QDag& dag) {
  PassReport r;
  r.pass = name;
  r.nodes_before = r.nodes_after = dag.node_count();
  r.edges_before = r.edges_after = dag.edge_count();
  return r;
}

bool is_num(const Node& n, double label) {
  return n.type == NodeType::Num && n.label == label;
}

PassReport eliminate_identity(QDag& dag, const char* name, NodeType target, double identity) {
  PassReport rep = begin_pass(name, dag);
  bool changed = false;

  for (std::size_t m = 0; m < dag.node_count(); ++m) {
    ++rep.operations;
    if (dag.nodes[m].type != target) continue;
    auto& ps = dag.parents[m];
    rep.operations += ps.size();
    auto cut = std::remove_if(ps.begin(), ps.end(),
                              [&](NodeId p) { return is_num(dag.nodes[p], identity); });
    if (cut == ps.end()) continue;
    ps.erase(cut, ps.end());
    changed = true;
    if (ps.empty()) dag.nodes[m] = Node::num(identity);  // empty sum / empty product
  }

  if (changed) rebuild_children(dag);
  rep.nodes_after = dag.node_count();
  rep.edges_after = dag.edge_count();
  return rep;
}

}  // namespace

PassReport eliminate_identity_zero(QDag& dag) {
  return eliminate_identity(dag, "identity-zero", NodeType::Add, 0.0);
}

PassReport eliminate_identity_one(QDag& dag) {
  return eliminate_identity(dag, "identity-one", NodeType::Mul, 1.0);
}

PassReport numeric_reduction(QDag& dag) {
  PassReport rep = begin_pass("numeric-reduction", dag);
  const std::size_t n = dag.node_count();

  std::vector<std::size_t> indeg(n, 0);
  std::deque<NodeId> queue;
  for (std::size_t i = 0; i < n; ++i) {
    ++rep.operations;
    if (dag.nodes[i].type == NodeType::Num)
      queue.push_back(static_cast<NodeId>(i));
    else
      indeg[i] = dag.parents[i].size();
  }

  bool changed = false;
  while (!queue.empty()) {
    NodeId p = queue.front();
    queue.pop_front();
    for (NodeId m : dag.children[p]) {
      ++rep.operations;
      const NodeType t = dag.nodes[m].type;
      if (t != NodeType::Add && t != NodeType::Mul) continue;  // converted earlier in this pass
      if (--indeg[m] != 0) continue;

      // All parents numeric: fold in parent-list order, matching the
      // accumulation order the evaluator uses.
      double v = t == NodeType::Add ? 0.0 : 1.0;
      for (NodeId q : dag.parents[m]) {
        if (t == NodeType::Add)
          v += dag.nodes[q].label;
        else
          v *= dag.nodes[q].label;
        ++rep.operations;
      }
      dag.nodes[m] = Node::num(v);
      dag.parents[m].clear();
      queue.push_back(m);
      changed = true;
    }
  }

  if (changed) rebuild_children(dag);
  rep.nodes_after = dag.node_count();
  rep.edges_after = dag.edge_count();
  return rep;
}

PassReport zero_compression(QDag& dag, const ValueState& values) {
  if (&values.dag() != &dag)
    throw Error("values-not-initialized: value table belongs to a different dag");
  if (values.values().size() != dag.node_count())
    throw Error("values-not-initialized: value table size mismatch");
  if (!values.all_esns_unknown())
    throw Error("values-not-initialized: ESN settings are not all 1");

  PassReport rep = begin_pass("zero-compression", dag);
  bool changed = false;
  for (std::size_t i = 0; i < dag.node_count(); ++i) {
    ++rep.operations;
    if (values.value(static_cast<NodeId>(i)) != 0.0) continue;
    if (dag.nodes[i].type == NodeType::Num) continue;  // already a zero constant
    dag.nodes[i] = Node::num(0.0);
    dag.parents[i].clear();
    ++rep.operations;
    changed = true;
  }

  if (changed) rebuild_children(dag);
  rep.nodes_after = dag.node_count();
  rep.edges_after = dag.edge_count();
  return rep;
}

std::pair<QDag, PassReport> sweep_dead_nodes(const QDag& dag) {
  PassReport rep = begin_pass("sweep", dag);
  const std::size_t n = dag.node_count();

  // Upward closure of the query set along parent edges: exactly the nodes
  // from which a query node is reachable via child edges.
  std::vector<char> keep(n, 0);
  std::deque<NodeId> frontier;
  for (const auto& [key, id] : dag.query_nodes)
    if (!keep[id]) {
      keep[id] = 1;
      frontier.push_back(id);
    }
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop_front();
    ++rep.operations;
    for (NodeId p : dag.parents[v]) {
      ++rep.operations;
      if (!keep[p]) {
        keep[p] = 1;
        frontier.push_back(p);
      }
    }
  }

  QDag out;
  std::vector<NodeId> renumber(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++rep.operations;
    if (!keep[i]) {
      if (dag.nodes[i].type == NodeType::Esn)
        rep.removed_esns.emplace_back(dag.nodes[i].variable, dag.nodes[i].state);
      continue;
    }
    std::vector<NodeId> ps;
    ps.reserve(dag.parents[i].size());
    for (NodeId p : dag.parents[i]) ps.push_back(renumber[p]);  // parents always kept
    rep.operations += ps.size();
    renumber[i] = out.add_node(dag.nodes[i], std::move(ps));
  }
  for (const auto& [key, id] : dag.query_nodes)
    out.register_query(key.first, key.second, renumber[id]);

  rep.nodes_after = out.node_count();
  rep.edges_after = out.edge_count();
  return {std::move(out), std::move(rep)};
}

namespace {

void check_clean(const QDag& dag, const char* after) {
  std::vector<Violation> bad = validate(dag);
  if (!bad.empty())
    throw std::logic_error(std::string("reducer corrupted dag after ") + after + ": " +
                           bad.front().rule + " at node " + std::to_string(bad.front().node));
}

}  // namespace

std::pair<QDag, ReductionReport> reduce(const QDag& dag) {
  const auto t0 = std::chrono::steady_clock::now();
  ReductionReport rep;
  QDag cur = dag;

  for (;;) {
    const std::size_t n0 = cur.node_count();
    const std::size_t e0 = cur.edge_count();

    {
      ValueState values(cur);  // initialize: all ESNs at 1
      rep.passes.push_back(zero_compression(cur, values));
    }
    check_clean(cur, "zero-compression");
    rep.passes.push_back(eliminate_identity_zero(cur));
    check_clean(cur, "identity-zero");
    rep.passes.push_back(eliminate_identity_one(cur));
    check_clean(cur, "identity-one");
    rep.passes.push_back(numeric_reduction(cur));
    check_clean(cur, "numeric-reduction");

    auto [swept, sweep_rep] = sweep_dead_nodes(cur);
    cur = std::move(swept);
    check_clean(cur, "sweep");
    for (const auto& e : sweep_rep.removed_esns) rep.removed_esns.push_back(e);
    rep.passes.push_back(std::move(sweep_rep));

    ++rep.cycles;
    if (cur.node_count() == n0 && cur.edge_count() == e0) break;
  }

  for (const auto& p : rep.passes) rep.total_operations += p.operations;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(cur), std::move(rep)};
}

std::vector<std::string> reduction_completeness_violations(const QDag& dag) {
  std::vector<std::string> out;
  const std::size_t n = dag.node_count();

  for (std::size_t m = 0; m < n; ++m) {
    const NodeType t = dag.nodes[m].type;
    if (t != NodeType::Add && t != NodeType::Mul) continue;
    bool all_numeric = true;
    for (NodeId p : dag.parents[m]) {
      const Node& pn = dag.nodes[p];
      all_numeric &= (pn.type == NodeType::Num);
      if (t == NodeType::Add && is_num(pn, 0.0))
        out.push_back("add node " + std::to_string(m) + " has Num(0) parent " + std::to_string(p));
      if (t == NodeType::Mul && (is_num(pn, 0.0) || is_num(pn, 1.0)))
        out.push_back("mul node " + std::to_string(m) + " has Num(" + format_double(pn.label) +
                      ") parent " + std::to_string(p));
    }
    if (all_numeric)
      out.push_back(std::string(t == NodeType::Add ? "add" : "mul") + " node " +
                    std::to_string(m) + " has all-numeric parents");
  }

  std::vector<char> keep(n, 0);
  std::deque<NodeId> frontier;
  for (const auto& [key, id] : dag.query_nodes)
    if (!keep[id]) {
      keep[id] = 1;
      frontier.push_back(id);
    }
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop_front();
    for (NodeId p : dag.parents[v])
      if (!keep[p]) {
        keep[p] = 1;
        frontier.push_back(p);
      }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!keep[i]) out.push_back("node " + std::to_string(i) + " unreachable from the query set");

  return out;
}

namespace {

std::string kv_pass_name(const std::string& name) {
  std::string out = name;
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

}  // namespace

std::string ReductionReport::to_text() const {
  std::string out;
  for (const auto& p : passes) {
    out += p.pass + ": nodes " + std::to_string(p.nodes_before) + " -> " +
           std::to_string(p.nodes_after) + ", edges " + std::to_string(p.edges_before) + " -> " +
           std::to_string(p.edges_after) + ", ops " + std::to_string(p.operations);
    if (!p.removed_esns.empty()) {
      out += ", removed esns:";
      for (const auto& [v, s] : p.removed_esns) out += " (" + v + "," + s + ")";
    }
    out += '\n';
  }
  out += "cycles " + std::to_string(cycles) + ", total ops " + std::to_string(total_operations) +
         ", wall " + format_double(wall_seconds) + "s\n";
  return out;
}

std::string ReductionReport::to_kv() const {
  std::string out;
  std::size_t i = 0;
  for (const auto& p : passes) {
    const std::string prefix = "pass" + std::to_string(i++) + "." + kv_pass_name(p.pass);
    out += prefix + ".nodes_before=" + std::to_string(p.nodes_before) + '\n';
    out += prefix + ".nodes_after=" + std::to_string(p.nodes_after) + '\n';
    out += prefix + ".edges_before=" + std::to_string(p.edges_before) + '\n';
    out += prefix + ".edges_after=" + std::to_string(p.edges_after) + '\n';
    out += prefix + ".operations=" + std::to_string(p.operations) + '\n';
  }
  out += "cycles=" + std::to_string(cycles) + '\n';
  out += "total_operations=" + std::to_string(total_operations) + '\n';
  out += "removed_esns=" + std::to_string(removed_esns.size()) + '\n';
  out += "wall_seconds=" + format_double(wall_seconds) + '\n';
  return out;
}

}  // namespace qdag
