#include "qdag/evaluator.hpp"

#include <algorithm>
#include <cmath>

namespace qdag {

ValueState::ValueState(const QDag& dag, EvalMode mode) : dag_(&dag), mode_(mode) {
  std::vector<Violation> bad = validate(dag);
  if (!bad.empty())
    throw Error("invalid-qdag: " + bad.front().rule + " at node " + std::to_string(bad.front().node));

  const std::size_t n = dag.node_count();
  value_.assign(n, 0.0);
  mul_zero_parents_.assign(n, 0);
  mul_nonzero_prod_.assign(n, 1.0);
  touched_at_.assign(n, 0);
  pending_at_.assign(n, 0);
  wave_old_.assign(n, 0.0);
  wave_touched_.assign(n, 0);

  for (const auto& [key, id] : dag.esn_nodes) esn_by_var_[key.first].emplace_back(key.second, id);
  for (auto& [var, states] : esn_by_var_) {
    std::sort(states.begin(), states.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    esn_variables_.push_back(var);
    observed_[var] = std::nullopt;
  }

  initialize();
}

void ValueState::initialize() {
  const std::size_t n = dag_->node_count();
  for (std::size_t i = 0; i < n; ++i) {
    const Node& nd = dag_->nodes[i];
    switch (nd.type) {
      case NodeType::Num:
        value_[i] = nd.label;
        break;
      case NodeType::Esn:
        value_[i] = 1.0;
        break;
      case NodeType::Add: {
        double v = 0.0;
        for (NodeId p : dag_->parents[i]) v += value_[p];
        counters_.arithmetic_ops += dag_->parents[i].size();
        value_[i] = v;
        break;
      }
      case NodeType::Mul: {
        double v = 1.0;
        for (NodeId p : dag_->parents[i]) v *= value_[p];
        counters_.arithmetic_ops += dag_->parents[i].size();
        value_[i] = v;
        break;
      }
    }
  }
  if (mode_ == EvalMode::Stabilized) rebuild_mul_aux();
  for (auto& [var, obs] : observed_) obs = std::nullopt;
}

void ValueState::rebuild_mul_aux() {
  const std::size_t n = dag_->node_count();
  for (std::size_t i = 0; i < n; ++i) {
    if (dag_->nodes[i].type != NodeType::Mul) continue;
    std::uint32_t zeros = 0;
    double prod = 1.0;
    for (NodeId p : dag_->parents[i]) {
      if (value_[p] == 0.0)
        ++zeros;
      else
        prod *= value_[p];
    }
    mul_zero_parents_[i] = zeros;
    mul_nonzero_prod_[i] = prod;
  }
}

double ValueState::esn_setting(NodeId id) const {
  if (id >= dag_->node_count() || dag_->nodes[id].type != NodeType::Esn)
    throw Error("not-an-esn-node: node " + std::to_string(id));
  return value_[id];
}

bool ValueState::all_esns_unknown() const {
  for (const auto& [key, id] : dag_->esn_nodes)
    if (value_[id] != 1.0) return false;
  return true;
}

void ValueState::begin_op() {
  ++epoch_;
  visited_ = 0;
  counters_.last_op_visited = 0;
  counters_.last_op_edges = 0;
}

void ValueState::count_visit(NodeId n) {
  if (touched_at_[n] != epoch_) {
    touched_at_[n] = epoch_;
    ++visited_;
  }
}

double ValueState::value_of_mul_node(NodeId n) {
  ++counters_.mul_recomputes;
  double v = 1.0;
  for (NodeId p : dag_->parents[n]) v *= value_[p];
  counters_.arithmetic_ops += dag_->parents[n].size();
  return v;
}

void ValueState::deliver(NodeId m, double parent_old, double parent_new) {
  ++counters_.last_op_edges;
  ++counters_.edge_traversals;
  const double cur = value_[m];
  double next = cur;
  if (dag_->nodes[m].type == NodeType::Add) {
    next = cur - parent_old + parent_new;
    counters_.arithmetic_ops += 2;
  } else if (mode_ == EvalMode::Paper) {
    if (parent_old == 0.0) {
      next = value_of_mul_node(m);
    } else {
      next = cur / parent_old * parent_new;
      counters_.arithmetic_ops += 2;
    }
  } else {
    // Bookkeeping commits even when the visible value cannot change
    // (another parent still holds this Mul at zero).
    if (parent_old == 0.0) {
      --mul_zero_parents_[m];
      mul_nonzero_prod_[m] *= parent_new;
      ++counters_.arithmetic_ops;
    } else if (parent_new == 0.0) {
      ++mul_zero_parents_[m];
      mul_nonzero_prod_[m] /= parent_old;
      ++counters_.arithmetic_ops;
    } else {
      mul_nonzero_prod_[m] = mul_nonzero_prod_[m] / parent_old * parent_new;
      counters_.arithmetic_ops += 2;
    }
    next = mul_zero_parents_[m] > 0 ? 0.0 : mul_nonzero_prod_[m];
  }

  if (next != cur) {
    count_visit(m);
    if (wave_touched_[m] != wave_) {
      wave_touched_[m] = wave_;
      wave_old_[m] = cur;
    }
    value_[m] = next;
    if (pending_at_[m] != wave_) {
      pending_at_[m] = wave_;
      heap_.push_back(m);
      std::push_heap(heap_.begin(), heap_.end(), std::greater<NodeId>{});
    }
  }
}

void ValueState::propagate() {
  // Min-heap on node id; ids are topologically ordered, so every node pops
  // after all of its changed parents and at most once per wave.
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), std::greater<NodeId>{});
    NodeId n = heap_.back();
    heap_.pop_back();
    const double old = wave_old_[n];
    const double cur = value_[n];
    if (old == cur) continue;  // reconverged, nothing to tell the children
    for (NodeId m : dag_->children[n]) deliver(m, old, cur);
  }
}

std::size_t ValueState::flip(NodeId esn, double v) {
  if (esn >= dag_->node_count() || dag_->nodes[esn].type != NodeType::Esn)
    throw Error("not-an-esn-node: node " + std::to_string(esn));
  if (v != 0.0 && v != 1.0)
    throw Error("bad-esn-value: must be 0 or 1, got " + format_double(v));

  const double old = value_[esn];
  if (old == v) return 0;

  ++wave_;
  count_visit(esn);
  wave_touched_[esn] = wave_;
  wave_old_[esn] = old;
  value_[esn] = v;
  pending_at_[esn] = wave_;
  heap_.push_back(esn);
  std::push_heap(heap_.begin(), heap_.end(), std::greater<NodeId>{});
  propagate();
  return 1;
}

std::size_t ValueState::set_evidence(NodeId esn, double v) {
  begin_op();
  flip(esn, v);
  counters_.last_op_visited = visited_;
  counters_.nodes_visited += visited_;
  return visited_;
}

const std::vector<std::pair<std::string, NodeId>>& ValueState::esns_of(
    const std::string& variable) const {
  auto it = esn_by_var_.find(variable);
  if (it == esn_by_var_.end())
    throw Error("unknown-variable: no evidence-specific nodes for '" + variable + "'");
  return it->second;
}

std::size_t ValueState::observe(const std::string& variable, const std::string& state) {
  const auto& states = esns_of(variable);
  bool known = false;
  for (const auto& [s, id] : states) known |= (s == state);
  if (!known)
    throw Error("unknown-state: variable '" + variable + "' has no state '" + state + "'");

  begin_op();
  for (const auto& [s, id] : states) flip(id, s == state ? 1.0 : 0.0);
  observed_[variable] = state;
  counters_.last_op_visited = visited_;
  counters_.nodes_visited += visited_;
  return visited_;
}

std::size_t ValueState::retract(const std::string& variable) {
  const auto& states = esns_of(variable);
  begin_op();
  for (const auto& [s, id] : states) flip(id, 1.0);
  observed_[variable] = std::nullopt;
  counters_.last_op_visited = visited_;
  counters_.nodes_visited += visited_;
  return visited_;
}

double ValueState::query(const std::string& variable, const std::string& state) const {
  auto it = dag_->query_nodes.find({variable, state});
  if (it == dag_->query_nodes.end())
    throw Error("unknown-query-node: (" + variable + ", " + state + ")");
  return value_[it->second];
}

std::map<std::string, double> ValueState::posterior(const std::string& variable) const {
  std::map<std::string, double> raw;
  auto it = dag_->query_nodes.lower_bound({variable, ""});
  for (; it != dag_->query_nodes.end() && it->first.first == variable; ++it)
    raw[it->first.second] = value_[it->second];
  if (raw.empty())
    throw Error("unknown-query-node: no query nodes for variable '" + variable + "'");

  double sum = 0.0;
  for (const auto& [s, v] : raw) sum += v;
  if (sum == 0.0)
    throw Error("zero-probability-evidence: all query values for '" + variable + "' are 0");
  for (auto& [s, v] : raw) v /= sum;
  return raw;
}

double ValueState::recompute_all() {
  const std::size_t n = dag_->node_count();
  double max_dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Node& nd = dag_->nodes[i];
    double v = value_[i];
    switch (nd.type) {
      case NodeType::Num:
        v = nd.label;
        break;
      case NodeType::Esn:
        break;  // the stored value is the setting
      case NodeType::Add: {
        v = 0.0;
        for (NodeId p : dag_->parents[i]) v += value_[p];
        counters_.arithmetic_ops += dag_->parents[i].size();
        break;
      }
      case NodeType::Mul: {
        v = 1.0;
        for (NodeId p : dag_->parents[i]) v *= value_[p];
        counters_.arithmetic_ops += dag_->parents[i].size();
        break;
      }
    }
    max_dev = std::max(max_dev, std::fabs(v - value_[i]));
    value_[i] = v;
  }
  if (mode_ == EvalMode::Stabilized) rebuild_mul_aux();
  return max_dev;
}

}  // namespace qdag
