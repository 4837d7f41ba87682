#include "qdag/compiler.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace qdag {

namespace {

// Scope variables ascend by declaration index; table indexed mixed-radix
// over the scope with the last scope variable cycling fastest.
struct Factor {
  std::vector<std::size_t> scope;
  std::vector<NodeId> table;
};

std::size_t table_size(const BeliefNetwork& net, const std::vector<std::size_t>& scope) {
  std::size_t n = 1;
  for (std::size_t v : scope) n *= net.state_count(v);
  return n;
}

// Index of `assign` (state index per network variable) within a factor.
std::size_t project(const BeliefNetwork& net, const std::vector<std::size_t>& scope,
                    const std::vector<std::size_t>& assign) {
  std::size_t idx = 0;
  for (std::size_t v : scope) idx = idx * net.state_count(v) + assign[v];
  return idx;
}

std::vector<std::size_t> normalize_vars(const BeliefNetwork& net,
                                        const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(net.require_index(n));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

// Fresh Num nodes for one variable's CPT.
Factor build_cpt_factor(QDag& dag, const BeliefNetwork& net, std::size_t vi) {
  const Variable& var = net.variables[vi];
  Factor f;
  f.scope.reserve(var.parents.size() + 1);
  for (const auto& p : var.parents) f.scope.push_back(net.require_index(p));
  f.scope.push_back(vi);
  std::sort(f.scope.begin(), f.scope.end());
  f.table.assign(table_size(net, f.scope), 0);

  std::vector<std::size_t> assign(net.variables.size(), 0);
  std::vector<std::size_t> digits(f.scope.size(), 0);
  const std::size_t total = f.table.size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    for (std::size_t d = 0; d < f.scope.size(); ++d) assign[f.scope[d]] = digits[d];

    std::size_t row = 0;
    for (const auto& p : var.parents) {
      std::size_t pi = net.require_index(p);
      row = row * net.state_count(pi) + assign[pi];
    }
    f.table[idx] = dag.num(net.cpt_entry(vi, row, assign[vi]));

    for (std::size_t d = f.scope.size(); d-- > 0;) {
      if (++digits[d] < net.state_count(f.scope[d])) break;
      digits[d] = 0;
    }
  }
  return f;
}

// Evidence indicators ride along as their own single-variable factor
// rather than being multiplied into the CPT rows. The joint terms are the
// same either way, but this keeps CPT-only sub-expressions all-numeric so
// constant folding can collapse them.
Factor build_indicator_factor(const QDag& dag, const BeliefNetwork& net, std::size_t vi) {
  const Variable& var = net.variables[vi];
  Factor f;
  f.scope.push_back(vi);
  for (const auto& s : var.states) f.table.push_back(dag.esn_nodes.at({var.name, s}));
  return f;
}

void eliminate_variable(QDag& dag, const BeliefNetwork& net, std::vector<Factor>& factors,
                        std::size_t v) {
  std::vector<Factor> group, rest;
  for (auto& f : factors) {
    if (std::binary_search(f.scope.begin(), f.scope.end(), v))
      group.push_back(std::move(f));
    else
      rest.push_back(std::move(f));
  }
  factors = std::move(rest);
  if (group.empty()) return;

  std::vector<std::size_t> scope_union;
  for (const auto& f : group) scope_union.insert(scope_union.end(), f.scope.begin(), f.scope.end());
  std::sort(scope_union.begin(), scope_union.end());
  scope_union.erase(std::unique(scope_union.begin(), scope_union.end()), scope_union.end());

  Factor result;
  for (std::size_t u : scope_union)
    if (u != v) result.scope.push_back(u);
  result.table.assign(table_size(net, result.scope), 0);

  std::vector<std::size_t> assign(net.variables.size(), 0);
  std::vector<std::size_t> digits(result.scope.size(), 0);
  const std::size_t combos = result.table.size();
  for (std::size_t idx = 0; idx < combos; ++idx) {
    for (std::size_t d = 0; d < result.scope.size(); ++d) assign[result.scope[d]] = digits[d];

    std::vector<NodeId> terms;
    terms.reserve(net.state_count(v));
    for (std::size_t s = 0; s < net.state_count(v); ++s) {
      assign[v] = s;
      std::vector<NodeId> entries;
      entries.reserve(group.size());
      for (const auto& f : group) entries.push_back(f.table[project(net, f.scope, assign)]);
      terms.push_back(entries.size() == 1 ? entries[0] : dag.mul(std::move(entries)));
    }
    result.table[idx] = terms.size() == 1 ? terms[0] : dag.add(std::move(terms));

    for (std::size_t d = result.scope.size(); d-- > 0;) {
      if (++digits[d] < net.state_count(result.scope[d])) break;
      digits[d] = 0;
    }
  }
  factors.push_back(std::move(result));
}

QDag compile_impl(const BeliefNetwork& net, const CompileSpec& spec,
                  const std::vector<std::string>* forced_order) {
  const std::vector<std::size_t> query_vars = normalize_vars(net, spec.query_variables);
  const std::vector<std::size_t> evidence_vars = normalize_vars(net, spec.evidence_variables);
  std::vector<char> is_evidence(net.variables.size(), 0);
  for (std::size_t e : evidence_vars) is_evidence[e] = 1;

  QDag dag;
  for (std::size_t e : evidence_vars)
    for (const auto& s : net.variables[e].states) dag.esn(net.variables[e].name, s);

  for (std::size_t q : query_vars) {
    std::vector<Factor> factors;
    factors.reserve(net.variables.size() + evidence_vars.size());
    for (std::size_t vi = 0; vi < net.variables.size(); ++vi) {
      factors.push_back(build_cpt_factor(dag, net, vi));
      if (is_evidence[vi]) factors.push_back(build_indicator_factor(dag, net, vi));
    }

    std::vector<std::string> order;
    if (forced_order) {
      for (const auto& name : *forced_order)
        if (net.require_index(name) != q) order.push_back(name);
    } else {
      order = elimination_order(net, {net.variables[q].name});
    }
    for (const auto& name : order) eliminate_variable(dag, net, factors, net.require_index(name));

    const Variable& qv = net.variables[q];
    for (std::size_t s = 0; s < qv.states.size(); ++s) {
      std::vector<NodeId> entries;
      std::vector<std::size_t> assign(net.variables.size(), 0);
      assign[q] = s;
      for (const auto& f : factors) entries.push_back(f.table[project(net, f.scope, assign)]);
      if (entries.empty()) throw Error("internal: no factors left for query variable " + qv.name);
      NodeId node = entries.size() == 1 ? entries[0] : dag.mul(std::move(entries));
      dag.register_query(qv.name, qv.states[s], node);
    }
  }
  return dag;
}

}  // namespace

std::vector<std::string> elimination_order(const BeliefNetwork& net,
                                           const std::set<std::string>& keep) {
  const std::size_t n = net.variables.size();
  for (const auto& k : keep) net.require_index(k);

  // Moral graph: each family {V} + parents(V) forms a clique.
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (std::size_t vi = 0; vi < n; ++vi) {
    std::vector<std::size_t> family;
    family.push_back(vi);
    for (const auto& p : net.variables[vi].parents) family.push_back(net.require_index(p));
    for (std::size_t a : family)
      for (std::size_t b : family)
        if (a != b) adj[a][b] = 1;
  }

  std::vector<char> alive(n, 1), candidate(n, 1);
  for (std::size_t i = 0; i < n; ++i)
    if (keep.count(net.variables[i].name)) candidate[i] = 0;

  std::vector<std::string> order;
  for (;;) {
    std::size_t best = n;
    std::size_t best_size = std::numeric_limits<std::size_t>::max();
    for (std::size_t v = 0; v < n; ++v) {
      if (!alive[v] || !candidate[v]) continue;
      std::size_t size = 1;
      for (std::size_t u = 0; u < n; ++u)
        if (u != v && alive[u] && adj[v][u]) size *= net.state_count(u);
      if (size < best_size) {
        best_size = size;
        best = v;
      }
    }
    if (best == n) break;

    for (std::size_t a = 0; a < n; ++a) {
      if (a == best || !alive[a] || !adj[best][a]) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (b == best || b == a || !alive[b] || !adj[best][b]) continue;
        adj[a][b] = 1;
      }
    }
    alive[best] = 0;
    order.push_back(net.variables[best].name);
  }
  return order;
}

QDag compile(const BeliefNetwork& net, const CompileSpec& spec) {
  return compile_impl(net, spec, nullptr);
}

QDag compile_with_order(const BeliefNetwork& net, const CompileSpec& spec,
                        const std::vector<std::string>& order) {
  std::vector<char> seen(net.variables.size(), 0);
  for (const auto& name : order) {
    std::size_t i = net.require_index(name);
    if (seen[i]) throw Error("duplicate-variable: '" + name + "' repeated in elimination order");
    seen[i] = 1;
  }
  for (std::size_t i = 0; i < net.variables.size(); ++i)
    if (!seen[i])
      throw Error("missing-variable: '" + net.variables[i].name + "' absent from elimination order");
  return compile_impl(net, spec, &order);
}

}  // namespace qdag
