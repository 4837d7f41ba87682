#ifndef QDAG_REDUCER_HPP
#define QDAG_REDUCER_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qdag/circuit.hpp"
#include "qdag/evaluator.hpp"

namespace qdag {

// Outcome of one rewrite pass. `operations` counts the pass's abstract
// steps (node scans plus edge examinations; node scans plus conversions
// for zero compression), which is what the linearity bounds are stated
// over. Adjacency-mirror rebuilds are shared pipeline bookkeeping and are
// not billed to individual passes.
struct PassReport {
  std::string pass;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
  std::size_t edges_before = 0;
  std::size_t edges_after = 0;
  std::uint64_t operations = 0;
  std::vector<VarState> removed_esns;  // sweep only
};

struct ReductionReport {
  std::vector<PassReport> passes;
  std::vector<VarState> removed_esns;
  std::size_t cycles = 0;
  std::uint64_t total_operations = 0;
  double wall_seconds = 0.0;

  std::string to_text() const;
  std::string to_kv() const;
};

// Removes every edge from a Num(0) node into an Add node. An Add node left
// with no parents becomes Num(0), the empty sum.
PassReport eliminate_identity_zero(QDag& dag);

// Removes every edge from a Num(1) node into a Mul node. A Mul node left
// with no parents becomes Num(1), the empty product.
PassReport eliminate_identity_one(QDag& dag);

// Constant-folds every Add/Mul node whose parents are all numeric,
// cascading through newly created constants.
PassReport numeric_reduction(QDag& dag);

// Converts every node whose value is 0 under all-ones ESN settings into
// Num(0). Requires `values` to be an initialized table over `dag` with
// every ESN at 1; such zeros persist under any further evidence.
PassReport zero_compression(QDag& dag, const ValueState& values);

// Returns a compacted copy holding exactly the nodes from which some query
// node is reachable via child edges, ids renumbered topologically. ESN
// nodes that no longer feed any query are dropped and reported.
std::pair<QDag, PassReport> sweep_dead_nodes(const QDag& dag);

// Full pipeline: initialize, zero_compression, identity passes, numeric
// reduction, sweep, iterated to a fixpoint. The result is equivalent to
// the input (same query values for every 0/1 setting of surviving ESNs).
std::pair<QDag, ReductionReport> reduce(const QDag& dag);

// Post-reduction completeness scan; empty means no Mul with Num(0)/Num(1)
// parent, no Add with Num(0) parent, no Add/Mul with all-numeric parents,
// and no node unreachable from the query set.
std::vector<std::string> reduction_completeness_violations(const QDag& dag);

}  // namespace qdag

#endif
