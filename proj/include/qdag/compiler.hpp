#ifndef QDAG_COMPILER_HPP
#define QDAG_COMPILER_HPP

#include <set>
#include <string>
#include <vector>

#include "qdag/circuit.hpp"
#include "qdag/network.hpp"

namespace qdag {

// Query and evidence variables are fixed at compile time; the sets may
// overlap. Names must be declared in the network.
struct CompileSpec {
  std::vector<std::string> query_variables;
  std::vector<std::string> evidence_variables;
};

// Deterministic greedy order over the variables not in `keep`: repeatedly
// eliminate the variable whose removal creates the smallest intermediate
// factor (min fill state-space on the moralized interaction graph), ties
// broken by declaration order.
std::vector<std::string> elimination_order(const BeliefNetwork& net,
                                           const std::set<std::string>& keep);

// Compiles the network into a Q-DAG by variable elimination, one
// evidence-specific node per (evidence variable, state) and one query node
// per (query variable, state). Setting ESNs per evidence semantics and
// evaluating yields value(query (V, v)) = Pr(V = v, e). Sub-expressions
// are shared across the states of one query variable, not across query
// variables.
QDag compile(const BeliefNetwork& net, const CompileSpec& spec);

// Same, but every query variable uses the given elimination order
// (declaration-order names, must cover all non-query variables each time).
// Exposed so that order-independence can be tested directly.
QDag compile_with_order(const BeliefNetwork& net, const CompileSpec& spec,
                        const std::vector<std::string>& order);

}  // namespace qdag

#endif
