#ifndef QDAG_ORACLE_HPP
#define QDAG_ORACLE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qdag/circuit.hpp"
#include "qdag/network.hpp"

namespace qdag {
namespace oracle {

// Deliberately dumb ground truth: full enumeration only, no inference.

using Assignment = std::map<std::string, std::string>;

// Chain-rule product over all variables. The assignment must be total.
double joint_prob(const BeliefNetwork& net, const Assignment& a);

// Sum of joint_prob over every completion of a partial assignment.
// Refuses networks whose total state space exceeds 2^20 outcomes.
double marginal(const BeliefNetwork& net, const Assignment& a);

// Direct bottom-up evaluation of a dag under explicit per-(variable,
// state) ESN settings; pairs absent from `settings` default to 1.
std::vector<double> eval_under(const QDag& dag, const std::map<VarState, double>& settings);

struct EquivalenceResult {
  bool equivalent = true;
  std::uint64_t assignments_checked = 0;
  // First violating assignment, when not equivalent:
  std::map<VarState, double> counterexample;
  std::vector<VarState> query_keys;
  std::vector<double> values1, values2;
  std::string describe() const;
};

// Definition-1 equivalence: the dags agree on every query value for every
// 0/1 assignment to d1's ESNs. d2's ESN set must be a subset of d1's (a
// sweep may have removed provably irrelevant ESNs); query sets must match.
// Exhaustive over all 2^k assignments, k <= 12.
EquivalenceResult check_equivalent(const QDag& d1, const QDag& d2);

// Same check over n seeded-random assignments.
EquivalenceResult check_equivalent_sampled(const QDag& d1, const QDag& d2, std::uint64_t n,
                                           std::uint64_t seed);

// Exhaustive when d1 has at most max_exhaustive ESNs, sampled otherwise.
EquivalenceResult check_equivalent_auto(const QDag& d1, const QDag& d2,
                                        std::size_t max_exhaustive = 12,
                                        std::uint64_t samples = 1000, std::uint64_t seed = 1);

struct RandomNetParams {
  std::size_t variables = 8;
  std::size_t max_states = 4;
  std::size_t max_parents = 3;
  double zero_density = 0.0;  // chance of forcing a CPT entry to 0 before renormalizing
  std::uint64_t seed = 1;
};

// Seeded generator for test networks; zero_density > 0 plants deterministic
// CPT rows that exercise zero compression.
BeliefNetwork random_network(const RandomNetParams& params);

}  // namespace oracle
}  // namespace qdag

#endif
