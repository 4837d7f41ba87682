#ifndef QDAG_NETWORK_HPP
#define QDAG_NETWORK_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "qdag/error.hpp"

namespace qdag {

struct Variable {
  std::string name;
  std::vector<std::string> states;
  std::vector<std::string> parents;
};

// Discrete belief network: variables with finite state sets, an acyclic
// parent graph, and one CPT row per parent-state combination. Rows are
// stored in canonical order: combinations enumerated with the last
// declared parent cycling fastest, states in declared order.
struct BeliefNetwork {
  std::string name;
  std::vector<Variable> variables;
  std::vector<std::vector<double>> cpt;  // [var][row * state_count + state]

  int index_of(const std::string& variable) const;
  std::size_t require_index(const std::string& variable) const;
  std::size_t state_index(std::size_t var, const std::string& state) const;
  std::size_t state_count(std::size_t var) const { return variables[var].states.size(); }
  std::size_t row_count(std::size_t var) const;
  double cpt_entry(std::size_t var, std::size_t row, std::size_t state) const {
    return cpt[var][row * state_count(var) + state];
  }
};

// Parses the line-oriented .bn format. Throws Error: syntax-error,
// undeclared-parent, cycle, row-sum, missing-row, duplicate-row,
// missing-cpt, duplicate-variable.
BeliefNetwork parse_network(const std::string& text);

// Canonical .bn rendering; parse_network(to_text(n)) reproduces n exactly.
std::string to_text(const BeliefNetwork& net);

}  // namespace qdag

#endif
