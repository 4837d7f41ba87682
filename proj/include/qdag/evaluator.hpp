#ifndef QDAG_EVALUATOR_HPP
#define QDAG_EVALUATOR_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdag/circuit.hpp"

namespace qdag {

// Paper: incremental multiply/divide updates at Mul nodes, with a full
// product recompute whenever the changed parent's old value was zero.
// Stabilized: every Mul node tracks (zero-parent-count, product of nonzero
// parents), so zeroness is exact and a 0 -> nonzero parent flip is O(1)
// with no product recompute.
enum class EvalMode { Paper, Stabilized };

struct InstrumentationCounters {
  std::uint64_t nodes_visited = 0;    // running total of per-op visit counts
  std::uint64_t mul_recomputes = 0;   // full Mul recomputes during propagation
  std::uint64_t arithmetic_ops = 0;   // running +,-,*,/ total
  std::uint64_t edge_traversals = 0;  // parent->child update deliveries
  std::uint64_t last_op_visited = 0;
  std::uint64_t last_op_edges = 0;

  void reset() { *this = InstrumentationCounters{}; }
};

// Mutable value table over one immutable QDag. A node is "visited" by an
// evidence operation when its stored value actually changes; a repeated
// no-op observation therefore visits zero nodes.
class ValueState {
 public:
  explicit ValueState(const QDag& dag, EvalMode mode = EvalMode::Paper);

  // Resets every ESN to 1 and rebuilds all values bottom-up, O(E).
  void initialize();

  // Sets one evidence-specific node to 0 or 1 and propagates the change.
  // Returns the number of nodes whose value changed.
  std::size_t set_evidence(NodeId esn, double value);

  // Variable-level evidence per ESN semantics: observe pins one state,
  // retract makes the variable unknown again. ESNs flip in declared-state
  // (ascending id) order, one full propagation per flip.
  std::size_t observe(const std::string& variable, const std::string& state);
  std::size_t retract(const std::string& variable);

  double query(const std::string& variable, const std::string& state) const;
  std::map<std::string, double> posterior(const std::string& variable) const;

  // Recomputes every value bottom-up from the current ESN settings,
  // overwrites the table, and returns the largest absolute deviation
  // from the incremental values.
  double recompute_all();

  double value(NodeId id) const { return value_[id]; }
  const std::vector<double>& values() const { return value_; }
  double esn_setting(NodeId id) const;
  bool all_esns_unknown() const;

  const std::map<std::string, std::optional<std::string>>& evidence() const { return observed_; }
  const std::vector<std::string>& evidence_variables() const { return esn_variables_; }
  const std::vector<std::pair<std::string, NodeId>>& esns_of(const std::string& variable) const;

  const InstrumentationCounters& counters() const { return counters_; }
  void reset_counters() { counters_.reset(); }
  EvalMode mode() const { return mode_; }
  const QDag& dag() const { return *dag_; }

 private:
  void begin_op();
  void count_visit(NodeId n);
  std::size_t flip(NodeId esn, double value);
  void propagate();
  void deliver(NodeId child, double parent_old, double parent_new);
  double value_of_mul_node(NodeId n);
  void rebuild_mul_aux();

  const QDag* dag_;
  EvalMode mode_;
  std::vector<double> value_;

  // Stabilized-mode bookkeeping, indexed by node id (Mul nodes only).
  std::vector<std::uint32_t> mul_zero_parents_;
  std::vector<double> mul_nonzero_prod_;

  // Worklist state. Visits are stamped per operation (epoch_); propagation
  // old-values are stamped per flip (wave_), since one observe runs one
  // full propagation wave per ESN it flips.
  std::vector<std::uint64_t> touched_at_;
  std::vector<std::uint64_t> pending_at_;
  std::vector<std::uint64_t> wave_touched_;
  std::vector<double> wave_old_;
  std::vector<NodeId> heap_;
  std::uint64_t epoch_ = 0;
  std::uint64_t wave_ = 0;
  std::uint64_t visited_ = 0;

  std::map<std::string, std::vector<std::pair<std::string, NodeId>>> esn_by_var_;
  std::vector<std::string> esn_variables_;
  std::map<std::string, std::optional<std::string>> observed_;

  InstrumentationCounters counters_;
};

}  // namespace qdag

#endif
