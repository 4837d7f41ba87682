#include "qdag/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qdag {
namespace oracle {

namespace {

constexpr std::size_t kEnumerationCap = std::size_t{1} << 20;

bool rel_close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

namespace {

std::vector<std::vector<std::size_t>> parent_indices(const BeliefNetwork& net) {
  std::vector<std::vector<std::size_t>> out(net.variables.size());
  for (std::size_t vi = 0; vi < net.variables.size(); ++vi)
    for (const auto& p : net.variables[vi].parents) out[vi].push_back(net.require_index(p));
  return out;
}

double chain_product(const BeliefNetwork& net, const std::vector<std::vector<std::size_t>>& pidx,
                     const std::vector<std::size_t>& state) {
  double p = 1.0;
  for (std::size_t vi = 0; vi < net.variables.size(); ++vi) {
    std::size_t row = 0;
    for (std::size_t pi : pidx[vi]) row = row * net.state_count(pi) + state[pi];
    p *= net.cpt_entry(vi, row, state[vi]);
  }
  return p;
}

}  // namespace

double joint_prob(const BeliefNetwork& net, const Assignment& a) {
  std::vector<std::size_t> state(net.variables.size(), 0);
  for (std::size_t vi = 0; vi < net.variables.size(); ++vi) {
    auto it = a.find(net.variables[vi].name);
    if (it == a.end())
      throw Error("incomplete-assignment: variable '" + net.variables[vi].name + "' unset");
    state[vi] = net.state_index(vi, it->second);
  }
  for (const auto& [name, value] : a) net.require_index(name);  // reject stray names
  return chain_product(net, parent_indices(net), state);
}

double marginal(const BeliefNetwork& net, const Assignment& a) {
  const std::size_t n = net.variables.size();
  std::vector<std::size_t> state(n, 0);
  std::vector<std::size_t> free_vars;
  std::size_t outcomes = 1;
  for (std::size_t vi = 0; vi < n; ++vi) {
    auto it = a.find(net.variables[vi].name);
    if (it != a.end()) {
      state[vi] = net.state_index(vi, it->second);
      continue;
    }
    free_vars.push_back(vi);
    outcomes *= net.state_count(vi);
    if (outcomes > kEnumerationCap)
      throw Error("enumeration-too-large: more than 2^20 outcomes");
  }
  for (const auto& [name, value] : a) net.require_index(name);

  const std::vector<std::vector<std::size_t>> pidx = parent_indices(net);
  std::vector<std::size_t> digits(free_vars.size(), 0);
  double sum = 0.0;
  for (std::size_t i = 0; i < outcomes; ++i) {
    for (std::size_t d = 0; d < free_vars.size(); ++d) state[free_vars[d]] = digits[d];
    sum += chain_product(net, pidx, state);
    for (std::size_t d = free_vars.size(); d-- > 0;) {
      if (++digits[d] < net.state_count(free_vars[d])) break;
      digits[d] = 0;
    }
  }
  return sum;
}

std::vector<double> eval_under(const QDag& dag, const std::map<VarState, double>& settings) {
  const std::size_t n = dag.node_count();
  std::vector<double> value(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& nd = dag.nodes[i];
    switch (nd.type) {
      case NodeType::Num:
        value[i] = nd.label;
        break;
      case NodeType::Esn: {
        auto it = settings.find({nd.variable, nd.state});
        value[i] = it == settings.end() ? 1.0 : it->second;
        break;
      }
      case NodeType::Add: {
        double v = 0.0;
        for (NodeId p : dag.parents[i]) v += value[p];
        value[i] = v;
        break;
      }
      case NodeType::Mul: {
        double v = 1.0;
        for (NodeId p : dag.parents[i]) v *= value[p];
        value[i] = v;
        break;
      }
    }
  }
  return value;
}

std::string EquivalenceResult::describe() const {
  if (equivalent)
    return "equivalent after " + std::to_string(assignments_checked) + " assignments";
  std::string out = "counterexample:";
  for (const auto& [key, v] : counterexample)
    out += " (" + key.first + "," + key.second + ")=" + (v == 0.0 ? "0" : "1");
  out += "\n";
  for (std::size_t i = 0; i < query_keys.size(); ++i)
    out += "  query (" + query_keys[i].first + "," + query_keys[i].second +
           "): " + format_double(values1[i]) + " vs " + format_double(values2[i]) + "\n";
  return out;
}

namespace {

struct EquivSetup {
  std::vector<VarState> esn_keys;  // d1's ESNs, map order
  std::vector<VarState> query_keys;
};

EquivSetup prepare(const QDag& d1, const QDag& d2) {
  for (const auto& [key, id] : d2.esn_nodes)
    if (!d1.esn_nodes.count(key))
      throw Error("esn-set-mismatch: (" + key.first + ", " + key.second +
                  ") present only in the second dag");
  {
    auto a = d1.query_nodes.begin();
    auto b = d2.query_nodes.begin();
    for (; a != d1.query_nodes.end() && b != d2.query_nodes.end(); ++a, ++b)
      if (a->first != b->first)
        throw Error("query-set-mismatch: (" + a->first.first + ", " + a->first.second + ") vs (" +
                    b->first.first + ", " + b->first.second + ")");
    if (a != d1.query_nodes.end() || b != d2.query_nodes.end())
      throw Error("query-set-mismatch: different query-node counts");
  }
  EquivSetup s;
  for (const auto& [key, id] : d1.esn_nodes) s.esn_keys.push_back(key);
  for (const auto& [key, id] : d1.query_nodes) s.query_keys.push_back(key);
  return s;
}

EquivalenceResult run_check(const QDag& d1, const QDag& d2, const EquivSetup& setup,
                            const std::vector<std::uint64_t>& masks) {
  EquivalenceResult res;
  res.query_keys = setup.query_keys;
  const std::size_t k = setup.esn_keys.size();

  for (std::uint64_t mask : masks) {
    std::map<VarState, double> settings;
    for (std::size_t i = 0; i < k; ++i)
      settings[setup.esn_keys[i]] = (mask >> i) & 1 ? 1.0 : 0.0;

    std::vector<double> v1 = eval_under(d1, settings);
    std::vector<double> v2 = eval_under(d2, settings);
    ++res.assignments_checked;

    for (const auto& key : setup.query_keys) {
      double a = v1[d1.query_nodes.at(key)];
      double b = v2[d2.query_nodes.at(key)];
      if (!rel_close(a, b, 1e-9)) {
        res.equivalent = false;
        res.counterexample = settings;
        for (const auto& qk : setup.query_keys) {
          res.values1.push_back(v1[d1.query_nodes.at(qk)]);
          res.values2.push_back(v2[d2.query_nodes.at(qk)]);
        }
        return res;
      }
    }
  }
  return res;
}

}  // namespace

EquivalenceResult check_equivalent(const QDag& d1, const QDag& d2) {
  EquivSetup setup = prepare(d1, d2);
  const std::size_t k = setup.esn_keys.size();
  if (k > 12)
    throw Error("too-many-esns-for-exhaustive: " + std::to_string(k) + " > 12");
  std::vector<std::uint64_t> masks;
  masks.reserve(std::size_t{1} << k);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << k); ++m) masks.push_back(m);
  return run_check(d1, d2, setup, masks);
}

EquivalenceResult check_equivalent_sampled(const QDag& d1, const QDag& d2, std::uint64_t n,
                                           std::uint64_t seed) {
  EquivSetup setup = prepare(d1, d2);
  std::mt19937_64 rng(seed);
  const std::size_t k = setup.esn_keys.size();
  std::vector<std::uint64_t> masks;
  masks.reserve(n);
  const std::uint64_t span = k >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
  for (std::uint64_t i = 0; i < n; ++i) masks.push_back(rng() & span);
  return run_check(d1, d2, setup, masks);
}

EquivalenceResult check_equivalent_auto(const QDag& d1, const QDag& d2,
                                        std::size_t max_exhaustive, std::uint64_t samples,
                                        std::uint64_t seed) {
  if (d1.esn_nodes.size() <= max_exhaustive) return check_equivalent(d1, d2);
  return check_equivalent_sampled(d1, d2, samples, seed);
}

BeliefNetwork random_network(const RandomNetParams& params) {
  std::mt19937_64 rng(params.seed);
  BeliefNetwork net;
  net.name = "rand" + std::to_string(params.seed);

  for (std::size_t i = 0; i < params.variables; ++i) {
    Variable v;
    v.name = "V" + std::to_string(i);
    std::uniform_int_distribution<std::size_t> nstates(2, std::max<std::size_t>(2, params.max_states));
    std::size_t k = nstates(rng);
    for (std::size_t s = 0; s < k; ++s) v.states.push_back("s" + std::to_string(s));

    std::size_t max_p = std::min(params.max_parents, i);
    std::uniform_int_distribution<std::size_t> nparents(0, max_p);
    std::size_t np = nparents(rng);
    std::vector<std::size_t> pool(i);
    for (std::size_t j = 0; j < i; ++j) pool[j] = j;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + np);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t p : chosen) v.parents.push_back("V" + std::to_string(p));

    net.variables.push_back(std::move(v));
    net.cpt.emplace_back();
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t vi = 0; vi < params.variables; ++vi) {
    const std::size_t rows = net.row_count(vi);
    const std::size_t k = net.state_count(vi);
    net.cpt[vi].assign(rows * k, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        double p = unit(rng);
        if (unit(rng) < params.zero_density) p = 0.0;
        net.cpt[vi][r * k + s] = p;
        sum += p;
      }
      if (sum == 0.0) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        net.cpt[vi][r * k + pick(rng)] = 1.0;
        sum = 1.0;
      }
      for (std::size_t s = 0; s < k; ++s) net.cpt[vi][r * k + s] /= sum;
    }
  }
  return net;
}

}  // namespace oracle
}  // namespace qdag
