#include "qdag/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include "qdag/circuit.hpp"  // format_double

namespace qdag {

int BeliefNetwork::index_of(const std::string& variable) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == variable) return static_cast<int>(i);
  return -1;
}

std::size_t BeliefNetwork::require_index(const std::string& variable) const {
  int i = index_of(variable);
  if (i < 0) throw Error("unknown-variable: '" + variable + "'");
  return static_cast<std::size_t>(i);
}

std::size_t BeliefNetwork::state_index(std::size_t var, const std::string& state) const {
  const auto& states = variables[var].states;
  auto it = std::find(states.begin(), states.end(), state);
  if (it == states.end())
    throw Error("unknown-state: variable '" + variables[var].name + "' has no state '" + state +
                "'");
  return static_cast<std::size_t>(it - states.begin());
}

std::size_t BeliefNetwork::row_count(std::size_t var) const {
  std::size_t rows = 1;
  for (const auto& p : variables[var].parents) rows *= state_count(require_index(p));
  return rows;
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

double parse_prob(const std::string& tok, std::size_t lineno) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    syntax(lineno, "bad probability '" + tok + "'");
  if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v))
    syntax(lineno, "probability out of [0, 1]: '" + tok + "'");
  return v;
}

void check_acyclic(const BeliefNetwork& net) {
  const std::size_t n = net.variables.size();
  std::vector<std::size_t> indeg(n, 0);
  std::vector<std::vector<std::size_t>> kids(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& p : net.variables[i].parents) {
      std::size_t pi = net.require_index(p);
      kids[pi].push_back(i);
      ++indeg[i];
    }
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::size_t done = 0;
  while (!ready.empty()) {
    std::size_t v = ready.front();
    ready.pop_front();
    ++done;
    for (std::size_t c : kids[v])
      if (--indeg[c] == 0) ready.push_back(c);
  }
  if (done != n) throw Error("cycle: parent graph of network '" + net.name + "' has a cycle");
}

}  // namespace

BeliefNetwork parse_network(const std::string& text) {
  BeliefNetwork net;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;

  bool named = false;
  int cpt_var = -1;                // variable of the open cpt block, -1 outside
  std::vector<char> row_seen;      // per row of the open block
  std::vector<char> has_cpt;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '#') continue;
    std::vector<std::string> toks = split_ws(line);
    if (toks.empty()) continue;
    const std::string& kw = toks[0];

    if (!named) {
      if (kw != "network" || toks.size() != 2) syntax(lineno, "expected 'network <name>'");
      net.name = toks[1];
      named = true;
      continue;
    }

    if (kw == "variable") {
      if (cpt_var >= 0) syntax(lineno, "'variable' inside cpt block");
      if (toks.size() < 4 || toks[2] != ":")
        syntax(lineno, "expected 'variable <name> : <state> [<state> ...]'");
      if (net.index_of(toks[1]) >= 0) throw Error("duplicate-variable: '" + toks[1] + "'");
      Variable v;
      v.name = toks[1];
      for (std::size_t i = 3; i < toks.size(); ++i) {
        if (std::find(v.states.begin(), v.states.end(), toks[i]) != v.states.end())
          syntax(lineno, "duplicate state '" + toks[i] + "'");
        v.states.push_back(toks[i]);
      }
      net.variables.push_back(std::move(v));
      net.cpt.emplace_back();
      has_cpt.push_back(0);
      continue;
    }

    if (kw == "cpt") {
      if (cpt_var >= 0) syntax(lineno, "nested cpt block");
      if (toks.size() < 2) syntax(lineno, "expected 'cpt <var> [| <parent> ...]'");
      int vi = net.index_of(toks[1]);
      if (vi < 0)
        throw Error("undeclared-parent: line " + std::to_string(lineno) + ": variable '" +
                    toks[1] + "' not declared");
      if (has_cpt[vi]) throw Error("duplicate-row: second cpt block for '" + toks[1] + "'");

      auto& var = net.variables[vi];
      if (toks.size() > 2) {
        if (toks[2] != "|") syntax(lineno, "expected '|' before parent list");
        if (toks.size() == 3) syntax(lineno, "empty parent list after '|'");
        for (std::size_t i = 3; i < toks.size(); ++i) {
          if (net.index_of(toks[i]) < 0)
            throw Error("undeclared-parent: line " + std::to_string(lineno) + ": parent '" +
                        toks[i] + "' of '" + var.name + "' not declared");
          if (std::find(var.parents.begin(), var.parents.end(), toks[i]) != var.parents.end())
            syntax(lineno, "duplicate parent '" + toks[i] + "'");
          var.parents.push_back(toks[i]);
        }
      }
      cpt_var = vi;
      net.cpt[vi].assign(net.row_count(vi) * net.state_count(vi), 0.0);
      row_seen.assign(net.row_count(vi), 0);
      continue;
    }

    if (kw == "row") {
      if (cpt_var < 0) syntax(lineno, "'row' outside cpt block");
      const std::size_t vi = static_cast<std::size_t>(cpt_var);
      const auto& var = net.variables[vi];
      const std::size_t nstates = var.states.size();

      auto colon = std::find(toks.begin(), toks.end(), ":");
      std::size_t row = 0;
      std::size_t first_prob = 1;
      if (var.parents.empty()) {
        if (colon != toks.end()) syntax(lineno, "parentless cpt row takes no state prefix");
      } else {
        if (colon == toks.end()) syntax(lineno, "cpt row needs '<parent states> :' prefix");
        const std::size_t prefix = static_cast<std::size_t>(colon - toks.begin()) - 1;
        if (prefix != var.parents.size())
          syntax(lineno, "expected " + std::to_string(var.parents.size()) +
                             " parent states, got " + std::to_string(prefix));
        for (std::size_t i = 0; i < prefix; ++i) {
          std::size_t pi = net.require_index(var.parents[i]);
          row = row * net.state_count(pi) + net.state_index(pi, toks[1 + i]);
        }
        first_prob = prefix + 2;
      }

      if (toks.size() - first_prob != nstates)
        syntax(lineno, "expected " + std::to_string(nstates) + " probabilities, got " +
                           std::to_string(toks.size() - first_prob));
      if (row_seen[row])
        throw Error("duplicate-row: line " + std::to_string(lineno) + ": row repeated in cpt '" +
                    var.name + "'");
      row_seen[row] = 1;

      double sum = 0.0;
      for (std::size_t i = 0; i < nstates; ++i) {
        double p = parse_prob(toks[first_prob + i], lineno);
        net.cpt[vi][row * nstates + i] = p;
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-9)
        throw Error("row-sum: line " + std::to_string(lineno) + ": cpt '" + var.name +
                    "' row sums to " + format_double(sum));
      continue;
    }

    if (kw == "end") {
      if (cpt_var < 0) syntax(lineno, "'end' outside cpt block");
      const std::size_t vi = static_cast<std::size_t>(cpt_var);
      for (std::size_t r = 0; r < row_seen.size(); ++r)
        if (!row_seen[r])
          throw Error("missing-row: cpt '" + net.variables[vi].name + "' lacks row " +
                      std::to_string(r));
      has_cpt[vi] = 1;
      cpt_var = -1;
      continue;
    }

    syntax(lineno, "unknown keyword '" + kw + "'");
  }

  if (!named) throw Error("syntax-error: empty input, missing 'network' line");
  if (cpt_var >= 0) throw Error("syntax-error: unterminated cpt block");
  for (std::size_t i = 0; i < net.variables.size(); ++i)
    if (!has_cpt[i]) throw Error("missing-cpt: variable '" + net.variables[i].name + "'");
  check_acyclic(net);
  return net;
}

std::string to_text(const BeliefNetwork& net) {
  std::string out = "network " + net.name + "\n";
  for (const auto& v : net.variables) {
    out += "variable " + v.name + " :";
    for (const auto& s : v.states) out += " " + s;
    out += "\n";
  }
  for (std::size_t vi = 0; vi < net.variables.size(); ++vi) {
    const auto& v = net.variables[vi];
    out += "cpt " + v.name;
    if (!v.parents.empty()) {
      out += " |";
      for (const auto& p : v.parents) out += " " + p;
    }
    out += "\n";
    const std::size_t rows = net.row_count(vi);
    const std::size_t nstates = v.states.size();
    for (std::size_t r = 0; r < rows; ++r) {
      out += "  row";
      if (!v.parents.empty()) {
        // decode the row index, last parent fastest
        std::vector<std::size_t> idx(v.parents.size(), 0);
        std::size_t rem = r;
        for (std::size_t i = v.parents.size(); i-- > 0;) {
          std::size_t k = net.state_count(net.require_index(v.parents[i]));
          idx[i] = rem % k;
          rem /= k;
        }
        for (std::size_t i = 0; i < v.parents.size(); ++i)
          out += " " + net.variables[net.require_index(v.parents[i])].states[idx[i]];
        out += " :";
      }
      for (std::size_t s = 0; s < nstates; ++s) out += " " + format_double(net.cpt_entry(vi, r, s));
      out += "\n";
    }
    out += "end\n";
  }
  return out;
}

}  // namespace qdag
