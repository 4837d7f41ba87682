// Command-line front end: compile a belief network to a .qdag circuit,
// reduce circuits, evaluate them under changing evidence (batch or REPL),
// verify a circuit against its network by exhaustive enumeration, and
// benchmark the incremental evaluator.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdag/compiler.hpp"
#include "qdag/evaluator.hpp"
#include "qdag/oracle.hpp"
#include "qdag/reducer.hpp"

namespace {

using namespace qdag;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path dir = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  fs::path tmp = dir / (target.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io-error: cannot create '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error("io-error: short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("io-error: cannot rename into '" + path + "': " + ec.message());
  }
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_file_atomic(out_path, content);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    std::string cur;
    std::istringstream in(a);
    while (std::getline(in, cur, ','))
      if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::pair<std::string, std::string> split_observation(const std::string& arg) {
  auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    throw Error("bad-observation: expected V=v, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void apply_observe(ValueState& vs, const std::string& arg) {
  auto [var, state] = split_observation(arg);
  try {
    vs.observe(var, state);
  } catch (const Error& e) {
    std::string msg = e.what();
    if (msg.rfind("unknown-variable", 0) == 0)
      throw Error(msg + " (no evidence-specific nodes; recompile with --evidence " + var + ")");
    throw;
  }
}

std::string query_line(const ValueState& vs, const std::string& var) {
  auto it = vs.dag().query_nodes.lower_bound({var, ""});
  if (it == vs.dag().query_nodes.end() || it->first.first != var)
    throw Error("unknown-query-node: no query nodes for variable '" + var + "'");
  std::string line = var;
  for (; it != vs.dag().query_nodes.end() && it->first.first == var; ++it)
    line += " " + it->first.second + " " + fmt17(vs.value(it->second));
  return line;
}

int cmd_compile(const std::string& net_path, const std::vector<std::string>& query,
                const std::vector<std::string>& evidence, const std::string& out_path,
                bool no_reduce) {
  BeliefNetwork net = parse_network(read_file(net_path));
  CompileSpec spec{split_csv(query), split_csv(evidence)};
  if (spec.query_variables.empty()) throw Error("bad-flags: --query needs at least one variable");
  QDag dag = compile(net, spec);
  if (!no_reduce) dag = reduce(dag).first;
  emit(out_path, serialize(dag));
  return 0;
}

int cmd_reduce(const std::string& in_path, const std::string& out_path,
               const std::string& report_format) {
  QDag dag = parse_qdag(read_file(in_path));
  auto [reduced, report] = reduce(dag);
  emit(out_path, serialize(reduced));
  std::ostream& rep_out = out_path.empty() ? std::cerr : std::cout;
  rep_out << (report_format == "kv" ? report.to_kv() : report.to_text());
  return 0;
}

int run_repl(ValueState& vs) {
  std::string line;
  while (std::getline(std::cin, line)) {
    std::istringstream in(line);
    std::string cmd;
    if (!(in >> cmd)) continue;
    try {
      if (cmd == "quit") break;
      if (cmd == "reset") {
        vs.initialize();
        std::cout << "ok\n";
      } else if (cmd == "observe") {
        std::string arg;
        if (!(in >> arg)) throw Error("bad-observation: usage 'observe V=v'");
        apply_observe(vs, arg);
        std::cout << "ok\n";
      } else if (cmd == "retract") {
        std::string var;
        if (!(in >> var)) throw Error("bad-flags: usage 'retract V'");
        vs.retract(var);
        std::cout << "ok\n";
      } else if (cmd == "query") {
        std::string var;
        if (!(in >> var)) throw Error("bad-flags: usage 'query V'");
        std::cout << query_line(vs, var) << "\n";
      } else if (cmd == "posterior") {
        std::string var;
        if (!(in >> var)) throw Error("bad-flags: usage 'posterior V'");
        auto post = vs.posterior(var);
        std::string out = var;
        for (const auto& [s, v] : post) out += " " + s + " " + fmt17(v);
        std::cout << out << "\n";
      } else {
        throw Error("unknown-command: '" + cmd + "'");
      }
    } catch (const Error& e) {
      std::cout << "error: " << e.what() << "\n";
    }
    std::cout.flush();
  }
  return 0;
}

int cmd_eval(const std::string& dag_path, const std::vector<std::string>& observe,
             const std::vector<std::string>& retract, const std::vector<std::string>& print,
             bool repl, const std::string& mode_name) {
  QDag dag = parse_qdag(read_file(dag_path));
  EvalMode mode = mode_name == "stabilized" ? EvalMode::Stabilized : EvalMode::Paper;
  ValueState vs(dag, mode);

  for (const auto& o : observe) apply_observe(vs, o);
  for (const auto& r : retract) vs.retract(r);

  if (repl) return run_repl(vs);

  std::vector<std::string> vars = print;
  if (vars.empty()) {
    for (const auto& [key, id] : dag.query_nodes)
      if (vars.empty() || vars.back() != key.first) vars.push_back(key.first);
  }
  for (const auto& var : vars) {
    auto it = dag.query_nodes.lower_bound({var, ""});
    if (it == dag.query_nodes.end() || it->first.first != var)
      throw Error("unknown-query-node: no query nodes for variable '" + var + "'");
    for (; it != dag.query_nodes.end() && it->first.first == var; ++it)
      std::cout << var << " " << it->first.second << " " << fmt17(vs.value(it->second)) << "\n";
  }
  return 0;
}

int cmd_check(const std::string& net_path, const std::string& dag_path, bool exhaustive,
              std::uint64_t samples, std::uint64_t seed) {
  BeliefNetwork net = parse_network(read_file(net_path));
  QDag loaded = parse_qdag(read_file(dag_path));

  CompileSpec spec;
  for (const auto& [key, id] : loaded.query_nodes)
    if (spec.query_variables.empty() || spec.query_variables.back() != key.first)
      spec.query_variables.push_back(key.first);
  for (const auto& [key, id] : loaded.esn_nodes)
    if (spec.evidence_variables.empty() || spec.evidence_variables.back() != key.first)
      spec.evidence_variables.push_back(key.first);

  QDag fresh = compile(net, spec);
  oracle::EquivalenceResult res;
  if (exhaustive)
    res = oracle::check_equivalent(fresh, loaded);
  else if (samples > 0)
    res = oracle::check_equivalent_sampled(fresh, loaded, samples, seed);
  else
    res = oracle::check_equivalent_auto(fresh, loaded, 12, 1000, seed);

  std::cout << (res.equivalent ? "equivalent" : "NOT equivalent") << " ("
            << res.assignments_checked << " assignments)\n";
  if (!res.equivalent) {
    std::cout << res.describe();
    return 1;
  }
  return 0;
}

int cmd_bench(const std::string& dag_path, std::uint64_t ops, std::uint64_t seed,
              bool updates_only, const std::string& mode_name) {
  QDag dag = parse_qdag(read_file(dag_path));
  EvalMode mode = mode_name == "stabilized" ? EvalMode::Stabilized : EvalMode::Paper;
  ValueState vs(dag, mode);
  vs.reset_counters();

  const std::vector<std::string>& vars = vs.evidence_variables();
  if (vars.empty()) throw Error("bad-flags: dag has no evidence-specific nodes to flip");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_var(0, vars.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uint64_t visited_total = 0;

  for (std::uint64_t i = 0; i < ops; ++i) {
    if (updates_only) {
      std::vector<std::string> unknown;
      for (const auto& [var, obs] : vs.evidence())
        if (!obs) unknown.push_back(var);
      if (unknown.empty()) {
        vs.initialize();  // start a fresh update epoch; not an evidence op
        unknown = vars;
      }
      const std::string& var = unknown[static_cast<std::size_t>(unit(rng) * unknown.size())];
      const auto& states = vs.esns_of(var);
      visited_total += vs.observe(var, states[static_cast<std::size_t>(unit(rng) * states.size())].first);
    } else {
      const std::string& var = vars[pick_var(rng)];
      if (vs.evidence().at(var) && unit(rng) < 0.5) {
        visited_total += vs.retract(var);
      } else {
        const auto& states = vs.esns_of(var);
        visited_total += vs.observe(var, states[static_cast<std::size_t>(unit(rng) * states.size())].first);
      }
    }
  }

  double drift = vs.recompute_all();
  std::cout << "ops=" << ops << "\n";
  std::cout << "nodes_visited_total=" << visited_total << "\n";
  std::cout << "nodes_visited_mean=" << fmt17(ops ? double(visited_total) / double(ops) : 0.0)
            << "\n";
  std::cout << "mul_recomputes=" << vs.counters().mul_recomputes << "\n";
  std::cout << "max_drift=" << fmt17(drift) << "\n";

  if (updates_only && vs.counters().mul_recomputes != 0)
    throw std::logic_error("update-only sequence invoked value-of-mul-node");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Q-DAG compiler, reducer and evaluator for discrete belief networks"};
  app.require_subcommand(1);

  std::string net_path, dag_path, out_path;
  std::vector<std::string> query, evidence, observe, retract, print;
  bool no_reduce = false, repl = false, exhaustive = false, updates_only = false;
  std::string report_format = "text", mode_name = "paper";
  std::uint64_t samples = 0, seed = 1, ops = 1000;

  auto* compile_cmd = app.add_subcommand("compile", "Compile a .bn network into a .qdag circuit");
  compile_cmd->add_option("network", net_path, "input .bn file")->required();
  compile_cmd->add_option("--query", query, "query variables (comma separated or repeated)")
      ->required();
  compile_cmd->add_option("--evidence", evidence, "evidence variables");
  compile_cmd->add_option("-o,--output", out_path, "output .qdag path (default stdout)");
  compile_cmd->add_flag("--no-reduce", no_reduce, "skip circuit reduction");

  auto* reduce_cmd = app.add_subcommand("reduce", "Reduce a .qdag circuit");
  reduce_cmd->add_option("qdag", dag_path, "input .qdag file")->required();
  reduce_cmd->add_option("-o,--output", out_path, "output path (default stdout)");
  reduce_cmd->add_option("--report", report_format, "report format: text|kv")
      ->check(CLI::IsMember({"text", "kv"}));

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a circuit under evidence");
  eval_cmd->add_option("qdag", dag_path, "input .qdag file")->required();
  eval_cmd->add_option("--observe", observe, "observations V=v");
  eval_cmd->add_option("--retract", retract, "variables to retract");
  eval_cmd->add_option("--print", print, "query variables to print");
  eval_cmd->add_flag("--repl", repl, "line-oriented protocol on stdin");
  eval_cmd->add_option("--mode", mode_name, "evaluator mode: paper|stabilized")
      ->check(CLI::IsMember({"paper", "stabilized"}));

  auto* check_cmd = app.add_subcommand("check", "Verify a circuit against its network");
  check_cmd->add_option("network", net_path, "input .bn file")->required();
  check_cmd->add_option("qdag", dag_path, "circuit to verify")->required();
  check_cmd->add_flag("--exhaustive", exhaustive, "force exhaustive ESN sweep");
  check_cmd->add_option("--samples", samples, "number of sampled assignments");
  check_cmd->add_option("--seed", seed, "sampling seed");

  auto* bench_cmd = app.add_subcommand("bench", "Random evidence-op benchmark");
  bench_cmd->add_option("qdag", dag_path, "input .qdag file")->required();
  bench_cmd->add_option("--ops", ops, "number of evidence operations")->required();
  bench_cmd->add_option("--seed", seed, "rng seed")->required();
  bench_cmd->add_flag("--updates-only", updates_only,
                      "restrict to update moves and assert no mul recomputes");
  bench_cmd->add_option("--mode", mode_name, "evaluator mode: paper|stabilized")
      ->check(CLI::IsMember({"paper", "stabilized"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile_cmd->parsed())
      return cmd_compile(net_path, query, evidence, out_path, no_reduce);
    if (reduce_cmd->parsed()) return cmd_reduce(dag_path, out_path, report_format);
    if (eval_cmd->parsed()) return cmd_eval(dag_path, observe, retract, print, repl, mode_name);
    if (check_cmd->parsed()) return cmd_check(net_path, dag_path, exhaustive, samples, seed);
    if (bench_cmd->parsed()) return cmd_bench(dag_path, ops, seed, updates_only, mode_name);
  } catch (const Error& e) {
    std::cerr << "qd: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "qd: internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
