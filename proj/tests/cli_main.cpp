// Integration tests that drive the qd binary end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "qdag/circuit.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args, const std::string& stdin_data = "") {
  std::string cmd = std::string(QD_BIN) + " " + args + " 2>&1";
  if (!stdin_data.empty()) {
    fs::path in = fs::temp_directory_path() / ("qd_stdin_" + std::to_string(::getpid()));
    std::ofstream(in) << stdin_data;
    cmd += " < " + in.string();
  }
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  char buf[4096];
  std::size_t n;
  while ((n = ::fread(buf, 1, sizeof(buf), pipe)) > 0) res.output.append(buf, n);
  int status = ::pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("qd_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double value_after(const std::string& output, const std::string& prefix) {
  std::istringstream in(output);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(prefix, 0) == 0) return std::strtod(line.c_str() + prefix.size(), nullptr);
  FAIL(("no line starting with '" + prefix + "' in:\n" + output));
  return -1;
}

}  // namespace

TEST_CASE("compile, eval, check round trip on the tiny network") {
  TempDir dir;
  std::ofstream(dir.file("tiny.bn")) << qdag::test::kTinyNet;

  auto compiled = run("compile " + dir.file("tiny.bn") + " --query B --evidence A -o " +
                      dir.file("t.qdag"));
  REQUIRE(compiled.exit_code == 0);
  REQUIRE(fs::exists(dir.file("t.qdag")));

  SUBCASE("eval prints oracle values") {
    auto eval = run("eval " + dir.file("t.qdag") + " --observe A=on --print B");
    CHECK(eval.exit_code == 0);
    CHECK(qdag::test::rel_close(value_after(eval.output, "B on "), 0.3));
    CHECK(qdag::test::rel_close(value_after(eval.output, "B off "), 0.2));
  }

  SUBCASE("observing a variable without ESNs names the compile flag") {
    auto eval = run("eval " + dir.file("t.qdag") + " --observe B=on");
    CHECK(eval.exit_code == 1);
    CHECK(eval.output.find("--evidence B") != std::string::npos);
  }

  SUBCASE("check accepts the compiled circuit and rejects a perturbed one") {
    auto ok = run("check " + dir.file("tiny.bn") + " " + dir.file("t.qdag") + " --exhaustive");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("equivalent") != std::string::npos);

    std::string text = slurp(dir.file("t.qdag"));
    auto pos = text.find("0.5");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 3, "0.51");
    std::ofstream(dir.file("bad.qdag")) << text;
    auto bad = run("check " + dir.file("tiny.bn") + " " + dir.file("bad.qdag") + " --exhaustive");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("counterexample") != std::string::npos);
  }

  SUBCASE("compile twice is byte-identical") {
    auto again = run("compile " + dir.file("tiny.bn") + " --query B --evidence A -o " +
                     dir.file("t2.qdag"));
    REQUIRE(again.exit_code == 0);
    CHECK(slurp(dir.file("t.qdag")) == slurp(dir.file("t2.qdag")));
  }

  SUBCASE("reduce emits a report and a loadable dag") {
    auto unreduced = run("compile " + dir.file("tiny.bn") +
                         " --query B --evidence A --no-reduce -o " + dir.file("raw.qdag"));
    REQUIRE(unreduced.exit_code == 0);
    auto reduced = run("reduce " + dir.file("raw.qdag") + " -o " + dir.file("red.qdag") +
                       " --report kv");
    CHECK(reduced.exit_code == 0);
    CHECK(reduced.output.find("cycles=") != std::string::npos);
    CHECK_NOTHROW(qdag::parse_qdag(slurp(dir.file("red.qdag"))));
  }
}

TEST_CASE("repl protocol") {
  TempDir dir;
  std::ofstream(dir.file("tiny.bn")) << qdag::test::kTinyNet;
  REQUIRE(run("compile " + dir.file("tiny.bn") + " --query B --evidence A -o " +
              dir.file("t.qdag"))
              .exit_code == 0);

  std::string script =
      "query B\n"
      "observe A=on\n"
      "query B\n"
      "posterior B\n"
      "retract A\n"
      "query B\n"
      "observe A=bogus\n"
      "reset\n"
      "quit\n";
  auto repl = run("eval " + dir.file("t.qdag") + " --repl", script);
  CHECK(repl.exit_code == 0);

  std::istringstream lines(repl.output);
  std::string l1, l2, l3, l4, l5, l6, l7, l8;
  std::getline(lines, l1);  // query B (prior)
  std::getline(lines, l2);  // ok (observe)
  std::getline(lines, l3);  // query B (A=on)
  std::getline(lines, l4);  // posterior B
  std::getline(lines, l5);  // ok (retract)
  std::getline(lines, l6);  // query B (prior again)
  std::getline(lines, l7);  // error (bogus state)
  std::getline(lines, l8);  // ok (reset)
  CHECK(l1.rfind("B on 0.44", 0) == 0);
  CHECK(l2 == "ok");
  CHECK(l3.rfind("B on 0.3", 0) == 0);
  CHECK(l4.rfind("B on 0.6", 0) == 0);  // 0.3 / 0.5
  CHECK(l5 == "ok");
  CHECK(l6 == l1);
  CHECK(l7.rfind("error:", 0) == 0);
  CHECK(l8 == "ok");
}

TEST_CASE("bench is deterministic and updates-only never recomputes") {
  TempDir dir;
  std::ofstream(dir.file("tiny.bn")) << qdag::test::kTinyNet;
  REQUIRE(run("compile " + dir.file("tiny.bn") + " --query B --evidence A -o " +
              dir.file("t.qdag"))
              .exit_code == 0);

  auto a = run("bench " + dir.file("t.qdag") + " --ops 200 --seed 7");
  auto b = run("bench " + dir.file("t.qdag") + " --ops 200 --seed 7");
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);
  CHECK(a.output.find("nodes_visited_total=") != std::string::npos);
  CHECK(value_after(a.output, "max_drift=") <= 1e-9);

  auto upd = run("bench " + dir.file("t.qdag") + " --ops 200 --seed 7 --updates-only");
  CHECK(upd.exit_code == 0);
  CHECK(upd.output.find("mul_recomputes=0") != std::string::npos);
}

TEST_CASE("failed compile leaves no partial output file") {
  TempDir dir;
  std::ofstream(dir.file("bad.bn")) << "network x\nvariable A : on off\ncpt A\n row 0.5 0.4\nend\n";
  auto res = run("compile " + dir.file("bad.bn") + " --query A -o " + dir.file("out.qdag"));
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("row-sum") != std::string::npos);
  CHECK(!fs::exists(dir.file("out.qdag")));
}
