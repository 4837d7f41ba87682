#include "qdag/network.hpp"

#include "doctest.h"
#include "test_util.hpp"

using namespace qdag;
using qdag::test::throws_slug;

TEST_CASE("parse tiny network") {
  BeliefNetwork net = parse_network(test::kTinyNet);
  CHECK(net.name == "tiny");
  REQUIRE(net.variables.size() == 2);
  CHECK(net.variables[0].name == "A");
  CHECK(net.variables[1].parents == std::vector<std::string>{"A"});
  CHECK(net.cpt_entry(0, 0, 0) == 0.5);
  CHECK(net.cpt_entry(1, 0, 0) == 0.6);   // row A=on
  CHECK(net.cpt_entry(1, 1, 0) == 0.28);  // row A=off
  CHECK(net.cpt_entry(1, 1, 1) == 0.72);
}

TEST_CASE("parse rejects malformed networks") {
  CHECK(throws_slug(
      [] {
        parse_network("network x\nvariable A : on off\ncpt A\n  row 0.5 0.4\nend\n");
      },
      "row-sum"));
  CHECK(throws_slug(
      [] {
        parse_network("network x\nvariable A : on off\ncpt A | B\n  row 0.5 0.5\nend\n");
      },
      "undeclared-parent"));
  CHECK(throws_slug(
      [] {
        parse_network(
            "network x\nvariable A : on off\nvariable B : on off\n"
            "cpt A | B\n  row on : 1 0\n  row off : 0 1\nend\n"
            "cpt B | A\n  row on : 1 0\n  row off : 0 1\nend\n");
      },
      "cycle"));
  CHECK(throws_slug(
      [] {
        parse_network(
            "network x\nvariable A : on off\nvariable B : on off\n"
            "cpt A\n  row 1 0\nend\n"
            "cpt B | A\n  row on : 1 0\nend\n");
      },
      "missing-row"));
  CHECK(throws_slug(
      [] {
        parse_network(
            "network x\nvariable A : on off\n"
            "cpt A\n  row 1 0\n  row 0 1\nend\n");
      },
      "duplicate-row"));
  CHECK(throws_slug([] { parse_network("network x\nvariable A : on off\n"); }, "missing-cpt"));
  CHECK(throws_slug([] { parse_network("network x\nbogus\n"); }, "syntax-error: line 2"));
}

TEST_CASE("row order puts the last parent fastest") {
  const char* src =
      "network t\n"
      "variable P : p0 p1\n"
      "variable Q : q0 q1 q2\n"
      "variable X : x0 x1\n"
      "cpt P\n row 0.5 0.5\nend\n"
      "cpt Q\n row 0.2 0.3 0.5\nend\n"
      "cpt X | P Q\n"
      " row p0 q0 : 0.01 0.99\n"
      " row p0 q1 : 0.02 0.98\n"
      " row p0 q2 : 0.03 0.97\n"
      " row p1 q0 : 0.04 0.96\n"
      " row p1 q1 : 0.05 0.95\n"
      " row p1 q2 : 0.06 0.94\n"
      "end\n";
  BeliefNetwork net = parse_network(src);
  std::size_t x = net.require_index("X");
  CHECK(net.row_count(x) == 6);
  CHECK(net.cpt_entry(x, 0, 0) == 0.01);  // p0 q0
  CHECK(net.cpt_entry(x, 2, 0) == 0.03);  // p0 q2: Q cycles fastest
  CHECK(net.cpt_entry(x, 3, 0) == 0.04);  // p1 q0
}

TEST_CASE("to_text round-trips") {
  BeliefNetwork net = parse_network(test::kTinyNet);
  std::string text = to_text(net);
  BeliefNetwork again = parse_network(text);
  CHECK(to_text(again) == text);
  CHECK(again.cpt == net.cpt);
}
