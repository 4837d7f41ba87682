#include "qdag/oracle.hpp"

#include "doctest.h"
#include "test_util.hpp"

using namespace qdag;
using namespace qdag::oracle;
using qdag::test::rel_close;
using qdag::test::throws_slug;

TEST_CASE("joint probability on the tiny network") {
  BeliefNetwork net = parse_network(test::kTinyNet);
  CHECK(joint_prob(net, {{"A", "on"}, {"B", "on"}}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(joint_prob(net, {{"A", "off"}, {"B", "on"}}) == doctest::Approx(0.14).epsilon(1e-12));
  CHECK(throws_slug([&] { joint_prob(net, {{"A", "on"}}); }, "incomplete-assignment"));
}

TEST_CASE("marginals by enumeration") {
  BeliefNetwork net = parse_network(test::kTinyNet);
  CHECK(rel_close(marginal(net, {{"B", "on"}}), 0.44));
  CHECK(rel_close(marginal(net, {{"A", "on"}}), 0.5));
  CHECK(rel_close(marginal(net, {}), 1.0, 1e-12));
}

TEST_CASE("random networks are well formed and sum to one") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomNetParams p;
    p.variables = 6;
    p.zero_density = (seed % 3) * 0.25;
    p.seed = seed;
    BeliefNetwork net = random_network(p);
    // every network must reparse from its own text form
    BeliefNetwork round = parse_network(to_text(net));
    CHECK(round.cpt == net.cpt);
    CHECK(rel_close(marginal(net, {}), 1.0));

    // sum-out consistency: fixing nothing vs summing one variable's states
    double total = 0.0;
    for (const auto& s : net.variables[0].states)
      total += marginal(net, {{net.variables[0].name, s}});
    CHECK(rel_close(total, 1.0));
  }
}

TEST_CASE("equivalence check is reflexive and spots perturbations") {
  QDag dag = test::random_dag(7);
  EquivalenceResult self = check_equivalent(dag, dag);
  CHECK(self.equivalent);
  CHECK(self.assignments_checked == (1u << dag.esn_nodes.size()));

  QDag tweaked = dag;
  for (auto& n : tweaked.nodes)
    if (n.type == NodeType::Num && n.label > 0.1) {
      n.label += 1e-3;
      break;
    }
  EquivalenceResult diff = check_equivalent(dag, tweaked);
  CHECK(!diff.equivalent);
  CHECK(!diff.describe().empty());
}

TEST_CASE("equivalence check validates its inputs") {
  QDag a;
  a.esn("V", "x");
  a.register_query("Q", "q", a.mul({0}));

  QDag extra;
  extra.esn("V", "x");
  extra.esn("W", "y");
  extra.register_query("Q", "q", extra.mul({0, 1}));

  CHECK(throws_slug([&] { check_equivalent(a, extra); }, "esn-set-mismatch"));
  CHECK_NOTHROW(check_equivalent(extra, a));  // subset direction is allowed

  QDag other;
  other.esn("V", "x");
  other.register_query("Q", "other", other.mul({0}));
  CHECK(throws_slug([&] { check_equivalent(a, other); }, "query-set-mismatch"));

  QDag wide;
  for (int i = 0; i < 13; ++i) wide.esn("V" + std::to_string(i), "x");
  wide.register_query("Q", "q", wide.add({0, 1, 2}));
  CHECK(throws_slug([&] { check_equivalent(wide, wide); }, "too-many-esns-for-exhaustive"));
  CHECK(check_equivalent_sampled(wide, wide, 64, 9).equivalent);
  CHECK(check_equivalent_auto(wide, wide).equivalent);
}

TEST_CASE("eval_under matches hand arithmetic") {
  QDag dag;
  NodeId e_on = dag.esn("C", "on");
  NodeId n = dag.num(0.4);
  NodeId m = dag.mul({e_on, n});
  dag.register_query("C", "on", m);

  auto all_ones = eval_under(dag, {});
  CHECK(all_ones[m] == 0.4);
  auto off = eval_under(dag, {{{"C", "on"}, 0.0}});
  CHECK(off[m] == 0.0);
}
