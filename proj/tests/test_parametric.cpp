#include "doctest.h"

#include <random>

#include "advmc/case_studies.hpp"
#include "advmc/parametric.hpp"
#include "test_support.hpp"

using namespace advmc;
using advmc::testing::four_state_chain;

namespace {

// Vulnerable state 1 doubles as the protocol's retry state and the running
// example's attacked state.
ThreatModel spss_v1(double eps = 0.1) {
  ThreatModel tm;
  tm.kind = ThreatKind::SPSS;
  tm.epsilon = eps;
  tm.vulnerable_states = {1};
  return tm;
}

ThreatModel spss_try(double eps = 0.1) { return spss_v1(eps); }

}  // namespace

TEST_CASE("pdtmc construction mirrors the threat model") {
  Dtmc m = four_state_chain();
  Pdtmc pd = build_pdtmc(m, spss_v1());
  REQUIRE(pd.variables.size() == 3);
  CHECK((*pd.vars)[0] == "v1_0");
  CHECK((*pd.vars)[1] == "v1_1");
  CHECK((*pd.vars)[2] == "v1_3");

  // Zero budget: every variable is frozen, the chain stays explicit.
  ThreatModel frozen = spss_v1(0.0);
  Pdtmc pd0 = build_pdtmc(m, frozen);
  CHECK(pd0.variables.empty());
  CHECK(pd0.instantiate_at({}) == m);

  ThreatModel empty;
  empty.kind = ThreatKind::SPST;
  empty.epsilon = 0.1;
  empty.vulnerable_transitions = {{0, 0}};
  CHECK_THROWS_AS(build_pdtmc(m, empty), Error);
}

TEST_CASE("selected-states pdtmc gains cells for added transitions") {
  Dtmc m = four_state_chain();
  ThreatModel ss = spss_v1();
  ss.kind = ThreatKind::SS;
  Pdtmc pd = build_pdtmc(m, ss);
  REQUIRE(pd.variables.size() == 4);
  Dtmc at_base = pd.instantiate_at(pd.base_point());
  CHECK(at_base.prob(1, 2) == 0.0);  // new cell, zero at the base point
  CHECK(at_base.prob(1, 3) == 0.8);
}

TEST_CASE("bounded synthesis reproduces the retry closed form") {
  Dtmc m = simple_protocol();
  Pdtmc pd = build_pdtmc(m, spss_try());
  REQUIRE(pd.variables.size() == 2);  // v1_2 (lost), v1_3 (delivered)
  Polynomial f = symbolic_bounded_until(pd, parse_property("P=? [ F<=10 delivered ]"));
  CHECK(f.total_degree() <= 10);

  for (double q : {0.0, 0.5, 0.8, 1.0}) {
    double value = instantiate(f, {{"v1_2", 1.0 - q}, {"v1_3", q}});
    double closed = 1.0 - std::pow(1.0 - q, 5);
    CHECK(value == doctest::Approx(closed).epsilon(1e-12));
    Dtmc chain = pd.instantiate_at(std::vector<double>{1.0 - q, q});
    CHECK(value == doctest::Approx(sat_prob(chain, parse_property("P=? [ F<=10 delivered ]")))
                       .epsilon(1e-12));
  }
}

TEST_CASE("a zero-variable pdtmc synthesizes the constant satisfaction probability") {
  Dtmc m = simple_protocol();
  Pdtmc pd = build_pdtmc(m, spss_try(0.0));
  Polynomial f = symbolic_bounded_until(pd, parse_property("P=? [ F<=10 delivered ]"));
  CHECK(f.is_constant());
  CHECK(f.evaluate({}) == doctest::Approx(sat_prob(m, parse_property("P=? [ F<=10 delivered ]")))
                              .epsilon(1e-12));
}

TEST_CASE("the running example polynomial instantiates to the direct value") {
  Dtmc m = four_state_chain();
  Pdtmc pd = build_pdtmc(m, spss_v1());
  PathFormula phi = parse_property("P=? [ s!=2 U<=10 s=3 ]");
  Polynomial f = symbolic_bounded_until(pd, phi);
  CHECK(f.total_degree() <= 10);
  double value = instantiate(f, {{"v1_0", 0.1}, {"v1_1", 0.1}, {"v1_3", 0.8}});
  CHECK(value == doctest::Approx(sat_prob(m, phi)).epsilon(1e-12));
  CHECK(value == doctest::Approx(0.571421).epsilon(1e-5));
}

TEST_CASE("unbounded synthesis classifies certain delivery as the constant one") {
  Dtmc m = simple_protocol();
  Pdtmc pd = build_pdtmc(m, spss_try());
  RationalFunction f = symbolic_unbounded_until(pd, parse_property("P=? [ F delivered ]"));
  CHECK(f.num().is_constant());
  CHECK(f.den().is_constant());
  CHECK(f.evaluate(std::vector<double>{0.2, 0.8}) == 1.0);
}

TEST_CASE("two-state parametric reachability collapses to one") {
  Dtmc m;
  m.n = 2;
  m.init = 0;
  m.atoms = {"goal"};
  m.labels.resize(2);
  m.labels[1] = {0};
  m.rows = {{{0, 0.5}, {1, 0.5}}, {{1, 1.0}}};
  ThreatModel tm;
  tm.kind = ThreatKind::SPSS;
  tm.epsilon = 0.4;
  tm.vulnerable_states = {0};
  Pdtmc pd = build_pdtmc(m, tm);
  RationalFunction f = symbolic_unbounded_until(pd, parse_property("P=? [ F goal ]"));
  CHECK(f.num().is_constant());
  std::vector<double> at = {0.3, 0.7};
  CHECK(f.evaluate(at) == 1.0);
}

TEST_CASE("the running example reaches the absorbing state with certainty") {
  Dtmc m = four_state_chain();
  Pdtmc pd = build_pdtmc(m, spss_v1());
  RationalFunction f = symbolic_unbounded_until(pd, parse_property("P=? [ F s=3 ]"));
  std::vector<double> base = pd.base_point();
  CHECK(f.evaluate(base) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unbounded synthesis matches the direct solve at random feasible points") {
  Dtmc m = four_state_chain();
  ThreatModel tm = spss_v1();
  Pdtmc pd = build_pdtmc(m, tm);
  PathFormula phi = parse_property("P=? [ s!=2 U s=3 ]");
  RationalFunction f = symbolic_unbounded_until(pd, phi);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    PerturbationMatrix x = random_feasible_point(m, tm, seed);
    std::vector<double> point = pd.base_point();
    for (size_t i = 0; i < pd.variables.size(); ++i)
      point[i] += x.delta(pd.variables[i].from, pd.variables[i].to);
    double symbolic = f.evaluate(point);
    double direct = sat_prob(pd.instantiate_at(point), phi);
    CHECK(symbolic == doctest::Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("elimination order does not change the instantiated value") {
  Dtmc m = gridworld_3x3();
  ThreatModel tm;
  tm.kind = ThreatKind::SPSS;
  tm.epsilon = 0.05;
  tm.vulnerable_states = {1, 3};
  Pdtmc pd = build_pdtmc(m, tm);
  PathFormula phi = parse_property("P=? [ !hazard U goal ]");

  SynthesisOptions default_order, ascending, descending;
  ascending.order = EliminationOrder::IndexAscending;
  descending.order = EliminationOrder::IndexDescending;
  RationalFunction a = symbolic_unbounded_until(pd, phi, default_order);
  RationalFunction b = symbolic_unbounded_until(pd, phi, ascending);
  RationalFunction c = symbolic_unbounded_until(pd, phi, descending);

  std::mt19937_64 gen(3);
  for (int round = 0; round < 25; ++round) {
    std::vector<double> point = pd.base_point();
    PerturbationMatrix x = random_feasible_point(m, tm, gen());
    for (size_t i = 0; i < pd.variables.size(); ++i)
      point[i] += x.delta(pd.variables[i].from, pd.variables[i].to);
    double va = a.evaluate(point);
    CHECK(va == doctest::Approx(b.evaluate(point)).epsilon(1e-12));
    CHECK(va == doctest::Approx(c.evaluate(point)).epsilon(1e-12));
  }
}

TEST_CASE("complement properties synthesize through their dual") {
  Dtmc m = gridworld_3x3();
  ThreatModel tm = spss_v1(0.05);
  Pdtmc pd = build_pdtmc(m, tm);
  Polynomial f = symbolic_bounded_until(pd, parse_property("P=? [ G<=6 !hazard ]"));
  std::vector<double> base = pd.base_point();
  double expected = sat_prob(m, parse_property("P=? [ G<=6 !hazard ]"));
  CHECK(f.evaluate(base) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("symbolic backends reject formulas outside their fragment") {
  Dtmc m = four_state_chain();
  Pdtmc pd = build_pdtmc(m, spss_v1());
  try {
    symbolic_bounded_until(pd, parse_property("P=? [ s!=2 U s=3 ]"));
    FAIL("expected UnsupportedForSymbolic");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedForSymbolic);
  }
  try {
    symbolic_unbounded_until(pd, parse_property("P=? [ s!=2 U<=4 s=3 ]"));
    FAIL("expected UnsupportedForSymbolic");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedForSymbolic);
  }
}

TEST_CASE("a tiny monomial budget fails cleanly") {
  Dtmc m = four_state_chain();
  Pdtmc pd = build_pdtmc(m, spss_v1());
  SynthesisOptions opts;
  opts.monomial_cap = 3;
  try {
    symbolic_bounded_until(pd, parse_property("P=? [ s!=2 U<=10 s=3 ]"), opts);
    FAIL("expected DegreeOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegreeOverflow);
  }
}

TEST_CASE("differentiate matches finite differences at feasible points") {
  Dtmc m = simple_protocol();
  Pdtmc pd = build_pdtmc(m, spss_try());
  Polynomial f = symbolic_bounded_until(pd, parse_property("P=? [ F<=10 delivered ]"));
  Polynomial df = differentiate(f, "v1_3");
  std::mt19937_64 gen(17);
  for (int round = 0; round < 20; ++round) {
    double q = advmc::testing::uniform01(gen);
    std::map<std::string, double> at = {{"v1_2", 1.0 - q}, {"v1_3", q}};
    std::map<std::string, double> up = at, down = at;
    up["v1_3"] += 1e-6;
    down["v1_3"] -= 1e-6;
    double fd = (instantiate(f, up) - instantiate(f, down)) / 2e-6;
    double analytic = instantiate(df, at);
    CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK_THROWS_AS(differentiate(f, "nosuch"), Error);
  CHECK_THROWS_AS(instantiate(f, {{"v1_2", 0.5}}), Error);  // missing v1_3
}
