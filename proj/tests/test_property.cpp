#include "doctest.h"

#include "advmc/case_studies.hpp"
#include "advmc/property.hpp"
#include "test_support.hpp"

using namespace advmc;
using advmc::testing::four_state_chain;
using advmc::testing::oracle_sat_prob;
using advmc::testing::random_dtmc;

TEST_CASE("parser produces the documented shapes") {
  PathFormula a = parse_property("P=? [ !hazard U<=6 goal ]");
  CHECK(a.kind == PathFormula::Kind::Until);
  REQUIRE(a.bound.has_value());
  CHECK(*a.bound == 6);
  CHECK(a.lhs.kind == StateExpr::Kind::Not);
  CHECK(a.lhs.kids[0].atom == "hazard");
  CHECK(a.rhs.atom == "goal");
  CHECK_FALSE(a.complement);

  PathFormula b = parse_property("P=? [ F<=10 delivered ]");
  CHECK(b.kind == PathFormula::Kind::Until);
  CHECK(b.lhs.kind == StateExpr::Kind::True);
  CHECK(b.rhs.atom == "delivered");
  CHECK(*b.bound == 10);

  PathFormula c = parse_property("P=? [s!=5 U s=24]");
  CHECK_FALSE(c.bound.has_value());
  CHECK(c.lhs.kind == StateExpr::Kind::StateNe);
  CHECK(c.lhs.state == 5);
  CHECK(c.rhs.kind == StateExpr::Kind::StateEq);
  CHECK(c.rhs.state == 24);

  PathFormula d = parse_property("P=? [ G<=4 !err ]");
  CHECK(d.complement);
  CHECK(d.rhs.kind == StateExpr::Kind::Not);  // negated operand of the F-dual

  PathFormula e = parse_property("P=? [ X (a | b & !c) ]");
  CHECK(e.kind == PathFormula::Kind::Next);
  CHECK(e.rhs.kind == StateExpr::Kind::Or);  // & binds tighter than |
}

TEST_CASE("parser rejects what the fragment excludes") {
  auto expect_syntax_error = [](const std::string& text, const char* needle) {
    try {
      parse_property(text);
      FAIL_CHECK("expected SyntaxError for: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SyntaxError);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_syntax_error("P=? [ F F goal ]", "nested temporal");
  expect_syntax_error("P=? [ X G goal ]", "nested temporal");
  expect_syntax_error("P=? [ F goal & G safe ]", "boolean combinations of path formulae");
  expect_syntax_error("P=? [ goal U ]", "state expression");
  expect_syntax_error("P=? [ s goal ]", "'=' or '!='");
  expect_syntax_error("P=? [ F<= goal ]", "step bound");
  expect_syntax_error("Q=? [ F goal ]", "'P'");
  expect_syntax_error("P=? [ F goal ] trailing", "end of property");
}

TEST_CASE("whitespace never matters") {
  PathFormula tight = parse_property("P=?[!hazard U<=6 goal]");
  PathFormula loose = parse_property("  P =? [ ! hazard  U <= 6   goal ]  ");
  CHECK(tight.lhs.kids[0].atom == loose.lhs.kids[0].atom);
  CHECK(*tight.bound == *loose.bound);
}

TEST_CASE("simple protocol delivery probability matches the closed form") {
  Dtmc m = simple_protocol();
  PathFormula phi = parse_property("P=? [ F<=10 delivered ]");
  double p = sat_prob(m, phi);
  CHECK(p == doctest::Approx(1.0 - std::pow(0.2, 5)).epsilon(1e-12));
  CHECK(p == doctest::Approx(oracle_sat_prob(m, phi)).epsilon(1e-12));
}

TEST_CASE("until satisfied at step zero is certain") {
  Dtmc m = four_state_chain();
  m.atoms = {"here"};
  m.labels[0] = {0};
  CHECK(sat_prob(m, parse_property("P=? [ false U here ]")) == 1.0);
  CHECK(sat_prob(m, parse_property("P=? [ false U<=0 here ]")) == 1.0);
}

TEST_CASE("the running example bounded-until value matches path enumeration") {
  Dtmc m = four_state_chain();
  PathFormula phi = parse_property("P=? [ s!=2 U<=10 s=3 ]");
  double value = sat_prob(m, phi);
  double oracle = oracle_sat_prob(m, phi);
  CHECK(value == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(value == doctest::Approx(0.571421).epsilon(1e-5));
}

TEST_CASE("next is a single matrix-vector product") {
  Dtmc m = four_state_chain();
  double p = sat_prob(m, parse_property("P=? [ X s=2 ]"));
  CHECK(p == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("bounded until agrees with exhaustive enumeration on random chains") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Dtmc m = random_dtmc(2 + static_cast<int>(seed % 4), seed);
    long k = static_cast<long>(seed % 9);
    PathFormula phi = parse_property("P=? [ a U<=" + std::to_string(k) + " b ]");
    CHECK(sat_prob(m, phi) == doctest::Approx(oracle_sat_prob(m, phi)).epsilon(1e-12));
  }
}

TEST_CASE("bounded until grows with the bound and converges to the unbounded solve") {
  for (std::uint64_t seed = 3; seed <= 6; ++seed) {
    Dtmc m = random_dtmc(10, seed);
    PathFormula unbounded = parse_property("P=? [ a U b ]");
    double limit = sat_prob(m, unbounded);
    double previous = -1.0;
    for (long k = 0; k <= 64; ++k) {
      PathFormula phi = parse_property("P=? [ a U<=" + std::to_string(k) + " b ]");
      double value = sat_prob(m, phi);
      CHECK(value >= previous - 1e-15);
      previous = value;
    }
    CHECK(previous == doctest::Approx(limit).epsilon(1e-8));
  }
}

TEST_CASE("globally and eventually complement each other exactly") {
  for (std::uint64_t seed = 2; seed <= 10; ++seed) {
    Dtmc m = random_dtmc(6, seed);
    for (long k : {0L, 3L, 9L}) {
      double g = sat_prob(m, parse_property("P=? [ G<=" + std::to_string(k) + " a ]"));
      double f = sat_prob(m, parse_property("P=? [ F<=" + std::to_string(k) + " !a ]"));
      CHECK(g + f == 1.0);  // exact, not approximate
    }
    double g = sat_prob(m, parse_property("P=? [ G a ]"));
    double f = sat_prob(m, parse_property("P=? [ F !a ]"));
    CHECK(g + f == 1.0);
  }
}

TEST_CASE("unbounded until classifies certain and impossible states") {
  Dtmc m = simple_protocol();
  CHECK(sat_prob(m, parse_property("P=? [ F delivered ]")) == 1.0);
  CHECK(sat_prob(m, parse_property("P=? [ F<=0 delivered ]")) == 0.0);

  // A chain that can die in an absorbing non-goal state.
  Dtmc trap;
  trap.n = 3;
  trap.init = 0;
  trap.atoms = {"goal"};
  trap.labels.resize(3);
  trap.labels[1] = {0};
  trap.rows = {{{1, 0.5}, {2, 0.5}}, {{1, 1.0}}, {{2, 1.0}}};
  CHECK(sat_prob(trap, parse_property("P=? [ F goal ]")) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("sub-stochastic rows behave as absorption into a losing sink") {
  Dtmc m;
  m.n = 2;
  m.init = 0;
  m.atoms = {"goal"};
  m.labels.resize(2);
  m.labels[1] = {0};
  m.rows = {{{0, 0.3}, {1, 0.5}}, {{1, 1.0}}};  // row 0 leaks 0.2

  double bounded = sat_prob(m, parse_property("P=? [ F<=50 goal ]"));
  double unbounded = sat_prob(m, parse_property("P=? [ F goal ]"));
  // Closed form: 0.5 / (1 - 0.3).
  CHECK(unbounded == doctest::Approx(0.5 / 0.7).epsilon(1e-12));
  CHECK(bounded == doctest::Approx(unbounded).epsilon(1e-7));
  CHECK(bounded <= unbounded + 1e-15);
}

TEST_CASE("evaluation errors carry their codes") {
  Dtmc m = four_state_chain();
  try {
    sat_prob(m, parse_property("P=? [ F nosuch ]"));
    FAIL("expected UnknownAtom");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownAtom);
  }
  try {
    sat_prob(m, parse_property("P=? [ F s=99 ]"));
    FAIL("expected StateIndexOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::StateIndexOutOfRange);
  }
}

TEST_CASE("repeated evaluation is bit-identical") {
  Dtmc m = random_dtmc(8, 77);
  PathFormula phi = parse_property("P=? [ a U<=17 b ]");
  double first = sat_prob(m, phi);
  for (int i = 0; i < 5; ++i) CHECK(sat_prob(m, phi) == first);

  std::vector<double> all = sat_prob_all_states(m, phi);
  CHECK(all[m.init] == first);
}
