#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "advmc/case_studies.hpp"
#include "advmc/model_io.hpp"
#include "test_support.hpp"

using namespace advmc;
using advmc::testing::four_state_chain;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "advmc_io_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("dtmc JSON round-trips bit-for-bit") {
  Dtmc m = four_state_chain();
  m.atoms = {"left", "goal"};
  m.labels[2] = {0};
  m.labels[3] = {1};

  std::string text = model_to_json(m);
  Model loaded = parse_model_json(text);
  REQUIRE(std::holds_alternative<Dtmc>(loaded));
  CHECK(std::get<Dtmc>(loaded) == m);

  // A second store of the loaded model reproduces the bytes exactly.
  CHECK(model_to_json(std::get<Dtmc>(loaded)) == text);
}

TEST_CASE("stored probabilities carry full precision") {
  Dtmc m = four_state_chain();
  m.rows[0][0].p = 1.0 / 3.0;
  m.rows[0][1].p = 2.0 / 3.0;
  std::string text = model_to_json(m);
  CHECK(text.find("3.3333333333333331e-01") != std::string::npos);
  Model loaded = parse_model_json(text);
  CHECK(std::get<Dtmc>(loaded).prob(0, 1) == 1.0 / 3.0);
}

TEST_CASE("mdp JSON round-trips through a file") {
  auto [mdp, policy] = random_gridworld(GridSpec{3, 3, {2}, {8}, 0.25, 11});
  std::string path = temp_path("grid.json");
  store_model(mdp, path);
  Model loaded = load_model(path);
  REQUIRE(std::holds_alternative<Mdp>(loaded));
  CHECK(std::get<Mdp>(loaded) == mdp);
}

TEST_CASE("loader reports malformed input with context") {
  CHECK_THROWS_AS(parse_model_json("{not json"), Error);

  try {
    parse_model_json(R"({"type":"dtmc","n":2,"init":0,"atoms":[],
      "transitions":[{"from":0,"to":1}]})");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("transitions[0]") != std::string::npos);
  }

  try {
    parse_model_json(R"({"type":"dtmc","n":2,"init":0,"atoms":[],
      "transitions":[{"from":0,"action":"up","to":1,"p":1.0},{"from":1,"to":1,"p":1.0}]})");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("action") != std::string::npos);
  }
}

TEST_CASE("loader rejects duplicate transitions and bad rows") {
  try {
    parse_model_json(R"({"type":"dtmc","n":2,"init":0,"atoms":[],
      "transitions":[{"from":0,"to":1,"p":0.5},{"from":0,"to":1,"p":0.5},{"from":1,"to":1,"p":1.0}]})");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }

  // A state without outgoing transitions is a row-sum violation, never an
  // implicit self-loop.
  try {
    parse_model_json(R"({"type":"dtmc","n":2,"init":0,"atoms":[],
      "transitions":[{"from":0,"to":1,"p":1.0}]})");
    FAIL("expected RowSumViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RowSumViolation);
  }
}

TEST_CASE("threat specs parse in both shapes") {
  ThreatModel ss = parse_threat_json(R"({"kind":"SS","epsilon":0.1,"vulnerable_states":[1]})");
  CHECK(ss.kind == ThreatKind::SS);
  CHECK(ss.epsilon == 0.1);
  CHECK(ss.vulnerable_states == std::vector<int>{1});

  ThreatModel st = parse_threat_json(
      R"({"kind":"SPST","epsilon":0.25,"vulnerable_transitions":[[0,1],[0,2]]})");
  CHECK(st.kind == ThreatKind::SPST);
  REQUIRE(st.vulnerable_transitions.size() == 2);
  CHECK(st.vulnerable_transitions[1] == std::pair<int, int>{0, 2});

  CHECK(parse_threat_json(threat_to_json(ss)).epsilon == ss.epsilon);
  CHECK_THROWS_AS(parse_threat_json(R"({"kind":"SS","epsilon":0.1,"vulnerable_transitions":[[0,1]]})"),
                  Error);
  CHECK_THROWS_AS(parse_threat_json(R"({"kind":"SS","epsilon":1.5,"vulnerable_states":[0]})"), Error);
}

TEST_CASE("idtmc export serializes dense matrices") {
  IdtmcExport e;
  e.lower = {{0.0, 0.5}, {0.25, 0.25}};
  e.upper = {{0.5, 1.0}, {0.75, 0.75}};
  std::string text = idtmc_to_json(e);
  CHECK(text.find("\"lower\"") != std::string::npos);
  CHECK(text.find("5.0000000000000000e-01") != std::string::npos);
}
