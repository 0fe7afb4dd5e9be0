#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "advmc/cli.hpp"
#include "advmc/model_io.hpp"

using namespace advmc;

namespace {

struct CliRun {
  int exit_code;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path workdir() {
  auto dir = std::filesystem::temp_directory_path() / "advmc_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string make_simple_model() {
  auto path = (workdir() / "simple.json").string();
  CliRun r = run({"casestudy", "simple", "--out", path});
  REQUIRE(r.exit_code == 0);
  return path;
}

std::string make_grid3_model() {
  auto path = (workdir() / "grid3.json").string();
  CliRun r = run({"casestudy", "gridworld-3x3", "--out", path});
  REQUIRE(r.exit_code == 0);
  return path;
}

std::string write_threat(const std::string& name, const std::string& body) {
  auto path = (workdir() / name).string();
  write_text_file(path, body);
  return path;
}

}  // namespace

TEST_CASE("satprob prints the protocol delivery probability") {
  CliRun r = run({"satprob", make_simple_model(), "--prop", "P=? [ F<=10 delivered ]"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.substr(0, 10) == "0.99968000");
}

TEST_CASE("validate reports both model kinds") {
  CliRun ok = run({"validate", make_simple_model()});
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("dtmc with 4 states") != std::string::npos);

  auto bad_path = (workdir() / "broken.json").string();
  write_text_file(bad_path, R"({"type":"dtmc","n":2,"init":0,"atoms":[],
    "transitions":[{"from":0,"to":1,"p":0.7},{"from":1,"to":1,"p":1.0}]})");
  CliRun bad = run({"validate", bad_path});
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("error:") == 0);
}

TEST_CASE("usage problems exit with code 2") {
  CliRun r = run({"satprob"});
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error:") == 0);
  CliRun unknown = run({"frobnicate"});
  CHECK(unknown.exit_code == 2);
}

TEST_CASE("attack writes an oracle-checked result file") {
  std::string model = (workdir() / "chain4.json").string();
  write_text_file(model, R"({"type":"dtmc","n":4,"init":0,"atoms":[],"labels":{},
    "transitions":[
      {"from":0,"to":1,"p":0.6},{"from":0,"to":2,"p":0.4},
      {"from":1,"to":0,"p":0.1},{"from":1,"to":1,"p":0.1},{"from":1,"to":3,"p":0.8},
      {"from":2,"to":0,"p":0.3},{"from":2,"to":3,"p":0.7},
      {"from":3,"to":3,"p":1.0}]})");
  std::string threat = write_threat("spss1.json", R"({"kind":"SPSS","epsilon":0.1,"vulnerable_states":[1]})");
  std::string out_path = (workdir() / "attack.json").string();

  CliRun r = run({"attack", model, "--threat", threat, "--prop", "P=? [ s!=2 U<=10 s=3 ]",
                  "--method", "direct", "--out", out_path});
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("delta_star: 0.0330") != std::string::npos);

  auto parsed = nlohmann::json::parse(read_text_file(out_path));
  CHECK(parsed["method"] == "direct");
  CHECK(parsed["delta_star"].get<double>() == doctest::Approx(0.033061).epsilon(1e-4));
  CHECK(parsed["threat"]["kind"] == "SPSS");
  CHECK(parsed["property"] == "P=? [ s!=2 U<=10 s=3 ]");
  CHECK(parsed["traces"].is_array());

  // Determinism: a rerun differs only in the timing fields.
  std::string out2 = (workdir() / "attack2.json").string();
  CliRun again = run({"attack", model, "--threat", threat, "--prop", "P=? [ s!=2 U<=10 s=3 ]",
                      "--method", "direct", "--out", out2});
  REQUIRE(again.exit_code == 0);
  auto a = nlohmann::json::parse(read_text_file(out_path));
  auto b = nlohmann::json::parse(read_text_file(out2));
  a.erase("wall_seconds");
  a.erase("synth_seconds");
  b.erase("wall_seconds");
  b.erase("synth_seconds");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("verify drives its exit code from robustness") {
  std::string model = make_grid3_model();
  std::string threat = write_threat("ss137.json", R"({"kind":"SS","epsilon":0.3,"vulnerable_states":[1,3,7]})");

  CliRun robust = run({"verify", model, "--threat", threat, "--prop", "P=? [ !hazard U<=6 goal ]",
                       "--delta", "1"});
  CHECK(robust.exit_code == 0);
  CHECK(robust.out.find("robust: true") != std::string::npos);

  auto witness_path = (workdir() / "witness.json").string();
  CliRun broken = run({"verify", model, "--threat", threat, "--prop", "P=? [ !hazard U<=6 goal ]",
                       "--delta", "0.01", "--out", witness_path});
  CHECK(broken.exit_code == 3);
  CHECK(broken.out.find("robust: false") != std::string::npos);
  CHECK(std::filesystem::exists(witness_path));
}

TEST_CASE("max-delta prints a bare number") {
  std::string model = make_simple_model();
  std::string threat = write_threat("try.json", R"({"kind":"SPSS","epsilon":0.1,"vulnerable_states":[1]})");
  CliRun r = run({"max-delta", model, "--threat", threat, "--prop", "P=? [ F<=10 delivered ]"});
  CHECK(r.exit_code == 0);
  double expected = std::pow(0.3, 5) - std::pow(0.2, 5);
  CHECK(std::stod(r.out) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("sweep emits the closed-form protocol column") {
  std::string model = make_simple_model();
  std::string threat = write_threat("try2.json", R"({"kind":"SPSS","epsilon":0.0,"vulnerable_states":[1]})");
  auto csv_path = (workdir() / "sweep.csv").string();
  CliRun r = run({"sweep", model, "--threat", threat, "--prop", "P=? [ F<=10 delivered ]",
                  "--epsilons", "0,0.05,0.1,0.2,0.3", "--out", csv_path});
  REQUIRE(r.exit_code == 0);

  std::ifstream in(csv_path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "epsilon,pr_original,pr_perturbed,delta_star,method,wall_seconds");
  double eps_list[] = {0.0, 0.05, 0.1, 0.2, 0.3};
  for (double eps : eps_list) {
    std::string line;
    REQUIRE(std::getline(in, line));
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    CHECK(std::stod(field) == doctest::Approx(eps).epsilon(1e-12));
    std::getline(ss, field, ',');
    std::getline(ss, field, ',');
    CHECK(std::stod(field) == doctest::Approx(1.0 - std::pow(0.2 + eps, 5)).epsilon(1e-6));
    std::getline(ss, field, ',');
    if (eps == 0.0) CHECK(std::stod(field) == 0.0);
  }
}

TEST_CASE("component sweep emits one row per state") {
  std::string model = make_grid3_model();
  auto csv_path = (workdir() / "components.csv").string();
  CliRun r = run({"component-sweep", model, "--kind", "SPSS", "--epsilon", "0.2", "--prop",
                  "P=? [ !hazard U<=6 goal ]", "--out", csv_path});
  REQUIRE(r.exit_code == 0);
  std::ifstream in(csv_path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "state,delta_star");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("attack heatmaps expose the structural difference between SS and SPSS") {
  std::string model = make_grid3_model();
  std::string ss_threat = write_threat("hm_ss.json", R"({"kind":"SS","epsilon":0.3,"vulnerable_states":[1,3,7]})");
  std::string spss_threat =
      write_threat("hm_spss.json", R"({"kind":"SPSS","epsilon":0.3,"vulnerable_states":[1,3,7]})");

  auto prefix_ss = (workdir() / "hm_ss").string();
  CliRun ss = run({"attack", model, "--threat", ss_threat, "--prop", "P=? [ !hazard U<=6 goal ]",
                   "--emit-heatmap", prefix_ss});
  REQUIRE(ss.exit_code == 0);

  auto read_matrix = [](const std::string& path) {
    std::vector<std::vector<double>> mat;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      std::vector<double> row;
      std::stringstream ssline(line);
      std::string field;
      while (std::getline(ssline, field, ',')) row.push_back(std::stod(field));
      mat.push_back(row);
    }
    return mat;
  };

  auto deltas = read_matrix(prefix_ss + "_perturbation.csv");
  REQUIRE(deltas.size() == 9);
  double inflow2 = 0.0;
  for (int s : {1, 3, 7}) inflow2 = std::max(inflow2, deltas[s][2]);
  CHECK(inflow2 > 0.0);  // the unreachable hazard becomes reachable
  for (int s = 0; s < 9; ++s) {
    if (s == 1 || s == 3 || s == 7) continue;
    for (int t = 0; t < 9; ++t) CHECK(deltas[s][t] == 0.0);
  }

  auto prefix_spss = (workdir() / "hm_spss").string();
  CliRun spss = run({"attack", model, "--threat", spss_threat, "--prop", "P=? [ !hazard U<=6 goal ]",
                     "--emit-heatmap", prefix_spss});
  REQUIRE(spss.exit_code == 0);
  auto spss_deltas = read_matrix(prefix_spss + "_perturbation.csv");
  Dtmc grid3 = std::get<Dtmc>(load_model(model));
  for (int s = 0; s < 9; ++s)
    for (int t = 0; t < 9; ++t)
      if (grid3.prob(s, t) == 0.0) CHECK(spss_deltas[s][t] == 0.0);
}

TEST_CASE("idtmc export notes the structure-preserving pinning") {
  std::string model = make_grid3_model();
  std::string threat = write_threat("sp_idtmc.json", R"({"kind":"SPSS","epsilon":0.1,"vulnerable_states":[1]})");
  auto out_path = (workdir() / "intervals.json").string();
  CliRun r = run({"idtmc", model, "--threat", threat, "--out", out_path});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("note:") != std::string::npos);
  auto parsed = nlohmann::json::parse(read_text_file(out_path));
  CHECK(parsed["lower"].size() == 9);
  CHECK(parsed["upper"].size() == 9);
}

TEST_CASE("casestudy zeroconf requires its forward probability") {
  auto out_path = (workdir() / "zc.json").string();
  CliRun missing = run({"casestudy", "zeroconf", "--m", "50000", "--out", out_path});
  CHECK(missing.exit_code == 2);

  CliRun ok = run({"casestudy", "zeroconf", "--m", "50000", "--p", "0.5", "--out", out_path});
  CHECK(ok.exit_code == 0);
  Model loaded = load_model(out_path);
  CHECK(std::get<Dtmc>(loaded).n == 14);
}

TEST_CASE("bench emits one row per cell and agrees across methods") {
  auto csv_path = (workdir() / "bench.csv").string();
  CliRun r = run({"bench", "--grids", "5x5", "--params", "4", "--methods", "direct,symbolic",
                  "--out", csv_path, "--seed", "7", "--starts", "3", "--max-iters", "60"});
  REQUIRE(r.exit_code == 0);

  std::ifstream in(csv_path);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "property,n_states,n_params,method,synth_seconds,opt_seconds,total_seconds,delta_star,timeout");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(fields);
  }
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][3] == "direct");
  CHECK(rows[1][3] == "symbolic");
  CHECK(rows[0][8] == "0");
  CHECK(rows[1][8] == "0");
  CHECK(std::stod(rows[0][7]) == doctest::Approx(std::stod(rows[1][7])).epsilon(1e-6));
}

TEST_CASE("attacking early ticks costs more than attacking late ticks") {
  auto model_path = (workdir() / "zc_sweep.json").string();
  REQUIRE(run({"casestudy", "zeroconf", "--n", "10", "--m", "50000", "--p", "0.5", "--out", model_path})
              .exit_code == 0);
  std::string early = write_threat("zc_early.json",
                                   R"({"kind":"SPSS","epsilon":0.0,"vulnerable_states":[1,2,3,4,5]})");
  std::string late = write_threat("zc_late.json",
                                  R"({"kind":"SPSS","epsilon":0.0,"vulnerable_states":[6,7,8,9,10]})");

  auto delta_column = [&](const std::string& threat) {
    auto csv_path = (workdir() / "zc_sweep.csv").string();
    CliRun r = run({"sweep", model_path, "--threat", threat, "--prop", "P=? [ F<=30 succ ]",
                    "--epsilons", "0,0.1,0.2,0.3", "--out", csv_path});
    REQUIRE(r.exit_code == 0);
    std::vector<double> deltas;
    std::ifstream in(csv_path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string field;
      for (int i = 0; i < 4; ++i) std::getline(ss, field, ',');
      deltas.push_back(std::stod(field));
    }
    return deltas;
  };

  std::vector<double> early_deltas = delta_column(early);
  std::vector<double> late_deltas = delta_column(late);
  REQUIRE(early_deltas.size() == 4);
  REQUIRE(late_deltas.size() == 4);
  for (size_t i = 0; i < 4; ++i) CHECK(early_deltas[i] >= late_deltas[i] - 1e-9);
  CHECK(early_deltas[3] > late_deltas[3]);
}

TEST_CASE("the seed environment variable backs the --seed default") {
  auto with_env = (workdir() / "seed_env.json").string();
  auto with_flag = (workdir() / "seed_flag.json").string();
  auto with_default = (workdir() / "seed_default.json").string();

  setenv("ADVMC_SEED", "9", 1);
  REQUIRE(run({"casestudy", "gridworld", "--rows", "3", "--cols", "3", "--out", with_env}).exit_code == 0);
  unsetenv("ADVMC_SEED");
  REQUIRE(run({"casestudy", "gridworld", "--rows", "3", "--cols", "3", "--seed", "9", "--out", with_flag})
              .exit_code == 0);
  REQUIRE(run({"casestudy", "gridworld", "--rows", "3", "--cols", "3", "--out", with_default}).exit_code == 0);

  CHECK(read_text_file(with_env) == read_text_file(with_flag));
  CHECK(read_text_file(with_env) != read_text_file(with_default));  // default seed is 42
}

TEST_CASE("gridworld casestudy writes both the chain and the mdp") {
  auto chain_path = (workdir() / "gw.json").string();
  auto mdp_path = (workdir() / "gw_mdp.json").string();
  CliRun r = run({"casestudy", "gridworld", "--rows", "4", "--cols", "4", "--hazards", "4",
                  "--seed", "9", "--out", chain_path, "--emit-mdp", mdp_path});
  REQUIRE(r.exit_code == 0);
  CHECK(std::get<Dtmc>(load_model(chain_path)).n == 16);
  CHECK(std::get<Mdp>(load_model(mdp_path)).n == 16);

  // Same seed, same bytes.
  auto chain2 = (workdir() / "gw2.json").string();
  CliRun again = run({"casestudy", "gridworld", "--rows", "4", "--cols", "4", "--hazards", "4",
                      "--seed", "9", "--out", chain2});
  REQUIRE(again.exit_code == 0);
  CHECK(read_text_file(chain_path) == read_text_file(chain2));
}
