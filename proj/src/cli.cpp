#include "advmc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "advmc/attack.hpp"
#include "advmc/case_studies.hpp"
#include "advmc/model_io.hpp"

namespace advmc {

namespace {

using nlohmann::json;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ADVMC_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
  }
  return 42;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

std::string seconds6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

Dtmc require_dtmc(Model model, const std::string& path) {
  if (std::holds_alternative<Dtmc>(model)) return std::move(std::get<Dtmc>(model));
  fail(Errc::ParameterOutOfRange,
       "'" + path + "' holds an MDP; compose it into a chain first (casestudy gridworld emits the composed DTMC)");
}

struct RunOpts {
  std::string method = "direct";
  std::uint64_t seed = default_seed();
  double timeout = 0.0;  // seconds; 0 disables the deadline
  int starts = 5;
  int max_iterations = 200;

  OptimizerOptions optimizer() const {
    OptimizerOptions opts;
    opts.seed = seed;
    opts.starts = starts;
    opts.max_iterations = max_iterations;
    if (timeout > 0.0)
      opts.deadline = std::chrono::steady_clock::now() +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(timeout));
    return opts;
  }
};

void add_run_options(CLI::App* cmd, RunOpts& run, bool with_method = true) {
  if (with_method)
    cmd->add_option("--method", run.method, "objective backend: direct|symbolic")
        ->check(CLI::IsMember({"direct", "symbolic"}));
  cmd->add_option("--seed", run.seed, "PRNG seed (default: ADVMC_SEED or 42)");
  cmd->add_option("--timeout", run.timeout, "per-run deadline in seconds (0 = none)");
  cmd->add_option("--starts", run.starts, "optimizer starts")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", run.max_iterations, "iterations per start")->check(CLI::PositiveNumber);
}

std::vector<double> parse_epsilons(const std::string& spec) {
  std::vector<double> eps;
  if (spec.find(':') != std::string::npos) {
    double start = 0, stop = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0)
      fail(Errc::ParseError, "epsilon range must be start:stop:step, got '" + spec + "'");
    for (double e = start; e <= stop + 1e-12; e += step) eps.push_back(std::min(e, stop));
  } else {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      eps.push_back(std::stod(item));
    }
  }
  if (eps.empty()) fail(Errc::ParseError, "no epsilon values in '" + spec + "'");
  for (size_t i = 0; i < eps.size(); ++i) {
    if (eps[i] < 0.0 || eps[i] > 1.0)
      fail(Errc::ParameterOutOfRange, "epsilon " + num(eps[i]) + " outside [0,1]");
    if (i > 0 && eps[i] < eps[i - 1])
      fail(Errc::ParameterOutOfRange, "epsilon values must be ascending");
  }
  return eps;
}

std::vector<int> parse_int_list(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

json attack_to_json(const AttackResult& r, const ThreatModel& tm, const std::string& prop) {
  json x_star = json::array();
  for (const auto& [key, delta] : r.x_star.entries)
    x_star.push_back({{"from", key.first}, {"to", key.second}, {"delta", delta}});
  json traces = json::array();
  for (const StartTrace& t : r.traces)
    traces.push_back({{"start", t.start},
                      {"iterations", t.iterations},
                      {"converged", t.converged},
                      {"objectives", t.objectives}});
  return json{{"method", method_name(r.method)},
              {"property", prop},
              {"threat", json::parse(threat_to_json(tm))},
              {"pr_original", r.pr_original},
              {"pr_perturbed", r.pr_perturbed},
              {"delta_star", r.delta_star},
              {"x_star", x_star},
              {"starts", r.starts},
              {"iterations", r.iterations},
              {"wall_seconds", r.wall_seconds},
              {"synth_seconds", r.synth_seconds},
              {"traces", traces}};
}

std::string matrix_csv(const std::vector<std::vector<double>>& mat) {
  std::ostringstream out;
  for (const auto& row : mat) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << num(row[c]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::vector<double>> dense_matrix(const Dtmc& model) {
  std::vector<std::vector<double>> mat(model.n, std::vector<double>(model.n, 0.0));
  for (int s = 0; s < model.n; ++s)
    for (const Transition& t : model.rows[s]) mat[s][t.to] = t.p;
  return mat;
}

void emit_heatmaps(const Dtmc& model, const PerturbationMatrix& x, const std::string& prefix) {
  auto original = dense_matrix(model);
  std::vector<std::vector<double>> deltas(model.n, std::vector<double>(model.n, 0.0));
  for (const auto& [key, d] : x.entries) deltas[key.first][key.second] = d;
  auto perturbed = dense_matrix(apply_perturbation(model, x));
  write_text_file(prefix + "_original.csv", matrix_csv(original));
  write_text_file(prefix + "_perturbation.csv", matrix_csv(deltas));
  write_text_file(prefix + "_perturbed.csv", matrix_csv(perturbed));
}

void write_or_print(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) out << content;
  else write_text_file(path, content);
}

/// Picks `count` ST parameters for the bench harness: vulnerable rows are
/// drawn by seeded shuffle and each contributes at least two transitions, so
/// the row-sum constraint never freezes a lone variable.
ThreatModel bench_threat(const Dtmc& composed, int count, double epsilon, std::uint64_t seed) {
  std::mt19937_64 gen(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(count));
  std::vector<int> rows;
  for (int s = 0; s < composed.n; ++s) {
    size_t nonzero = 0;
    for (const Transition& t : composed.rows[s])
      if (t.p > 0.0 && !(t.to == s && composed.rows[s].size() == 1)) ++nonzero;
    if (nonzero >= 2) rows.push_back(s);
  }
  for (size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[gen() % i]);

  const int pairs = count / 2;
  const bool odd = count % 2 != 0;
  if (pairs == 0 || pairs > static_cast<int>(rows.size()))
    fail(Errc::ParameterOutOfRange,
         "cannot seat " + std::to_string(count) + " parameters on this chain");

  std::vector<int> quota(pairs, 2);
  if (odd) {
    bool placed = false;
    for (int i = 0; i < pairs; ++i) {
      if (composed.rows[rows[i]].size() >= 3) {
        quota[i] = 3;
        placed = true;
        break;
      }
    }
    if (!placed) fail(Errc::ParameterOutOfRange, "no row can host a third parameter");
  }

  ThreatModel tm;
  tm.kind = ThreatKind::ST;
  tm.epsilon = epsilon;
  for (int i = 0; i < pairs; ++i) {
    const int s = rows[i];
    std::vector<int> targets;
    for (const Transition& t : composed.rows[s])
      if (t.p > 0.0) targets.push_back(t.to);
    for (size_t j = targets.size(); j > 1; --j) std::swap(targets[j - 1], targets[gen() % j]);
    for (int q = 0; q < quota[i] && q < static_cast<int>(targets.size()); ++q)
      tm.vulnerable_transitions.push_back({s, targets[q]});
  }
  std::sort(tm.vulnerable_transitions.begin(), tm.vulnerable_transitions.end());
  return tm;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"adversarial robustness analysis for discrete-time Markov chains"};
  app.require_subcommand(1);
  int exit_code = 0;

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check a model file against the format invariants");
  std::string validate_path;
  validate_cmd->add_option("model", validate_path, "model file")->required();
  validate_cmd->callback([&] {
    Model model = load_model(validate_path);
    if (std::holds_alternative<Dtmc>(model))
      out << "ok: dtmc with " << std::get<Dtmc>(model).n << " states\n";
    else
      out << "ok: mdp with " << std::get<Mdp>(model).n << " states\n";
  });

  // satprob
  auto* satprob_cmd = app.add_subcommand("satprob", "satisfaction probability of a property");
  std::string satprob_path, satprob_prop;
  satprob_cmd->add_option("model", satprob_path)->required();
  satprob_cmd->add_option("--prop", satprob_prop, "property text")->required();
  satprob_cmd->callback([&] {
    const Dtmc& model = require_dtmc(load_model(satprob_path), satprob_path);
    out << fixed12(sat_prob(model, parse_property(satprob_prop))) << "\n";
  });

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "worst-case attack synthesis");
  std::string attack_path, attack_threat, attack_prop, attack_out, attack_heatmap;
  RunOpts attack_run;
  attack_cmd->add_option("model", attack_path)->required();
  attack_cmd->add_option("--threat", attack_threat, "threat spec file")->required();
  attack_cmd->add_option("--prop", attack_prop)->required();
  attack_cmd->add_option("--out", attack_out, "write the attack result as JSON");
  attack_cmd->add_option("--emit-heatmap", attack_heatmap,
                         "write PREFIX_{original,perturbation,perturbed}.csv matrices");
  add_run_options(attack_cmd, attack_run);
  attack_cmd->callback([&] {
    const Dtmc& model = require_dtmc(load_model(attack_path), attack_path);
    ThreatModel tm = load_threat(attack_threat);
    PathFormula phi = parse_property(attack_prop);
    if (tm.epsilon > 0.0 && free_variables(model, tm).empty())
      err << "warning: EmptyThreat: the threat model exposes no free variable\n";
    AttackResult r = synthesize_attack(model, tm, phi, method_from_name(attack_run.method),
                                       attack_run.optimizer());
    out << "pr_original: " << fixed12(r.pr_original) << "\n";
    out << "pr_perturbed: " << fixed12(r.pr_perturbed) << "\n";
    out << "delta_star: " << fixed12(r.delta_star) << "\n";
    if (!attack_out.empty())
      write_text_file(attack_out, attack_to_json(r, tm, attack_prop).dump(2) + "\n");
    if (!attack_heatmap.empty()) emit_heatmaps(model, r.x_star, attack_heatmap);
  });

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "adversarial robustness verification");
  std::string verify_path, verify_threat, verify_prop, verify_out;
  double verify_delta = 0.0;
  RunOpts verify_run;
  verify_cmd->add_option("model", verify_path)->required();
  verify_cmd->add_option("--threat", verify_threat)->required();
  verify_cmd->add_option("--prop", verify_prop)->required();
  verify_cmd->add_option("--delta", verify_delta, "allowed probability drop")->required();
  verify_cmd->add_option("--out", verify_out, "write the witness chain when not robust");
  add_run_options(verify_cmd, verify_run);
  verify_cmd->callback([&] {
    const Dtmc& model = require_dtmc(load_model(verify_path), verify_path);
    VerificationResult v = verify_robustness(model, load_threat(verify_threat), parse_property(verify_prop),
                                             verify_delta, method_from_name(verify_run.method),
                                             verify_run.optimizer());
    out << "robust: " << (v.robust ? "true" : "false") << "\n";
    out << "delta_star: " << fixed12(v.attack.delta_star) << "\n";
    if (!v.robust) {
      if (!verify_out.empty()) store_model(*v.witness, verify_out);
      exit_code = 3;
    }
  });

  // max-delta
  auto* maxdelta_cmd = app.add_subcommand("max-delta", "maximal delta synthesis");
  std::string md_path, md_threat, md_prop;
  RunOpts md_run;
  maxdelta_cmd->add_option("model", md_path)->required();
  maxdelta_cmd->add_option("--threat", md_threat)->required();
  maxdelta_cmd->add_option("--prop", md_prop)->required();
  add_run_options(maxdelta_cmd, md_run);
  maxdelta_cmd->callback([&] {
    const Dtmc& model = require_dtmc(load_model(md_path), md_path);
    out << fixed12(max_delta(model, load_threat(md_threat), parse_property(md_prop),
                             method_from_name(md_run.method), md_run.optimizer()))
        << "\n";
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "delta* over a list of attack budgets");
  std::string sweep_path, sweep_threat, sweep_prop, sweep_out, sweep_eps;
  RunOpts sweep_run;
  sweep_cmd->add_option("model", sweep_path)->required();
  sweep_cmd->add_option("--threat", sweep_threat, "threat template; its epsilon is overridden per row")
      ->required();
  sweep_cmd->add_option("--prop", sweep_prop)->required();
  sweep_cmd->add_option("--epsilons", sweep_eps, "comma list or start:stop:step")->required();
  sweep_cmd->add_option("--out", sweep_out, "CSV output (stdout when omitted)");
  add_run_options(sweep_cmd, sweep_run);
  sweep_cmd->callback([&] {
    const Dtmc& model = require_dtmc(load_model(sweep_path), sweep_path);
    ThreatModel tm = load_threat(sweep_threat);
    PathFormula phi = parse_property(sweep_prop);
    std::ostringstream csv;
    csv << "epsilon,pr_original,pr_perturbed,delta_star,method,wall_seconds\n";
    for (double eps : parse_epsilons(sweep_eps)) {
      tm.epsilon = eps;
      AttackResult r = synthesize_attack(model, tm, phi, method_from_name(sweep_run.method),
                                         sweep_run.optimizer());
      csv << num(eps) << ',' << num(r.pr_original) << ',' << num(r.pr_perturbed) << ','
          << num(r.delta_star) << ',' << method_name(r.method) << ',' << seconds6(r.wall_seconds)
          << '\n';
    }
    write_or_print(sweep_out, csv.str(), out);
  });

  // component-sweep
  auto* comp_cmd = app.add_subcommand("component-sweep", "delta* per single vulnerable state");
  std::string comp_path, comp_prop, comp_out, comp_kind = "SPSS";
  double comp_eps = 0.1;
  RunOpts comp_run;
  comp_cmd->add_option("model", comp_path)->required();
  comp_cmd->add_option("--kind", comp_kind, "SS or SPSS")->check(CLI::IsMember({"SS", "SPSS"}));
  comp_cmd->add_option("--epsilon", comp_eps)->required();
  comp_cmd->add_option("--prop", comp_prop)->required();
  comp_cmd->add_option("--out", comp_out, "CSV output (stdout when omitted)");
  add_run_options(comp_cmd, comp_run);
  comp_cmd->callback([&] {
    const Dtmc& model = require_dtmc(load_model(comp_path), comp_path);
    auto deltas = component_sweep(model, threat_kind_from_name(comp_kind), comp_eps,
                                  parse_property(comp_prop), method_from_name(comp_run.method),
                                  comp_run.optimizer());
    std::ostringstream csv;
    csv << "state,delta_star\n";
    for (const ComponentDelta& d : deltas) {
      csv << d.state << ',' << (d.error.empty() ? num(d.delta_star) : "nan") << '\n';
      if (!d.error.empty()) err << "error: state " << d.state << ": " << d.error << "\n";
    }
    write_or_print(comp_out, csv.str(), out);
  });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "method comparison on seeded grid chains");
  std::string bench_grids = "5x5", bench_params = "5", bench_methods = "direct,symbolic", bench_out;
  double bench_eps = 0.1;
  RunOpts bench_run;
  bench_run.timeout = 900.0;
  bench_cmd->add_option("--grids", bench_grids, "comma list of RxC grids");
  bench_cmd->add_option("--params", bench_params, "comma list of parameter counts");
  bench_cmd->add_option("--methods", bench_methods, "comma list of methods");
  bench_cmd->add_option("--epsilon", bench_eps, "attack budget");
  bench_cmd->add_option("--out", bench_out, "CSV output (stdout when omitted)");
  add_run_options(bench_cmd, bench_run, false);
  bench_cmd->callback([&] {
    std::ostringstream csv;
    csv << "property,n_states,n_params,method,synth_seconds,opt_seconds,total_seconds,delta_star,timeout\n";
    std::stringstream grids(bench_grids);
    std::string grid;
    while (std::getline(grids, grid, ',')) {
      int rows = 0, cols = 0;
      if (std::sscanf(grid.c_str(), "%dx%d", &rows, &cols) != 2 || rows < 2 || cols < 2)
        fail(Errc::ParseError, "grid spec must be RxC with R,C >= 2, got '" + grid + "'");
      GridSpec spec;
      spec.rows = rows;
      spec.cols = cols;
      spec.hazards = {cols};
      spec.goals = {rows * cols - 1};
      spec.seed = bench_run.seed;
      auto [mdp, policy] = random_gridworld(spec);
      Dtmc composed = compose(mdp, policy);
      const std::string prop_text =
          "P=? [s!=" + std::to_string(cols) + " U s=" + std::to_string(rows * cols - 1) + "]";
      PathFormula phi = parse_property(prop_text);
      for (int count : parse_int_list(bench_params)) {
        ThreatModel tm = bench_threat(composed, count, bench_eps, bench_run.seed);
        std::stringstream methods(bench_methods);
        std::string method;
        while (std::getline(methods, method, ',')) {
          std::string status = "0";
          double synth = 0.0, total = 0.0;
          std::string delta;
          const auto started = std::chrono::steady_clock::now();
          try {
            AttackResult r =
                synthesize_attack(composed, tm, phi, method_from_name(method), bench_run.optimizer());
            synth = r.synth_seconds;
            total = r.wall_seconds;
            delta = num(r.delta_star);
          } catch (const Error& e) {
            total = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            if (e.code() == Errc::Timeout) status = "TO";
            else if (e.code() == Errc::DegreeOverflow) status = "OF";
            else throw;
            // Attribute the aborted time to the phase that was running.
            if (std::string(e.what()).find("synthesis") != std::string::npos) synth = total;
            err << "error: bench " << grid << "/" << count << "/" << method << ": " << e.what() << "\n";
          }
          csv << prop_text << ',' << composed.n << ',' << count << ',' << method << ','
              << seconds6(synth) << ',' << seconds6(total - synth) << ',' << seconds6(total) << ','
              << delta << ',' << status << '\n';
        }
      }
    }
    write_or_print(bench_out, csv.str(), out);
  });

  // idtmc
  auto* idtmc_cmd = app.add_subcommand("idtmc", "export the interval-matrix view of a threat model");
  std::string idtmc_path, idtmc_threat, idtmc_out;
  idtmc_cmd->add_option("model", idtmc_path)->required();
  idtmc_cmd->add_option("--threat", idtmc_threat)->required();
  idtmc_cmd->add_option("--out", idtmc_out)->required();
  idtmc_cmd->callback([&] {
    const Dtmc& model = require_dtmc(load_model(idtmc_path), idtmc_path);
    IdtmcExport exported = build_idtmc(model, load_threat(idtmc_threat));
    store_idtmc(exported, idtmc_out);
    if (!exported.note.empty()) out << "note: " << exported.note << "\n";
  });

  // casestudy
  auto* case_cmd = app.add_subcommand("casestudy", "emit one of the bundled model families");
  case_cmd->require_subcommand(1);

  auto* simple_cmd = case_cmd->add_subcommand("simple", "four-state retransmission protocol");
  std::string simple_out;
  simple_cmd->add_option("--out", simple_out)->required();
  simple_cmd->callback([&] { store_model(simple_protocol(), simple_out); });

  auto* zc_cmd = case_cmd->add_subcommand("zeroconf", "address-collision chain");
  std::string zc_out;
  int zc_n = 10;
  long zc_m = 0, zc_k = 65024;
  double zc_p = -1.0;
  zc_cmd->add_option("--n", zc_n, "wait ticks");
  zc_cmd->add_option("--m", zc_m, "hosts already on the network")->required();
  zc_cmd->add_option("--K", zc_k, "address-space size");
  zc_cmd->add_option("--p", zc_p, "per-tick forward probability")->required();
  zc_cmd->add_option("--out", zc_out)->required();
  zc_cmd->callback([&] { store_model(zeroconf(zc_n, zc_m, zc_k, zc_p), zc_out); });

  auto* grid3_cmd = case_cmd->add_subcommand("gridworld-3x3", "fixed 3x3 grid chain");
  grid3_cmd->alias("gridworld-fig4");  // compatibility name
  std::string grid3_out;
  grid3_cmd->add_option("--out", grid3_out)->required();
  grid3_cmd->callback([&] { store_model(gridworld_3x3(), grid3_out); });

  auto* gw_cmd = case_cmd->add_subcommand("gridworld", "seeded random grid, composed with its policy");
  std::string gw_out, gw_mdp_out, gw_hazards, gw_goals;
  int gw_rows = 5, gw_cols = 5;
  double gw_slip = 0.2;
  std::uint64_t gw_seed = default_seed();
  gw_cmd->add_option("--rows", gw_rows)->check(CLI::PositiveNumber);
  gw_cmd->add_option("--cols", gw_cols)->check(CLI::PositiveNumber);
  gw_cmd->add_option("--hazards", gw_hazards, "comma list of hazard cells");
  gw_cmd->add_option("--goals", gw_goals, "comma list of goal cells (default: top-right)");
  gw_cmd->add_option("--slip", gw_slip, "per-state slip mass");
  gw_cmd->add_option("--seed", gw_seed);
  gw_cmd->add_option("--out", gw_out, "composed DTMC output")->required();
  gw_cmd->add_option("--emit-mdp", gw_mdp_out, "also write the underlying MDP");
  gw_cmd->callback([&] {
    GridSpec spec;
    spec.rows = gw_rows;
    spec.cols = gw_cols;
    spec.slip = gw_slip;
    spec.seed = gw_seed;
    for (int cell : parse_int_list(gw_hazards)) spec.hazards.insert(cell);
    if (gw_goals.empty()) spec.goals = {gw_rows * gw_cols - 1};
    else for (int cell : parse_int_list(gw_goals)) spec.goals.insert(cell);
    auto [mdp, policy] = random_gridworld(spec);
    store_model(compose(mdp, policy), gw_out);
    if (!gw_mdp_out.empty()) store_model(mdp, gw_mdp_out);
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

}  // namespace advmc
