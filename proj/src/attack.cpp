#include "advmc/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

namespace advmc {

namespace {

constexpr double kVerifySlack = 1e-9;

double now_seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

void check_deadline(const OptimizerOptions& opts) {
  if (opts.deadline && std::chrono::steady_clock::now() > *opts.deadline)
    fail(Errc::Timeout, "optimization exceeded its deadline");
}

/// Objective callback pair used by the minimizer.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(std::span<const double> x) = 0;
  virtual void gradient(std::span<const double> x, std::span<double> out) = 0;
};

class DirectObjective final : public Objective {
 public:
  DirectObjective(const Pdtmc& pd, const PathFormula& phi, double fd_step)
      : pd_(pd), phi_(phi), h_(fd_step) {}

  double value(std::span<const double> x) override {
    return sat_prob(pd_.instantiate_at(x), phi_);
  }

  void gradient(std::span<const double> x, std::span<double> out) override {
    std::vector<double> probe(x.begin(), x.end());
    for (size_t i = 0; i < probe.size(); ++i) {
      const double saved = probe[i];
      probe[i] = saved + h_;
      double up = value(probe);
      probe[i] = saved - h_;
      double down = value(probe);
      probe[i] = saved;
      out[i] = (up - down) / (2.0 * h_);
    }
  }

 private:
  const Pdtmc& pd_;
  const PathFormula& phi_;
  double h_;
};

class SymbolicObjective final : public Objective {
 public:
  SymbolicObjective(const Pdtmc& pd, const PathFormula& phi, const SynthesisOptions& synth) {
    if (phi.kind == PathFormula::Kind::Until && !phi.bound) {
      rf_ = symbolic_unbounded_until(pd, phi, synth);
      const int nvars = static_cast<int>(pd.vars->size());
      for (int i = 0; i < nvars; ++i) {
        num_grad_.push_back(rf_->num().derivative(i));
        den_grad_.push_back(rf_->den().derivative(i));
      }
    } else {
      poly_ = symbolic_bounded_until(pd, phi, synth);
      for (int i = 0; i < static_cast<int>(pd.vars->size()); ++i)
        poly_grad_.push_back(poly_->derivative(i));
    }
  }

  double value(std::span<const double> x) override {
    if (poly_) return poly_->evaluate(x);
    try {
      return rf_->evaluate(x);
    } catch (const Error& e) {
      if (e.code() == Errc::DenominatorNearZero) return std::numeric_limits<double>::infinity();
      throw;
    }
  }

  void gradient(std::span<const double> x, std::span<double> out) override {
    if (poly_) {
      for (size_t i = 0; i < out.size(); ++i) out[i] = poly_grad_[i].evaluate(x);
      return;
    }
    const double n = rf_->num().evaluate(x);
    const double d = rf_->den().evaluate(x);
    for (size_t i = 0; i < out.size(); ++i) {
      const double np = num_grad_[i].evaluate(x);
      const double dp = den_grad_[i].evaluate(x);
      out[i] = (np * d - n * dp) / (d * d);
    }
  }

 private:
  std::optional<Polynomial> poly_;
  std::vector<Polynomial> poly_grad_;
  std::optional<RationalFunction> rf_;
  std::vector<Polynomial> num_grad_;
  std::vector<Polynomial> den_grad_;
};

/// Feasible polytope: per-variable boxes intersected with one row-sum slice
/// per touched row.
struct FeasibleSet {
  std::vector<double> lower, upper;
  std::vector<std::vector<size_t>> row_vars;
  std::vector<double> row_target;

  explicit FeasibleSet(const Pdtmc& pd) {
    std::map<int, size_t> row_of;
    for (size_t i = 0; i < pd.variables.size(); ++i) {
      const FreeVariable& v = pd.variables[i];
      lower.push_back(v.lower);
      upper.push_back(v.upper);
      auto [it, inserted] = row_of.try_emplace(v.from, row_vars.size());
      if (inserted) {
        row_vars.emplace_back();
        row_target.push_back(0.0);
      }
      row_vars[it->second].push_back(i);
      row_target[it->second] += v.base;
    }
  }

  void project(std::vector<double>& x) const {
    std::vector<double> v, lo, hi;
    for (size_t r = 0; r < row_vars.size(); ++r) {
      const auto& idx = row_vars[r];
      v.resize(idx.size());
      lo.resize(idx.size());
      hi.resize(idx.size());
      for (size_t j = 0; j < idx.size(); ++j) {
        v[j] = x[idx[j]];
        lo[j] = lower[idx[j]];
        hi[j] = upper[idx[j]];
      }
      project_row(v, lo, hi, row_target[r]);
      for (size_t j = 0; j < idx.size(); ++j) x[idx[j]] = v[j];
    }
  }
};

struct StartOutcome {
  std::vector<double> x;
  double objective = 0.0;
  StartTrace trace;
};

StartOutcome minimize_from(Objective& obj, const FeasibleSet& feas, std::vector<double> x,
                           int start_index, const OptimizerOptions& opts) {
  constexpr double kArmijo = 1e-4;
  StartOutcome out;
  out.trace.start = start_index;
  feas.project(x);
  double f = obj.value(x);
  out.trace.objectives.push_back(f);

  std::vector<double> grad(x.size()), candidate(x.size());
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    check_deadline(opts);
    obj.gradient(x, grad);
    double step = 1.0;
    bool accepted = false;
    double fc = f;
    while (step >= opts.step_tolerance) {
      for (size_t i = 0; i < x.size(); ++i) candidate[i] = x[i] - step * grad[i];
      feas.project(candidate);
      fc = obj.value(candidate);
      double along = 0.0;
      for (size_t i = 0; i < x.size(); ++i) along += grad[i] * (candidate[i] - x[i]);
      if (std::isfinite(fc) && fc <= f + kArmijo * along && along < 0.0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.trace.converged = true;  // no descent step left: stationary
      break;
    }
    x = candidate;
    out.trace.iterations++;
    out.trace.objectives.push_back(fc);
    if (f - fc < opts.objective_tolerance) {
      f = fc;
      out.trace.converged = true;
      break;
    }
    f = fc;
  }
  out.x = std::move(x);
  out.objective = f;
  return out;
}

AttackResult zero_perturbation_result(const Dtmc& model, const PathFormula& phi, Method method) {
  AttackResult r;
  r.method = method;
  r.pr_original = sat_prob(model, phi);
  r.pr_perturbed = r.pr_original;
  r.delta_star = 0.0;
  return r;
}

PerturbationMatrix deltas_from_point(const Pdtmc& pd, const std::vector<double>& x) {
  // Rows whose every delta is below noise level are dropped whole, so row
  // sums of the kept deltas still cancel.
  std::map<int, std::vector<size_t>> rows;
  for (size_t i = 0; i < pd.variables.size(); ++i) rows[pd.variables[i].from].push_back(i);
  PerturbationMatrix out;
  for (const auto& [row, idx] : rows) {
    double largest = 0.0;
    for (size_t i : idx) largest = std::max(largest, std::fabs(x[i] - pd.variables[i].base));
    if (largest <= 1e-12) continue;
    for (size_t i : idx) {
      double delta = x[i] - pd.variables[i].base;
      if (delta != 0.0) out.entries[{pd.variables[i].from, pd.variables[i].to}] = delta;
    }
  }
  return out;
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::Direct: return "direct";
    case Method::Symbolic: return "symbolic";
    case Method::BruteForce: return "brute-force";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "direct") return Method::Direct;
  if (name == "symbolic") return Method::Symbolic;
  if (name == "brute-force") return Method::BruteForce;
  fail(Errc::ParseError, "unknown method '" + name + "'");
}

AttackResult synthesize_attack(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi,
                               Method method, const OptimizerOptions& opts) {
  const auto started = std::chrono::steady_clock::now();
  validate_dtmc(model);
  if (method == Method::BruteForce) fail(Errc::ParseError, "use brute_force_min for the grid oracle");

  std::vector<FreeVariable> vars = free_variables(model, tm);
  const bool any_movable =
      std::any_of(vars.begin(), vars.end(), [](const FreeVariable& v) { return !v.frozen(); });
  if (!any_movable) {
    AttackResult r = zero_perturbation_result(model, phi, method);
    r.wall_seconds = now_seconds(started);
    return r;
  }

  Pdtmc pd = build_pdtmc(model, tm);
  const double pr_original = sat_prob(model, phi);

  SynthesisOptions synth;
  synth.monomial_cap = opts.monomial_cap;
  synth.deadline = opts.deadline;

  std::unique_ptr<Objective> objective;
  double synth_seconds = 0.0;
  if (method == Method::Direct) {
    objective = std::make_unique<DirectObjective>(pd, phi, opts.fd_step);
  } else {
    const auto synth_started = std::chrono::steady_clock::now();
    objective = std::make_unique<SymbolicObjective>(pd, phi, synth);
    synth_seconds = now_seconds(synth_started);
  }

  FeasibleSet feas(pd);
  const int starts = std::max(1, opts.starts);

  AttackResult result;
  result.method = method;
  result.pr_original = pr_original;
  result.starts = starts;
  result.synth_seconds = synth_seconds;

  std::optional<StartOutcome> best;
  for (int s = 0; s < starts; ++s) {
    std::vector<double> x0 = pd.base_point();
    if (s > 0) {
      PerturbationMatrix random = random_feasible_point(model, tm, opts.seed + static_cast<std::uint64_t>(s));
      for (size_t i = 0; i < pd.variables.size(); ++i)
        x0[i] = pd.variables[i].base + random.delta(pd.variables[i].from, pd.variables[i].to);
    }
    StartOutcome outcome = minimize_from(*objective, feas, std::move(x0), s, opts);
    result.iterations += outcome.trace.iterations;
    result.traces.push_back(outcome.trace);
    if (!best || outcome.objective < best->objective) best = std::move(outcome);
  }

  feas.project(best->x);
  result.x_star = deltas_from_point(pd, best->x);
  result.pr_perturbed = sat_prob(apply_perturbation(model, result.x_star), phi);
  if (result.pr_perturbed > pr_original) {
    // Noise-level regression against the zero perturbation: report the
    // original chain instead.
    result.x_star = PerturbationMatrix{};
    result.pr_perturbed = pr_original;
  }
  result.delta_star = pr_original - result.pr_perturbed;
  result.wall_seconds = now_seconds(started);
  return result;
}

double max_delta(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi, Method method,
                 const OptimizerOptions& opts) {
  double delta = synthesize_attack(model, tm, phi, method, opts).delta_star;
  return std::clamp(delta, 0.0, 1.0);
}

VerificationResult verify_robustness(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi,
                                     double delta, Method method, const OptimizerOptions& opts) {
  if (!(delta >= 0.0 && delta <= 1.0))
    fail(Errc::ParameterOutOfRange, "delta must lie in [0,1], got " + std::to_string(delta));
  VerificationResult out;
  out.attack = synthesize_attack(model, tm, phi, method, opts);
  out.robust = out.attack.pr_perturbed >= out.attack.pr_original - delta - kVerifySlack;
  if (!out.robust) out.witness = apply_perturbation(model, out.attack.x_star);
  return out;
}

AttackResult brute_force_min(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi,
                             int resolution) {
  const auto started = std::chrono::steady_clock::now();
  validate_dtmc(model);
  if (resolution < 1) fail(Errc::ParameterOutOfRange, "resolution must be at least 1");

  std::vector<FreeVariable> vars = free_variables(model, tm);
  if (vars.size() > 8)
    fail(Errc::TooManyVariables,
         std::to_string(vars.size()) + " free variables exceed the brute-force limit of 8");
  const bool any_movable =
      std::any_of(vars.begin(), vars.end(), [](const FreeVariable& v) { return !v.frozen(); });
  if (!any_movable) {
    AttackResult r = zero_perturbation_result(model, phi, Method::BruteForce);
    r.wall_seconds = now_seconds(started);
    return r;
  }

  Pdtmc pd = build_pdtmc(model, tm);
  const double pr_original = sat_prob(model, phi);
  const double step = tm.epsilon / static_cast<double>(resolution);

  // Per-row grids: every variable but the last runs over its box, the last
  // follows from the row sum and is kept only when its box allows it.
  std::map<int, std::vector<size_t>> rows;
  for (size_t i = 0; i < pd.variables.size(); ++i) rows[pd.variables[i].from].push_back(i);

  std::vector<std::vector<std::vector<double>>> row_grids;  // row -> choice -> per-var values
  std::vector<std::vector<size_t>> row_var_indices;
  for (const auto& [row, idx] : rows) {
    std::vector<std::vector<double>> grid;
    const size_t m = idx.size();
    double target = 0.0;
    for (size_t i : idx) target += pd.variables[i].base;
    std::vector<double> choice(m, 0.0);
    std::vector<std::vector<double>> axis(m - 1);
    for (size_t j = 0; j + 1 < m; ++j) {
      const FreeVariable& v = pd.variables[idx[j]];
      if (v.upper - v.lower <= 0.0 || step <= 0.0) {
        axis[j] = {v.base};
        continue;
      }
      for (double value = v.lower; value <= v.upper + 1e-12; value += step)
        axis[j].push_back(std::min(value, v.upper));
    }
    const FreeVariable& dep = pd.variables[idx[m - 1]];
    std::vector<size_t> cursor(m - 1, 0);
    while (true) {
      double sum = 0.0;
      for (size_t j = 0; j + 1 < m; ++j) {
        choice[j] = axis[j][cursor[j]];
        sum += choice[j];
      }
      double value = target - sum;
      if (value >= dep.lower - 1e-9 && value <= dep.upper + 1e-9) {
        choice[m - 1] = std::clamp(value, dep.lower, dep.upper);
        grid.push_back(choice);
      }
      size_t j = 0;
      for (; j + 1 < m; ++j) {
        if (++cursor[j] < axis[j].size()) break;
        cursor[j] = 0;
      }
      if (j + 1 >= m) break;
    }
    if (grid.empty())
      fail(Errc::ProjectionFailed, "row " + std::to_string(row) + " has an empty feasible grid");
    row_grids.push_back(std::move(grid));
    row_var_indices.push_back(idx);
  }

  std::vector<double> point = pd.base_point();
  std::vector<double> best_point = point;
  double best_value = std::numeric_limits<double>::infinity();
  long evaluations = 0;

  std::vector<size_t> cursor(row_grids.size(), 0);
  while (true) {
    for (size_t r = 0; r < row_grids.size(); ++r) {
      const auto& choice = row_grids[r][cursor[r]];
      for (size_t j = 0; j < row_var_indices[r].size(); ++j) point[row_var_indices[r][j]] = choice[j];
    }
    double value = sat_prob(pd.instantiate_at(point), phi);
    ++evaluations;
    if (value < best_value) {
      best_value = value;
      best_point = point;
    }
    size_t r = 0;
    for (; r < row_grids.size(); ++r) {
      if (++cursor[r] < row_grids[r].size()) break;
      cursor[r] = 0;
    }
    if (r >= row_grids.size()) break;
  }

  AttackResult result;
  result.method = Method::BruteForce;
  result.pr_original = pr_original;
  result.starts = 1;
  result.iterations = evaluations;
  result.x_star = deltas_from_point(pd, best_point);
  result.pr_perturbed = best_value;
  if (result.pr_perturbed > pr_original) {
    result.x_star = PerturbationMatrix{};
    result.pr_perturbed = pr_original;
  }
  result.delta_star = pr_original - result.pr_perturbed;
  result.wall_seconds = now_seconds(started);
  return result;
}

std::vector<ComponentDelta> component_sweep(const Dtmc& model, ThreatKind kind, double epsilon,
                                            const PathFormula& phi, Method method,
                                            const OptimizerOptions& opts) {
  if (!state_selected(kind))
    fail(Errc::ParameterOutOfRange, "component sweep requires a state-selected threat kind");
  std::vector<ComponentDelta> out;
  out.reserve(model.n);
  for (int s = 0; s < model.n; ++s) {
    ComponentDelta entry;
    entry.state = s;
    ThreatModel tm;
    tm.kind = kind;
    tm.epsilon = epsilon;
    tm.vulnerable_states = {s};
    try {
      entry.delta_star = max_delta(model, tm, phi, method, opts);
    } catch (const Error& e) {
      entry.error = e.what();
      entry.delta_star = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace advmc
