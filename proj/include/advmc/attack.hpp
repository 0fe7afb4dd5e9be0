#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advmc/model.hpp"
#include "advmc/parametric.hpp"
#include "advmc/property.hpp"
#include "advmc/threat.hpp"

namespace advmc {

enum class Method { Direct, Symbolic, BruteForce };

const char* method_name(Method method);
Method method_from_name(const std::string& name);

struct OptimizerOptions {
  int max_iterations = 200;           // per start
  double objective_tolerance = 1e-8;  // stop when the objective moves less
  double step_tolerance = 1e-10;      // smallest backtracking step
  int starts = 5;                     // zero perturbation + seeded random points
  double fd_step = 1e-6;              // central finite differences
  std::uint64_t seed = 42;
  std::size_t monomial_cap = 2'000'000;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct StartTrace {
  int start = 0;
  int iterations = 0;
  bool converged = false;            // stopped before hitting max_iterations
  std::vector<double> objectives;    // initial value plus one entry per accepted step
};

struct AttackResult {
  PerturbationMatrix x_star;
  double pr_original = 0.0;
  double pr_perturbed = 0.0;
  double delta_star = 0.0;
  Method method = Method::Direct;
  int starts = 0;
  long iterations = 0;               // accepted steps across all starts
  double wall_seconds = 0.0;
  double synth_seconds = 0.0;        // symbolic pre-computation share of wall_seconds
  std::vector<StartTrace> traces;
};

/// Minimizes Pr(init |= phi) over the threat model's feasible polytope with
/// multi-start projected gradient descent. The zero perturbation is always
/// start 0, so the result never reports worse than the original chain.
AttackResult synthesize_attack(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi,
                               Method method, const OptimizerOptions& opts = {});

/// Largest robustness gap delta*, clamped to [0,1].
double max_delta(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi, Method method,
                 const OptimizerOptions& opts = {});

struct VerificationResult {
  bool robust = true;
  std::optional<Dtmc> witness;  // perturbed chain when not robust
  AttackResult attack;
};

VerificationResult verify_robustness(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi,
                                     double delta, Method method, const OptimizerOptions& opts = {});

/// Exhaustive grid oracle over each touched row's feasible slice; one
/// variable per row is dependent through the row sum. Guarded to at most 8
/// free variables.
AttackResult brute_force_min(const Dtmc& model, const ThreatModel& tm, const PathFormula& phi,
                             int resolution = 20);

struct ComponentDelta {
  int state = 0;
  double delta_star = 0.0;
  std::string error;  // empty on success
};

/// Per-state attack impact: max_delta with the single-state vulnerable set
/// {s} for every state s. Failures are recorded and the sweep continues.
std::vector<ComponentDelta> component_sweep(const Dtmc& model, ThreatKind kind, double epsilon,
                                            const PathFormula& phi, Method method,
                                            const OptimizerOptions& opts = {});

}  // namespace advmc
