#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advmc/model.hpp"

namespace advmc {

enum class ThreatKind { ST, SPST, SS, SPSS };

const char* threat_kind_name(ThreatKind kind);
ThreatKind threat_kind_from_name(const std::string& name);

/// SPST and SPSS adversaries may not add transitions the original chain
/// does not have.
bool structure_preserving(ThreatKind kind);

/// SS and SPSS select whole states; ST and SPST select individual transitions.
bool state_selected(ThreatKind kind);

struct ThreatModel {
  ThreatKind kind = ThreatKind::SPSS;
  double epsilon = 0.0;
  std::vector<int> vulnerable_states;                       // SS / SPSS
  std::vector<std::pair<int, int>> vulnerable_transitions;  // ST / SPST
};

void validate_threat(const Dtmc& model, const ThreatModel& tm);

/// One optimizable transition probability with its clipped box bounds.
/// Bounds are absolute probabilities, not deltas.
struct FreeVariable {
  int from = 0;
  int to = 0;
  double base = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  bool frozen() const { return !(upper > lower); }
  std::string name() const;
};

/// Expands the threat model into per-transition variables, sorted by (from,
/// to). Structure-preserving kinds drop zero-base pairs; a row left with a
/// single variable is frozen to its base since the row sum pins it.
std::vector<FreeVariable> free_variables(const Dtmc& model, const ThreatModel& tm);

/// True iff x stays inside the perturbation set: support within the
/// vulnerable set, per-entry budget and [0,1] box, zero row-sum drift,
/// structure preservation where required.
bool feasible(const Dtmc& model, const ThreatModel& tm, const PerturbationMatrix& x);

/// Uniform sample in the per-variable boxes, then per-row projection back
/// onto the row-sum slice. Deterministic per (inputs, seed).
PerturbationMatrix random_feasible_point(const Dtmc& model, const ThreatModel& tm, std::uint64_t seed);

/// Interval-matrix view of the threat model: pointwise bounds P-min(eps,P)
/// and P+min(eps,1-P) on vulnerable entries, equality elsewhere.
struct IdtmcExport {
  std::vector<std::vector<double>> lower;
  std::vector<std::vector<double>> upper;
  std::string note;  // non-empty for structure-preserving kinds
};

IdtmcExport build_idtmc(const Dtmc& model, const ThreatModel& tm);

/// Projects v onto {x : lo <= x <= hi, sum(x) = target} with Dykstra
/// alternating projections (at most 200 sweeps, tolerance 1e-10). The result
/// satisfies the box exactly and the sum within 1e-9.
void project_row(std::span<double> v, std::span<const double> lo, std::span<const double> hi,
                 double target);

}  // namespace advmc
