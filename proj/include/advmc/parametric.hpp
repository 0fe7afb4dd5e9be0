#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advmc/model.hpp"
#include "advmc/polynomial.hpp"
#include "advmc/property.hpp"
#include "advmc/threat.hpp"

namespace advmc {

/// A transition-matrix cell: either a rational constant or one named
/// variable v{from}_{to}.
struct PdtmcCell {
  double value = 0.0;
  int var = -1;

  bool is_var() const { return var >= 0; }
};

/// Parametric chain over the threat model's non-frozen free variables.
struct Pdtmc {
  int n = 0;
  int init = 0;
  std::vector<std::vector<std::pair<int, PdtmcCell>>> rows;  // sparse (to, cell), sorted by to
  VarList vars;
  std::vector<FreeVariable> variables;  // boxes, aligned with vars
  std::vector<std::string> atoms;
  std::vector<std::vector<int>> labels;

  /// Explicit chain at the given variable values. Performs no validation, so
  /// finite-difference probes off the row-sum slice stay usable.
  Dtmc instantiate_at(std::span<const double> point) const;

  std::vector<double> base_point() const;
};

/// Pivot order for state elimination. VariablesLast eliminates rows without
/// parametric cells first, which keeps intermediate polynomials small; the
/// index orders exist to exercise order independence.
enum class EliminationOrder { VariablesLast, IndexAscending, IndexDescending };

struct SynthesisOptions {
  std::size_t monomial_cap = 2'000'000;
  EliminationOrder order = EliminationOrder::VariablesLast;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// One fresh variable per non-frozen free transition, constants elsewhere.
/// Throws EmptyThreat when the threat model exposes no free variable at all.
Pdtmc build_pdtmc(const Dtmc& model, const ThreatModel& tm);

/// Polynomial equal to Pr(init |= phi) at every instantiation; bounded until
/// and next only. Value iteration with polynomial coefficients, degree <= k.
Polynomial symbolic_bounded_until(const Pdtmc& pd, const PathFormula& phi,
                                  const SynthesisOptions& opts = {});

/// Rational function for unbounded until via state elimination after
/// parametric prob-0/prob-1 classification (variable cells are treated as
/// possibly positive unless their box is [0,0]).
RationalFunction symbolic_unbounded_until(const Pdtmc& pd, const PathFormula& phi,
                                          const SynthesisOptions& opts = {});

double instantiate(const Polynomial& f, const std::map<std::string, double>& assignment);
double instantiate(const RationalFunction& f, const std::map<std::string, double>& assignment);

Polynomial differentiate(const Polynomial& f, const std::string& variable);
RationalFunction differentiate(const RationalFunction& f, const std::string& variable);

}  // namespace advmc
