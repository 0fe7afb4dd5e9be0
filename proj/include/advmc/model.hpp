#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advmc/errors.hpp"

namespace advmc {

/// Row-sum and feasibility checks accept this much floating-point drift.
inline constexpr double kRowSumTol = 1e-9;

struct Transition {
  int to = 0;
  double p = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Discrete-time Markov chain with dense state indices 0..n-1.
/// Rows are sparse (target, probability) lists kept sorted by target.
struct Dtmc {
  int n = 0;
  int init = 0;
  std::vector<std::vector<Transition>> rows;
  std::vector<std::string> atoms;
  std::vector<std::vector<int>> labels;  // per state, sorted atom indices

  double prob(int from, int to) const;
  bool has_atom(int state, int atom_index) const;
  std::optional<int> atom_index(const std::string& name) const;

  friend bool operator==(const Dtmc&, const Dtmc&) = default;
};

/// MDP rows are per-state lists of (action index, distribution), sorted by
/// action index. Only enabled actions are stored.
struct Mdp {
  int n = 0;
  int init = 0;
  std::vector<std::string> actions;
  std::vector<std::vector<std::pair<int, std::vector<Transition>>>> act_rows;
  std::vector<std::string> atoms;
  std::vector<std::vector<int>> labels;

  friend bool operator==(const Mdp&, const Mdp&) = default;
};

/// Memoryless deterministic policy: one action name per state.
struct Policy {
  std::vector<std::string> choice;

  friend bool operator==(const Policy&, const Policy&) = default;
};

/// Sparse additive perturbation of a transition matrix. Ordered map keeps
/// iteration (and hence serialization) deterministic.
struct PerturbationMatrix {
  std::map<std::pair<int, int>, double> entries;

  bool empty() const { return entries.empty(); }
  double delta(int from, int to) const;
  double max_abs() const;
};

/// Throws unless every Dtmc invariant holds: rows sum to 1 within kRowSumTol,
/// entries in [0,1], init in range, labels reference declared atoms.
void validate_dtmc(const Dtmc& model);

void validate_mdp(const Mdp& model);

/// DTMC induced by a policy: P(s,s') = T(s, sigma(s), s').
Dtmc compose(const Mdp& mdp, const Policy& policy);

/// Returns the chain with matrix P+X. Entries within 1e-12 of the [0,1]
/// boundary are snapped onto it so the result validates cleanly.
Dtmc apply_perturbation(const Dtmc& model, const PerturbationMatrix& x);

PerturbationMatrix negate(const PerturbationMatrix& x);

}  // namespace advmc
