#pragma once

#include <optional>
#include <string>
#include <vector>

#include "advmc/model.hpp"

namespace advmc {

/// Boolean expression over atoms, state-index comparisons and constants.
struct StateExpr {
  enum class Kind { True, False, Atom, StateEq, StateNe, Not, And, Or };

  Kind kind = Kind::True;
  std::string atom;             // Atom
  int state = -1;               // StateEq / StateNe
  std::vector<StateExpr> kids;  // Not: 1, And/Or: 2

  static StateExpr constant(bool value);
  static StateExpr atom_ref(std::string name);
  static StateExpr state_eq(int index);
  static StateExpr state_ne(int index);
  static StateExpr negate(StateExpr inner);
  static StateExpr conj(StateExpr a, StateExpr b);
  static StateExpr disj(StateExpr a, StateExpr b);
};

/// Path formula after desugaring: F/G collapse onto Until, with G marked as
/// the complement of its dual F.
struct PathFormula {
  enum class Kind { Next, Until };

  Kind kind = Kind::Until;
  StateExpr lhs;                  // Until only
  StateExpr rhs;                  // Next operand / Until rhs
  std::optional<long> bound;      // Until only; absent = unbounded
  bool complement = false;        // report 1 - Pr(inner)
};

/// Parses "P=? [ ... ]" over the next/until fragment. Nested temporal
/// operators and boolean combinations of path formulae are syntax errors.
PathFormula parse_property(const std::string& text);

/// Satisfaction vector of a state expression, one flag per state.
std::vector<char> eval_state_expr(const Dtmc& model, const StateExpr& expr);

/// Same, against a bare labeling (used by the parametric engine).
std::vector<char> eval_state_expr(int n, const std::vector<std::string>& atoms,
                                  const std::vector<std::vector<int>>& labels,
                                  const StateExpr& expr);

/// Pr(s |= phi) for every state s. Accepts sub-stochastic rows: missing row
/// mass behaves as absorption into a non-satisfying sink.
std::vector<double> sat_prob_all_states(const Dtmc& model, const PathFormula& phi);

/// Pr(init |= phi).
double sat_prob(const Dtmc& model, const PathFormula& phi);

}  // namespace advmc
