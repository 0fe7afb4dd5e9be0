#include "advmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace advmc {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

double Dtmc::prob(int from, int to) const {
  for (const Transition& t : rows[from]) {
    if (t.to == to) return t.p;
  }
  return 0.0;
}

bool Dtmc::has_atom(int state, int atom) const {
  const auto& l = labels[state];
  return std::binary_search(l.begin(), l.end(), atom);
}

std::optional<int> Dtmc::atom_index(const std::string& name) const {
  for (int i = 0; i < static_cast<int>(atoms.size()); ++i) {
    if (atoms[i] == name) return i;
  }
  return std::nullopt;
}

double PerturbationMatrix::delta(int from, int to) const {
  auto it = entries.find({from, to});
  return it == entries.end() ? 0.0 : it->second;
}

double PerturbationMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& [key, d] : entries) m = std::max(m, std::fabs(d));
  return m;
}

void validate_dtmc(const Dtmc& model) {
  if (model.n <= 0) fail(Errc::BadInit, "state count must be positive, got " + std::to_string(model.n));
  if (model.init < 0 || model.init >= model.n)
    fail(Errc::BadInit, "initial state " + std::to_string(model.init) + " outside 0.." + std::to_string(model.n - 1));
  if (static_cast<int>(model.rows.size()) != model.n)
    fail(Errc::RowSumViolation, "expected " + std::to_string(model.n) + " rows, got " + std::to_string(model.rows.size()));
  for (int s = 0; s < model.n; ++s) {
    double sum = 0.0;
    for (const Transition& t : model.rows[s]) {
      if (t.to < 0 || t.to >= model.n)
        fail(Errc::EntryOutOfRange, "transition " + std::to_string(s) + "->" + std::to_string(t.to) + " leaves the state space");
      if (!(t.p >= 0.0 && t.p <= 1.0) || std::isnan(t.p))
        fail(Errc::EntryOutOfRange,
             "P(" + std::to_string(s) + "," + std::to_string(t.to) + ") = " + fmt(t.p) + " outside [0,1]");
      sum += t.p;
    }
    if (std::fabs(sum - 1.0) > kRowSumTol)
      fail(Errc::RowSumViolation, "row " + std::to_string(s) + " sums to " + fmt(sum));
  }
  if (static_cast<int>(model.labels.size()) != model.n)
    fail(Errc::BadLabel, "expected " + std::to_string(model.n) + " label sets, got " + std::to_string(model.labels.size()));
  for (int s = 0; s < model.n; ++s) {
    for (int a : model.labels[s]) {
      if (a < 0 || a >= static_cast<int>(model.atoms.size()))
        fail(Errc::BadLabel, "state " + std::to_string(s) + " references undeclared atom index " + std::to_string(a));
    }
  }
}

void validate_mdp(const Mdp& model) {
  if (model.n <= 0) fail(Errc::BadInit, "state count must be positive, got " + std::to_string(model.n));
  if (model.init < 0 || model.init >= model.n)
    fail(Errc::BadInit, "initial state " + std::to_string(model.init) + " outside 0.." + std::to_string(model.n - 1));
  if (static_cast<int>(model.act_rows.size()) != model.n)
    fail(Errc::RowSumViolation, "expected " + std::to_string(model.n) + " action rows");
  for (int s = 0; s < model.n; ++s) {
    if (model.act_rows[s].empty())
      fail(Errc::PolicyActionDisabled, "state " + std::to_string(s) + " has no enabled action");
    for (const auto& [a, dist] : model.act_rows[s]) {
      if (a < 0 || a >= static_cast<int>(model.actions.size()))
        fail(Errc::PolicyActionDisabled, "state " + std::to_string(s) + " uses undeclared action index " + std::to_string(a));
      double sum = 0.0;
      for (const Transition& t : dist) {
        if (t.to < 0 || t.to >= model.n)
          fail(Errc::EntryOutOfRange, "transition " + std::to_string(s) + "->" + std::to_string(t.to) + " leaves the state space");
        if (!(t.p >= 0.0 && t.p <= 1.0) || std::isnan(t.p))
          fail(Errc::EntryOutOfRange, "T(" + std::to_string(s) + "," + model.actions[a] + "," + std::to_string(t.to) +
                                          ") = " + fmt(t.p) + " outside [0,1]");
        sum += t.p;
      }
      if (std::fabs(sum - 1.0) > kRowSumTol)
        fail(Errc::RowSumViolation, "distribution (" + std::to_string(s) + "," + model.actions[a] + ") sums to " + fmt(sum));
    }
  }
  for (int s = 0; s < model.n; ++s) {
    for (int a : model.labels[s]) {
      if (a < 0 || a >= static_cast<int>(model.atoms.size()))
        fail(Errc::BadLabel, "state " + std::to_string(s) + " references undeclared atom index " + std::to_string(a));
    }
  }
}

Dtmc compose(const Mdp& mdp, const Policy& policy) {
  if (static_cast<int>(policy.choice.size()) != mdp.n)
    fail(Errc::PolicyActionDisabled, "policy defines " + std::to_string(policy.choice.size()) + " of " +
                                         std::to_string(mdp.n) + " states");
  Dtmc out;
  out.n = mdp.n;
  out.init = mdp.init;
  out.atoms = mdp.atoms;
  out.labels = mdp.labels;
  out.rows.resize(mdp.n);
  for (int s = 0; s < mdp.n; ++s) {
    const std::string& name = policy.choice[s];
    int action = -1;
    for (int i = 0; i < static_cast<int>(mdp.actions.size()); ++i) {
      if (mdp.actions[i] == name) { action = i; break; }
    }
    const std::vector<Transition>* dist = nullptr;
    if (action >= 0) {
      for (const auto& [a, d] : mdp.act_rows[s]) {
        if (a == action) { dist = &d; break; }
      }
    }
    if (dist == nullptr)
      fail(Errc::PolicyActionDisabled, "action '" + name + "' is not enabled at state " + std::to_string(s));
    out.rows[s] = *dist;
  }
  return out;
}

Dtmc apply_perturbation(const Dtmc& model, const PerturbationMatrix& x) {
  Dtmc out = model;
  for (const auto& [key, delta] : x.entries) {
    const auto [from, to] = key;
    if (from < 0 || from >= model.n || to < 0 || to >= model.n)
      fail(Errc::InfeasiblePerturbation,
           "delta on (" + std::to_string(from) + "," + std::to_string(to) + ") leaves the state space");
    auto& row = out.rows[from];
    auto it = std::find_if(row.begin(), row.end(), [&](const Transition& t) { return t.to == to; });
    double value = (it == row.end() ? 0.0 : it->p) + delta;
    // Snap sub-ulp overshoot back onto the boundary; anything larger is a
    // genuinely infeasible perturbation.
    if (value < 0.0 && value >= -1e-12) value = 0.0;
    if (value > 1.0 && value <= 1.0 + 1e-12) value = 1.0;
    if (value < 0.0 || value > 1.0)
      fail(Errc::InfeasiblePerturbation,
           "P(" + std::to_string(from) + "," + std::to_string(to) + ") + delta = " + fmt(value) + " outside [0,1]");
    if (it == row.end()) {
      if (value != 0.0) {
        Transition t{to, value};
        row.insert(std::upper_bound(row.begin(), row.end(), t,
                                    [](const Transition& a, const Transition& b) { return a.to < b.to; }),
                   t);
      }
    } else {
      it->p = value;
    }
  }
  for (const auto& [key, delta] : x.entries) {
    int from = key.first;
    double sum = 0.0;
    for (const Transition& t : out.rows[from]) sum += t.p;
    if (std::fabs(sum - 1.0) > kRowSumTol)
      fail(Errc::InfeasiblePerturbation, "row " + std::to_string(from) + " sums to " + fmt(sum) + " after perturbation");
  }
  return out;
}

PerturbationMatrix negate(const PerturbationMatrix& x) {
  PerturbationMatrix out;
  for (const auto& [key, d] : x.entries) out.entries[key] = -d;
  return out;
}

}  // namespace advmc
