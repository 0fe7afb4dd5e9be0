#include "advmc/parametric.hpp"

#include <algorithm>

namespace advmc {

namespace {

void check_deadline(const SynthesisOptions& opts) {
  if (opts.deadline && std::chrono::steady_clock::now() > *opts.deadline)
    fail(Errc::Timeout, "symbolic synthesis exceeded its deadline");
}

Polynomial cell_polynomial(const Pdtmc& pd, const PdtmcCell& cell) {
  if (cell.is_var()) return Polynomial::variable(pd.vars, cell.var);
  return Polynomial::constant(pd.vars, cell.value);
}

/// cell * p without going through a generic product: constants scale, a
/// variable shifts one exponent.
Polynomial cell_times(const Pdtmc& pd, const PdtmcCell& cell, const Polynomial& p, std::size_t cap) {
  if (!cell.is_var()) return p.scaled(Rational(cell.value));
  return mul_checked(Polynomial::variable(pd.vars, cell.var), p, cap);
}

struct ParametricGraph {
  std::vector<std::vector<int>> pred;
  std::vector<char> reach;  // can reach rhs through lhs
  std::vector<char> yes;    // probability-1 states
};

// Prob-0/prob-1 classification treating every variable cell as possibly
// positive. Sound on the interior of the feasible region; boxes touching 0
// are deliberately treated as positive.
ParametricGraph classify(const Pdtmc& pd, const std::vector<char>& lhs, const std::vector<char>& rhs) {
  ParametricGraph g;
  g.pred.resize(pd.n);
  for (int s = 0; s < pd.n; ++s)
    for (const auto& [t, cell] : pd.rows[s])
      if (cell.is_var() || cell.value > 0.0) g.pred[t].push_back(s);

  g.reach.assign(pd.n, 0);
  std::vector<int> queue;
  for (int s = 0; s < pd.n; ++s)
    if (rhs[s]) { g.reach[s] = 1; queue.push_back(s); }
  while (!queue.empty()) {
    int t = queue.back();
    queue.pop_back();
    for (int p : g.pred[t])
      if (!g.reach[p] && lhs[p] && !rhs[p]) { g.reach[p] = 1; queue.push_back(p); }
  }

  std::vector<char> bad(pd.n, 0);
  queue.clear();
  for (int s = 0; s < pd.n; ++s)
    if (!g.reach[s]) { bad[s] = 1; queue.push_back(s); }
  while (!queue.empty()) {
    int t = queue.back();
    queue.pop_back();
    for (int p : g.pred[t])
      if (!bad[p] && lhs[p] && !rhs[p]) { bad[p] = 1; queue.push_back(p); }
  }

  g.yes.assign(pd.n, 0);
  for (int s = 0; s < pd.n; ++s) g.yes[s] = g.reach[s] && !bad[s];
  return g;
}

// Pivot order over the interior states; the initial state is always kept
// for the final read-off.
std::vector<int> pivot_order(const Pdtmc& pd, const std::vector<int>& interior,
                             EliminationOrder order) {
  std::vector<char> has_var(pd.n, 0);
  for (int s = 0; s < pd.n; ++s)
    for (const auto& [t, cell] : pd.rows[s])
      if (cell.is_var()) has_var[s] = 1;

  std::vector<int> out;
  for (int s : interior)
    if (s != pd.init) out.push_back(s);
  switch (order) {
    case EliminationOrder::IndexAscending:
      break;  // interior is already ascending
    case EliminationOrder::IndexDescending:
      std::reverse(out.begin(), out.end());
      break;
    case EliminationOrder::VariablesLast:
      std::stable_partition(out.begin(), out.end(), [&](int s) { return !has_var[s]; });
      break;
  }
  out.push_back(pd.init);
  return out;
}

// Scale one matrix row so every coefficient is an integer; the final ratio
// of determinants is invariant under row scaling.
void clear_denominators(std::vector<Polynomial>& row) {
  mpz_class common = 1;
  for (const Polynomial& p : row)
    for (const auto& [e, c] : p.terms()) common = lcm(common, c.get_den());
  if (common == 1) return;
  Rational factor(common);
  for (Polynomial& p : row) p = p.scaled(factor);
}

}  // namespace

Dtmc Pdtmc::instantiate_at(std::span<const double> point) const {
  Dtmc out;
  out.n = n;
  out.init = init;
  out.atoms = atoms;
  out.labels = labels;
  out.rows.resize(n);
  for (int s = 0; s < n; ++s) {
    out.rows[s].reserve(rows[s].size());
    for (const auto& [t, cell] : rows[s])
      out.rows[s].push_back({t, cell.is_var() ? point[cell.var] : cell.value});
  }
  return out;
}

std::vector<double> Pdtmc::base_point() const {
  std::vector<double> point(variables.size());
  for (size_t i = 0; i < variables.size(); ++i) point[i] = variables[i].base;
  return point;
}

Pdtmc build_pdtmc(const Dtmc& model, const ThreatModel& tm) {
  std::vector<FreeVariable> all = free_variables(model, tm);
  if (all.empty())
    fail(Errc::EmptyThreat, "threat model exposes no free variable");

  Pdtmc pd;
  pd.n = model.n;
  pd.init = model.init;
  pd.atoms = model.atoms;
  pd.labels = model.labels;
  pd.rows.resize(model.n);
  for (int s = 0; s < model.n; ++s)
    for (const Transition& t : model.rows[s])
      pd.rows[s].push_back({t.to, PdtmcCell{t.p, -1}});

  std::vector<std::string> names;
  for (const FreeVariable& v : all) {
    if (v.frozen()) continue;
    int index = static_cast<int>(pd.variables.size());
    pd.variables.push_back(v);
    names.push_back(v.name());
    auto& row = pd.rows[v.from];
    auto it = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == v.to; });
    if (it == row.end()) {
      row.insert(std::upper_bound(row.begin(), row.end(), v.to,
                                  [](int to, const auto& e) { return to < e.first; }),
                 {v.to, PdtmcCell{0.0, index}});
    } else {
      it->second = PdtmcCell{v.base, index};
    }
  }
  pd.vars = make_var_list(std::move(names));
  return pd;
}

Polynomial symbolic_bounded_until(const Pdtmc& pd, const PathFormula& phi, const SynthesisOptions& opts) {
  Polynomial f(pd.vars);
  if (phi.kind == PathFormula::Kind::Next) {
    std::vector<char> rhs = eval_state_expr(pd.n, pd.atoms, pd.labels, phi.rhs);
    for (const auto& [t, cell] : pd.rows[pd.init])
      if (rhs[t]) f += cell_polynomial(pd, cell);
  } else {
    if (!phi.bound)
      fail(Errc::UnsupportedForSymbolic, "unbounded until requires the rational-function backend");
    std::vector<char> lhs = eval_state_expr(pd.n, pd.atoms, pd.labels, phi.lhs);
    std::vector<char> rhs = eval_state_expr(pd.n, pd.atoms, pd.labels, phi.rhs);
    const Polynomial one = Polynomial::constant(pd.vars, Rational(1));
    std::vector<Polynomial> x(pd.n, Polynomial(pd.vars));
    for (int s = 0; s < pd.n; ++s)
      if (rhs[s]) x[s] = one;
    std::vector<Polynomial> next(pd.n, Polynomial(pd.vars));
    for (long round = 0; round < *phi.bound; ++round) {
      check_deadline(opts);
      for (int s = 0; s < pd.n; ++s) {
        if (rhs[s]) { next[s] = one; continue; }
        if (!lhs[s]) { next[s] = Polynomial(pd.vars); continue; }
        Polynomial acc(pd.vars);
        for (const auto& [t, cell] : pd.rows[s]) {
          if (x[t].is_zero()) continue;
          acc += cell_times(pd, cell, x[t], opts.monomial_cap);
        }
        if (acc.term_count() > opts.monomial_cap)
          fail(Errc::DegreeOverflow, "monomial budget exceeded during value iteration");
        next[s] = std::move(acc);
      }
      std::swap(x, next);
    }
    f = std::move(x[pd.init]);
  }
  if (phi.complement) f = Polynomial::constant(pd.vars, Rational(1)) - f;
  return f;
}

RationalFunction symbolic_unbounded_until(const Pdtmc& pd, const PathFormula& phi,
                                          const SynthesisOptions& opts) {
  if (phi.kind != PathFormula::Kind::Until || phi.bound)
    fail(Errc::UnsupportedForSymbolic, "state elimination handles unbounded until only");

  std::vector<char> lhs = eval_state_expr(pd.n, pd.atoms, pd.labels, phi.lhs);
  std::vector<char> rhs = eval_state_expr(pd.n, pd.atoms, pd.labels, phi.rhs);
  ParametricGraph g = classify(pd, lhs, rhs);

  RationalFunction f;
  const Polynomial one = Polynomial::constant(pd.vars, Rational(1));
  if (g.yes[pd.init]) {
    f = RationalFunction(one);
  } else if (!g.reach[pd.init]) {
    f = RationalFunction(Polynomial(pd.vars));
  } else {
    // Interior reachability system (I - P)x = b over the polynomial ring,
    // with b collecting the mass into probability-1 states. Eliminating a
    // pivot row is the usual state-elimination step; keeping the whole
    // system fraction-free (Bareiss) makes every intermediate entry a minor
    // and every division exact, so intermediate sizes stay polynomial.
    std::vector<int> interior;
    std::vector<int> slot(pd.n, -1);
    for (int s = 0; s < pd.n; ++s)
      if (g.reach[s] && !g.yes[s]) interior.push_back(s);
    std::vector<int> order = pivot_order(pd, interior, opts.order);
    const int m = static_cast<int>(order.size());
    for (int i = 0; i < m; ++i) slot[order[i]] = i;

    std::vector<std::vector<Polynomial>> a(
        static_cast<size_t>(m), std::vector<Polynomial>(static_cast<size_t>(m) + 1, Polynomial(pd.vars)));
    for (int i = 0; i < m; ++i) {
      const int s = order[i];
      a[i][i] = one;
      for (const auto& [t, cell] : pd.rows[s]) {
        if (!cell.is_var() && cell.value <= 0.0) continue;
        Polynomial p = cell_polynomial(pd, cell);
        if (g.yes[t]) a[i][m] += p;
        else if (slot[t] >= 0) a[i][slot[t]] -= p;
        // probability-0 targets contribute nothing
      }
      if (a[i][i].is_zero())
        fail(Errc::DivisionByZeroPolynomial,
             "state " + std::to_string(s) + " is a parametric sink (1 - P(s,s) is identically zero)");
      clear_denominators(a[i]);
    }

    Polynomial previous_pivot = one;
    for (int k = 0; k < m; ++k) {
      check_deadline(opts);
      if (a[k][k].is_zero()) {
        int swap_row = -1;
        for (int r = k + 1; r < m; ++r)
          if (!a[r][k].is_zero()) { swap_row = r; break; }
        if (swap_row < 0)
          fail(Errc::SingularSystem, "zero pivot block in the parametric until system");
        std::swap(a[k], a[swap_row]);  // flips both determinants, ratio unchanged
      }
      for (int i = k + 1; i < m; ++i) {
        for (int j = k + 1; j <= m; ++j) {
          check_deadline(opts);
          Polynomial t = mul_checked(a[k][k], a[i][j], opts.monomial_cap) -
                         mul_checked(a[i][k], a[k][j], opts.monomial_cap);
          std::optional<Polynomial> q = divide_exact(t, previous_pivot);
          if (!q) throw std::logic_error("fraction-free elimination lost exact divisibility");
          if (q->term_count() > opts.monomial_cap)
            fail(Errc::DegreeOverflow, "monomial budget exceeded during state elimination");
          a[i][j] = std::move(*q);
        }
        a[i][k] = Polynomial(pd.vars);
      }
      previous_pivot = a[k][k];
    }
    // With the initial state pivoted last, the trailing row holds both
    // Cramer determinants: the solution is a[m-1][m] / a[m-1][m-1].
    f = RationalFunction(a[m - 1][m], a[m - 1][m - 1]);
  }

  if (phi.complement) f = RationalFunction(f.den() - f.num(), f.den());
  return f;
}

namespace {

std::vector<double> assignment_point(const VarList& vars, const std::map<std::string, double>& assignment) {
  std::vector<double> point(vars->size());
  for (size_t i = 0; i < vars->size(); ++i) {
    auto it = assignment.find((*vars)[i]);
    if (it == assignment.end())
      fail(Errc::MissingVariable, "assignment lacks a value for '" + (*vars)[i] + "'");
    point[i] = it->second;
  }
  return point;
}

int var_index(const VarList& vars, const std::string& name) {
  for (size_t i = 0; i < vars->size(); ++i)
    if ((*vars)[i] == name) return static_cast<int>(i);
  fail(Errc::MissingVariable, "unknown variable '" + name + "'");
}

}  // namespace

double instantiate(const Polynomial& f, const std::map<std::string, double>& assignment) {
  return f.evaluate(assignment_point(f.vars(), assignment));
}

double instantiate(const RationalFunction& f, const std::map<std::string, double>& assignment) {
  return f.evaluate(assignment_point(f.num().vars(), assignment));
}

Polynomial differentiate(const Polynomial& f, const std::string& variable) {
  return f.derivative(var_index(f.vars(), variable));
}

RationalFunction differentiate(const RationalFunction& f, const std::string& variable) {
  return f.derivative(var_index(f.num().vars(), variable));
}

}  // namespace advmc
