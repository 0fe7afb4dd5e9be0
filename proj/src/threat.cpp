#include "advmc/threat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace advmc {

namespace {

constexpr double kFeasTol = 1e-9;

double uniform01(std::mt19937_64& gen) {
  // 53-bit mantissa draw; keeps the stream identical across platforms.
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

const char* threat_kind_name(ThreatKind kind) {
  switch (kind) {
    case ThreatKind::ST: return "ST";
    case ThreatKind::SPST: return "SPST";
    case ThreatKind::SS: return "SS";
    case ThreatKind::SPSS: return "SPSS";
  }
  return "?";
}

ThreatKind threat_kind_from_name(const std::string& name) {
  if (name == "ST") return ThreatKind::ST;
  if (name == "SPST") return ThreatKind::SPST;
  if (name == "SS") return ThreatKind::SS;
  if (name == "SPSS") return ThreatKind::SPSS;
  fail(Errc::ParseError, "unknown threat kind '" + name + "'");
}

bool structure_preserving(ThreatKind kind) {
  return kind == ThreatKind::SPST || kind == ThreatKind::SPSS;
}

bool state_selected(ThreatKind kind) {
  return kind == ThreatKind::SS || kind == ThreatKind::SPSS;
}

std::string FreeVariable::name() const {
  return "v" + std::to_string(from) + "_" + std::to_string(to);
}

void validate_threat(const Dtmc& model, const ThreatModel& tm) {
  if (!(tm.epsilon >= 0.0 && tm.epsilon <= 1.0))
    fail(Errc::ParameterOutOfRange, "epsilon must lie in [0,1], got " + std::to_string(tm.epsilon));
  if (state_selected(tm.kind)) {
    if (!tm.vulnerable_transitions.empty())
      fail(Errc::ParameterOutOfRange,
           std::string(threat_kind_name(tm.kind)) + " threat must use vulnerable_states");
    for (int s : tm.vulnerable_states)
      if (s < 0 || s >= model.n)
        fail(Errc::ParameterOutOfRange, "vulnerable state " + std::to_string(s) + " outside the state space");
  } else {
    if (!tm.vulnerable_states.empty())
      fail(Errc::ParameterOutOfRange,
           std::string(threat_kind_name(tm.kind)) + " threat must use vulnerable_transitions");
    for (const auto& [s, t] : tm.vulnerable_transitions)
      if (s < 0 || s >= model.n || t < 0 || t >= model.n)
        fail(Errc::ParameterOutOfRange,
             "vulnerable transition (" + std::to_string(s) + "," + std::to_string(t) + ") outside the state space");
  }
}

std::vector<FreeVariable> free_variables(const Dtmc& model, const ThreatModel& tm) {
  validate_threat(model, tm);
  std::set<std::pair<int, int>> pairs;
  if (state_selected(tm.kind)) {
    for (int s : tm.vulnerable_states)
      for (int t = 0; t < model.n; ++t) pairs.insert({s, t});
  } else {
    pairs.insert(tm.vulnerable_transitions.begin(), tm.vulnerable_transitions.end());
  }

  std::vector<FreeVariable> vars;
  for (const auto& [s, t] : pairs) {
    double base = model.prob(s, t);
    if (structure_preserving(tm.kind) && base == 0.0) continue;
    FreeVariable v;
    v.from = s;
    v.to = t;
    v.base = base;
    v.lower = std::max(0.0, base - tm.epsilon);
    v.upper = std::min(1.0, base + tm.epsilon);
    vars.push_back(v);
  }

  // A lone variable in its row cannot move: the fixed siblings already pin
  // the row sum.
  std::map<int, int> per_row;
  for (const FreeVariable& v : vars) per_row[v.from]++;
  for (FreeVariable& v : vars) {
    if (per_row[v.from] == 1) {
      v.lower = v.base;
      v.upper = v.base;
    }
  }
  return vars;
}

bool feasible(const Dtmc& model, const ThreatModel& tm, const PerturbationMatrix& x) {
  validate_threat(model, tm);
  std::set<std::pair<int, int>> allowed;
  if (state_selected(tm.kind)) {
    for (int s : tm.vulnerable_states)
      for (int t = 0; t < model.n; ++t) allowed.insert({s, t});
  } else {
    allowed.insert(tm.vulnerable_transitions.begin(), tm.vulnerable_transitions.end());
  }

  std::map<int, double> row_sum;
  for (const auto& [key, d] : x.entries) {
    if (d == 0.0) continue;
    const auto [s, t] = key;
    if (s < 0 || s >= model.n || t < 0 || t >= model.n) return false;
    if (!allowed.count(key)) return false;
    double base = model.prob(s, t);
    if (structure_preserving(tm.kind) && base == 0.0) return false;
    if (std::fabs(d) > tm.epsilon + kFeasTol) return false;
    double value = base + d;
    if (value < -kFeasTol || value > 1.0 + kFeasTol) return false;
    row_sum[s] += d;
  }
  for (const auto& [s, sum] : row_sum)
    if (std::fabs(sum) > kFeasTol) return false;
  return true;
}

void project_row(std::span<double> v, std::span<const double> lo, std::span<const double> hi,
                 double target) {
  const size_t m = v.size();
  double lo_sum = 0.0, hi_sum = 0.0;
  for (size_t i = 0; i < m; ++i) {
    lo_sum += lo[i];
    hi_sum += hi[i];
  }
  if (target < lo_sum - 1e-9 || target > hi_sum + 1e-9)
    fail(Errc::ProjectionFailed, "row-sum target " + std::to_string(target) + " outside the box range");

  std::vector<double> y(v.begin(), v.end()), p(m, 0.0), q(m, 0.0), a(m, 0.0);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double s = 0.0;
    for (size_t i = 0; i < m; ++i) s += y[i] + p[i];
    double shift = (target - s) / static_cast<double>(m);
    for (size_t i = 0; i < m; ++i) {
      double z = y[i] + p[i];
      a[i] = z + shift;
      p[i] = z - a[i];
    }
    double change = 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < m; ++i) {
      double z = a[i] + q[i];
      double clamped = std::min(hi[i], std::max(lo[i], z));
      q[i] = z - clamped;
      change = std::max(change, std::fabs(clamped - y[i]));
      y[i] = clamped;
      sum += clamped;
    }
    if (change < 1e-10 && std::fabs(sum - target) < 1e-10) break;
  }
  double sum = 0.0;
  for (size_t i = 0; i < m; ++i) sum += y[i];
  if (std::fabs(sum - target) > kFeasTol)
    fail(Errc::ProjectionFailed, "Dykstra projection did not reach the row-sum slice");
  std::copy(y.begin(), y.end(), v.begin());
}

PerturbationMatrix random_feasible_point(const Dtmc& model, const ThreatModel& tm,
                                         std::uint64_t seed) {
  std::vector<FreeVariable> vars = free_variables(model, tm);
  if (vars.empty()) fail(Errc::EmptyThreat, "threat model exposes no free variable");

  std::mt19937_64 gen(seed);
  std::vector<double> value(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) {
    double u = uniform01(gen);
    value[i] = vars[i].lower + u * (vars[i].upper - vars[i].lower);
  }

  std::map<int, std::vector<size_t>> rows;
  for (size_t i = 0; i < vars.size(); ++i) rows[vars[i].from].push_back(i);

  PerturbationMatrix out;
  for (const auto& [row, idx] : rows) {
    std::vector<double> v(idx.size()), lo(idx.size()), hi(idx.size());
    double target = 0.0;
    for (size_t j = 0; j < idx.size(); ++j) {
      v[j] = value[idx[j]];
      lo[j] = vars[idx[j]].lower;
      hi[j] = vars[idx[j]].upper;
      target += vars[idx[j]].base;
    }
    project_row(v, lo, hi, target);
    for (size_t j = 0; j < idx.size(); ++j) {
      double delta = v[j] - vars[idx[j]].base;
      if (delta != 0.0) out.entries[{vars[idx[j]].from, vars[idx[j]].to}] = delta;
    }
  }
  return out;
}

IdtmcExport build_idtmc(const Dtmc& model, const ThreatModel& tm) {
  validate_threat(model, tm);
  IdtmcExport out;
  out.lower.assign(model.n, std::vector<double>(model.n, 0.0));
  out.upper.assign(model.n, std::vector<double>(model.n, 0.0));
  for (int s = 0; s < model.n; ++s) {
    for (const Transition& t : model.rows[s]) {
      out.lower[s][t.to] = t.p;
      out.upper[s][t.to] = t.p;
    }
  }
  std::set<std::pair<int, int>> pairs;
  if (state_selected(tm.kind)) {
    for (int s : tm.vulnerable_states)
      for (int t = 0; t < model.n; ++t) pairs.insert({s, t});
  } else {
    pairs.insert(tm.vulnerable_transitions.begin(), tm.vulnerable_transitions.end());
  }
  for (const auto& [s, t] : pairs) {
    double base = model.prob(s, t);
    if (structure_preserving(tm.kind) && base == 0.0) continue;  // stays a point interval
    out.lower[s][t] = base - std::min(tm.epsilon, base);
    out.upper[s][t] = base + std::min(tm.epsilon, 1.0 - base);
  }
  if (structure_preserving(tm.kind))
    out.note = "structure-preserving threat: zero-probability transitions are exported as zero-width intervals";
  return out;
}

}  // namespace advmc
