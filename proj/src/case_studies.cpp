#include "advmc/case_studies.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace advmc {

namespace {

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

std::vector<std::vector<int>> singleton_labels(int n) {
  std::vector<std::vector<int>> labels(n);
  for (int s = 0; s < n; ++s) labels[s] = {s};
  return labels;
}

}  // namespace

Dtmc simple_protocol() {
  Dtmc m;
  m.n = 4;  // 0 start, 1 try, 2 lost, 3 delivered
  m.init = 0;
  m.atoms = {"start", "try", "lost", "delivered"};
  m.labels = singleton_labels(4);
  m.rows = {
      {{1, 1.0}},
      {{2, 0.2}, {3, 0.8}},
      {{1, 1.0}},
      {{0, 1.0}},
  };
  return m;
}

Dtmc zeroconf(int n, long m, long K, double p) {
  if (n < 1) fail(Errc::ParameterOutOfRange, "tick count must be at least 1, got " + std::to_string(n));
  if (!(m > 0 && m < K))
    fail(Errc::ParameterOutOfRange,
         "host count must satisfy 0 < m < K, got m=" + std::to_string(m) + ", K=" + std::to_string(K));
  if (!(p >= 0.0 && p <= 1.0))
    fail(Errc::ParameterOutOfRange, "forward probability must lie in [0,1], got " + std::to_string(p));

  const int err = n + 1, uniq = n + 2, succ = n + 3;
  Dtmc model;
  model.n = n + 4;
  model.init = 0;
  for (int i = 0; i <= n; ++i) model.atoms.push_back("s" + std::to_string(i));
  model.atoms.push_back("err");
  model.atoms.push_back("uniq");
  model.atoms.push_back("succ");
  model.labels = singleton_labels(model.n);

  const double collision = static_cast<double>(m) / static_cast<double>(K);
  model.rows.resize(model.n);
  model.rows[0] = {{1, collision}, {uniq, 1.0 - collision}};
  for (int i = 1; i <= n; ++i) {
    const int forward = i < n ? i + 1 : err;
    if (p < 1.0) model.rows[i].push_back({0, 1.0 - p});
    if (p > 0.0) model.rows[i].push_back({forward, p});
  }
  model.rows[err] = {{err, 1.0}};
  model.rows[uniq] = {{succ, 1.0}};
  model.rows[succ] = {{succ, 1.0}};
  return model;
}

Dtmc gridworld_3x3() {
  Dtmc m;
  m.n = 9;
  m.init = 0;
  m.atoms = {"hazard", "goal"};
  m.labels.resize(9);
  m.labels[2] = {0};
  m.labels[6] = {0};
  m.labels[8] = {1};
  m.rows = {
      {{1, 0.1}, {3, 0.9}},
      {{0, 0.1}, {1, 0.1}, {4, 0.8}},
      {{2, 1.0}},
      {{3, 0.1}, {4, 0.8}, {6, 0.1}},
      {{1, 0.1}, {5, 0.1}, {7, 0.8}},
      {{8, 1.0}},
      {{6, 1.0}},
      {{4, 0.1}, {8, 0.9}},
      {{8, 1.0}},
  };
  return m;
}

std::pair<Mdp, Policy> random_gridworld(const GridSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1)
    fail(Errc::ParameterOutOfRange, "grid must be at least 1x1");
  if (!(spec.slip >= 0.0 && spec.slip <= 1.0))
    fail(Errc::ParameterOutOfRange, "slip mass must lie in [0,1], got " + std::to_string(spec.slip));
  const int n = spec.rows * spec.cols;
  for (int cell : spec.hazards)
    if (cell < 0 || cell >= n) fail(Errc::ParameterOutOfRange, "hazard cell " + std::to_string(cell) + " outside the grid");
  for (int cell : spec.goals) {
    if (cell < 0 || cell >= n) fail(Errc::ParameterOutOfRange, "goal cell " + std::to_string(cell) + " outside the grid");
    if (spec.hazards.count(cell))
      fail(Errc::ParameterOutOfRange, "cell " + std::to_string(cell) + " is both goal and hazard");
  }

  // State = row * cols + col, rows counted from the bottom.
  auto neighbor = [&](int s, int dir) {
    const int r = s / spec.cols, c = s % spec.cols;
    switch (dir) {
      case 0: return r + 1 < spec.rows ? s + spec.cols : s;  // up
      case 1: return r > 0 ? s - spec.cols : s;              // down
      case 2: return c > 0 ? s - 1 : s;                      // left
      default: return c + 1 < spec.cols ? s + 1 : s;         // right
    }
  };

  Mdp mdp;
  mdp.n = n;
  mdp.init = 0;
  mdp.actions = {"up", "down", "left", "right"};
  mdp.atoms = {"hazard", "goal"};
  mdp.labels.resize(n);
  for (int s = 0; s < n; ++s) {
    if (spec.hazards.count(s)) mdp.labels[s] = {0};
    if (spec.goals.count(s)) mdp.labels[s] = {1};
  }

  std::mt19937_64 gen(spec.seed);
  mdp.act_rows.resize(n);
  for (int s = 0; s < n; ++s) {
    const bool absorbing = spec.hazards.count(s) || spec.goals.count(s);
    for (int a = 0; a < 4; ++a) {
      if (absorbing) {
        mdp.act_rows[s].push_back({a, {{s, 1.0}}});
        continue;
      }
      const int intended = neighbor(s, a);
      std::set<int> slip_targets;
      for (int d = 0; d < 4; ++d) slip_targets.insert(neighbor(s, d));
      slip_targets.insert(s);
      slip_targets.erase(intended);

      std::vector<std::pair<int, double>> dist;
      dist.push_back({intended, spec.slip < 1.0 ? 1.0 - spec.slip : 0.0});
      if (!slip_targets.empty() && spec.slip > 0.0) {
        std::vector<double> weights;
        double total = 0.0;
        for (int t : slip_targets) {
          (void)t;
          weights.push_back(uniform01(gen));
          total += weights.back();
        }
        size_t i = 0;
        for (int t : slip_targets) {
          double share = total > 0.0 ? spec.slip * weights[i] / total
                                     : spec.slip / static_cast<double>(slip_targets.size());
          dist.push_back({t, share});
          ++i;
        }
      } else if (spec.slip > 0.0) {
        dist[0].second = 1.0;
      }

      std::sort(dist.begin(), dist.end());
      std::vector<Transition> row;
      for (const auto& [t, p] : dist) {
        if (p == 0.0) continue;
        if (!row.empty() && row.back().to == t) row.back().p += p;
        else row.push_back({t, p});
      }
      mdp.act_rows[s].push_back({a, std::move(row)});
    }
  }

  // Greedy shortest-path policy toward the goal cells, ties broken by the
  // direction order up, right, down, left.
  std::vector<int> dist(n, std::numeric_limits<int>::max());
  std::vector<int> queue;
  for (int g : spec.goals) {
    dist[g] = 0;
    queue.push_back(g);
  }
  for (size_t head = 0; head < queue.size(); ++head) {
    int s = queue[head];
    for (int d = 0; d < 4; ++d) {
      int t = neighbor(s, d);
      if (dist[t] == std::numeric_limits<int>::max()) {
        dist[t] = dist[s] + 1;
        queue.push_back(t);
      }
    }
  }
  const int order[4] = {0, 3, 1, 2};  // up, right, down, left
  Policy policy;
  policy.choice.resize(n, "up");
  for (int s = 0; s < n; ++s) {
    if (spec.hazards.count(s) || spec.goals.count(s)) continue;
    int best_dir = 0;
    long best = std::numeric_limits<long>::max();
    for (int dir : order) {
      int t = neighbor(s, dir);
      if (t == s) continue;
      long d = dist[t] == std::numeric_limits<int>::max() ? std::numeric_limits<long>::max() - 1 : dist[t];
      if (d < best) {
        best = d;
        best_dir = dir;
      }
    }
    policy.choice[s] = mdp.actions[best_dir];
  }
  return {std::move(mdp), policy};
}

}  // namespace advmc
