#pragma once

#include <cstdint>
#include <set>
#include <utility>

#include "advmc/model.hpp"

namespace advmc {

/// Four-state retransmission protocol: start -> try -> {delivered, lost},
/// lost retries forever, delivered restarts.
Dtmc simple_protocol();

/// Address-collision chain: from s0 a fresh address collides with
/// probability m/K and the host then waits up to n ticks, each tick
/// advancing toward err with probability p or restarting otherwise.
Dtmc zeroconf(int n, long m, long K, double p);

/// The fixed 9-state 3x3 grid with hazards {2,6} (state 2 unreachable) and
/// goal 8.
Dtmc gridworld_3x3();

struct GridSpec {
  int rows = 3;
  int cols = 3;
  std::set<int> hazards;
  std::set<int> goals;
  double slip = 0.2;  // per-state probability mass diverted to slip targets
  std::uint64_t seed = 42;
};

/// Randomized grid MDP plus a greedy shortest-path policy. States are indexed
/// left to right, then bottom to top; hazard and goal cells absorb. The slip
/// mass of each (state, action) is spread over adjacent cells by seeded
/// uniform draws, so instances are bit-reproducible per seed.
std::pair<Mdp, Policy> random_gridworld(const GridSpec& spec);

}  // namespace advmc
