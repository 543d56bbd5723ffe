#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pinmix/rng.hpp"

namespace pinmix {

// Lift used by the no-wall comparison system: 2 ceil(sqrt(L) (log L)^2 / 2).
int sep_m(int L);

// Unconstrained +-1 bridge of length L pinned at height m at both ends.
struct SepState {
  int m = 0;
  std::vector<int> heights;

  int L() const noexcept { return static_cast<int>(heights.size()) - 1; }
  // Throws std::invalid_argument unless steps are +-1 and both ends sit at m.
  void validate() const;
};

// Uniform bridge: a uniformly shuffled sequence of L/2 up and L/2 down steps.
SepState sample_uniform_bridge(int L, int m, RngStream& rng);

// Uniform-bridge probability that min_x zeta_x <= 0, by reflection:
// C(L, L/2 + m) / C(L, L/2). Equals 1 for m = 0 and 0 for m > L/2.
double bridge_min_tail_exact(int L, int m);

struct SepSnapshot {
  double t;
  std::vector<int> heights;
};

struct SepTrajectory {
  int m;
  std::vector<SepSnapshot> snapshots;  // at each sorted grid time up to the horizon
  SepState final_state;
  std::uint64_t flips;
  int min_height;  // over all flips
};

// No-wall chain (every corner flips at rate 1/2) from the lifted wedge, on
// the clock lattice raised by m. m < 0 selects sep_m(L).
SepTrajectory sep_dynamics(int L, double horizon, std::uint64_t master_seed, std::span<const double> grid = {},
                           int m = -1);

struct SandwichReport {
  int L;
  int m;
  std::uint64_t checks;
  std::uint64_t violations;
  std::optional<double> first_violation;
  bool holds_at_end;
  int min_height;  // lowest height reached by the uniform-start chain at the end
};

// Three chains on one realization: the lambda = 0 wall chain from the lifted
// wedge, the no-wall chain from the lifted wedge and the no-wall chain from a
// uniform bridge. Checks wall >= no-wall wedge >= no-wall uniform after every
// ring. m < 0 selects sep_m(L).
SandwichReport sep_sandwich(int L, double horizon, std::uint64_t master_seed, int m = -1);

}  // namespace pinmix
