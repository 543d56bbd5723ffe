#include "pinmix/sep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pinmix/dynamics.hpp"

namespace pinmix {

namespace {

void require_even(int L) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("L must be even and >= 2");
}

std::vector<int> lifted_wedge(int L, int m) {
  std::vector<int> h(static_cast<std::size_t>(L) + 1);
  for (int x = 0; x <= L; ++x) h[static_cast<std::size_t>(x)] = m + std::min(x, L - x);
  return h;
}

}  // namespace

int sep_m(int L) {
  require_even(L);
  const double l = std::log(static_cast<double>(L));
  return 2 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(L)) * l * l / 2.0));
}

void SepState::validate() const {
  if (heights.size() < 3 || heights.size() % 2 == 0) throw std::invalid_argument("bridge length must be even and >= 2");
  if (heights.front() != m || heights.back() != m) throw std::invalid_argument("bridge endpoints must equal m");
  for (std::size_t x = 1; x < heights.size(); ++x)
    if (std::abs(heights[x] - heights[x - 1]) != 1)
      throw std::invalid_argument("bridge step at x=" + std::to_string(x) + " is not +-1");
}

SepState sample_uniform_bridge(int L, int m, RngStream& rng) {
  require_even(L);
  std::vector<int> steps(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) steps[static_cast<std::size_t>(i)] = i < L / 2 ? 1 : -1;
  for (std::size_t i = steps.size() - 1; i > 0; --i)
    std::swap(steps[i], steps[static_cast<std::size_t>(rng.uniform_index(i + 1))]);
  SepState s{m, {m}};
  for (int d : steps) s.heights.push_back(s.heights.back() + d);
  return s;
}

double bridge_min_tail_exact(int L, int m) {
  require_even(L);
  if (m < 0) throw std::invalid_argument("m must be >= 0");
  const int n = L / 2;
  if (m > n) return 0.0;
  // C(L, n + m) / C(L, n) = prod_{k=1..m} (n - k + 1) / (n + k)
  double r = 1.0;
  for (int k = 1; k <= m; ++k) r *= static_cast<double>(n - k + 1) / static_cast<double>(n + k);
  return r;
}

SepTrajectory sep_dynamics(int L, double horizon, std::uint64_t master_seed, std::span<const double> grid, int m) {
  require_even(L);
  if (m < 0) m = sep_m(L);
  std::vector<ChainSpec> specs{{lifted_wedge(L, m), 1.0, false, {}}};
  CoupledChains engine(SiteLattice::lifted(L, m), ClockRealization(master_seed), std::move(specs));
  struct Counter : EngineObserver {
    void on_flip(double, int, int, int, int new_h) override {
      ++flips;
      lowest = std::min(lowest, new_h);
    }
    std::uint64_t flips = 0;
    int lowest;
  } counter;
  counter.lowest = m;
  engine.set_observer(&counter);

  SepTrajectory out{m, {}, {}, 0, m};
  for (double t : grid) {
    if (t > horizon) break;
    engine.advance_to(t);
    const auto h = engine.heights(0);
    out.snapshots.push_back({t, {h.begin(), h.end()}});
  }
  engine.advance_to(horizon);
  const auto h = engine.heights(0);
  out.final_state = {m, {h.begin(), h.end()}};
  out.flips = counter.flips;
  out.min_height = counter.lowest;
  return out;
}

SandwichReport sep_sandwich(int L, double horizon, std::uint64_t master_seed, int m) {
  require_even(L);
  if (m < 0) m = sep_m(L);
  RngStream init(master_seed, kEquilibriumStartStream);
  const auto uniform = sample_uniform_bridge(L, m, init);
  std::vector<ChainSpec> specs{{lifted_wedge(L, m), 0.0, true, {}},
                               {lifted_wedge(L, m), 1.0, false, {}},
                               {uniform.heights, 1.0, false, {}}};
  CoupledChains engine(SiteLattice::lifted(L, m), ClockRealization(master_seed), std::move(specs));
  OrderMonitor monitor(engine, {{1, 0}, {2, 1}});
  engine.set_observer(&monitor);
  engine.advance_to(horizon);
  const auto low = engine.heights(2);
  return {L,
          m,
          monitor.checks(),
          monitor.violations(),
          monitor.first_violation(),
          monitor.holds_everywhere(),
          *std::min_element(low.begin(), low.end())};
}

}  // namespace pinmix
