#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pinmix/clocks.hpp"
#include "pinmix/path.hpp"
#include "pinmix/statespace.hpp"

namespace pinmix {

// Corner flip xi -> xi^x. Identity when x holds no flippable corner
// (neighbours differ, or both neighbours sit on the wall).
Path flip(const Path& path, int x);

// Jump rate R_x(xi) of the heat-bath corner-flip dynamics.
double rate(const Path& path, int x, const ModelParams& params);

// Coin threshold for a ring at level z. `wall` selects the pinning rules
// at z = 1; the no-wall comparison system flips every corner at 1/2.
inline double coin_threshold(Direction dir, int z, bool wall, double lambda) noexcept {
  if (wall && z == 1) return dir == Direction::up ? 1.0 / (1.0 + lambda) : lambda / (1.0 + lambda);
  return 0.5;
}

// Right-continuous piecewise-constant map t -> censored subset of plaquettes.
// Interval i is [breakpoints[i], breakpoints[i+1]); breakpoints[0] = 0.
class CensoringSchedule {
 public:
  CensoringSchedule() = default;  // never censors

  void add_interval(double start, std::vector<std::pair<int, int>> sites);
  // Censor `sites` on [0, until), nothing afterwards.
  static CensoringSchedule window(std::vector<std::pair<int, int>> sites, double until);

  bool empty() const noexcept { return breakpoints_.empty(); }
  bool censored(double t, int x, int z) const noexcept;
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const std::pair<int, int>> censored_at(double t) const noexcept;

 private:
  std::vector<double> breakpoints_;
  std::vector<std::vector<std::pair<int, int>>> sets_;  // each sorted
};

// G_L: the level-1 plaquettes at even columns, i.e. exactly the updates that
// change the contact count.
std::vector<std::pair<int, int>> contact_changing_sites(int L);

struct ChainState {
  Path path;
  double time;
  ModelParams params;
};

// One ring of the graphical construction applied to a single chain.
ChainState apply_clock_event(const ChainState& state, const ClockSite& site, double coin);

struct ChainSpec {
  std::vector<int> initial;
  double lambda = 1.0;
  bool wall = true;
  CensoringSchedule schedule{};
};

struct FlipRecord {
  double t;
  int chain;
  int x;
  int height;

  friend bool operator==(const FlipRecord&, const FlipRecord&) = default;
};

class EngineObserver {
 public:
  virtual ~EngineObserver() = default;
  // A ring that met its geometric condition in `chain`; `accepted` is the
  // outcome of coin and censoring.
  virtual void on_ring(double /*t*/, const ClockSite& /*site*/, int /*chain*/, bool /*accepted*/) {}
  virtual void on_flip(double /*t*/, int /*chain*/, int /*x*/, int /*old_h*/, int /*new_h*/) {}
  // After every chain has seen the ring at column x; `any_flip` if one moved.
  virtual void on_ring_end(double /*t*/, int /*x*/, bool /*any_flip*/) {}
};

// Grand coupling of any number of chains on one clock realization. Only
// plaquettes where some chain has a flippable corner are scheduled: the
// next ring of a site is looked up when it becomes relevant, which the
// memorylessness of the streams makes exact. Every chain therefore sees
// the same rings it would see if all streams were materialised.
class CoupledChains {
 public:
  CoupledChains(SiteLattice lattice, ClockRealization clocks, std::vector<ChainSpec> chains);

  int chain_count() const noexcept { return static_cast<int>(chains_.size()); }
  double time() const noexcept { return now_; }
  std::span<const int> heights(int chain) const noexcept { return chains_[static_cast<std::size_t>(chain)].h; }
  const SiteLattice& lattice() const noexcept { return lattice_; }

  void set_observer(EngineObserver* obs) noexcept { observer_ = obs; }

  // Track first coalescence of (a, b); returns the pair handle.
  int track_pair(int a, int b);
  // First time the pair was equal, if any.
  std::optional<double> coalescence_time(int pair) const noexcept;
  bool coalesced_now(int pair) const noexcept { return pairs_[static_cast<std::size_t>(pair)].mismatch == 0; }
  bool all_pairs_coalesced() const noexcept { return apart_ == 0; }

  // Process the next ring if it is at or before `limit`. Returns false (and
  // moves the clock to `limit`) when nothing rings in (now, limit].
  bool step(double limit);
  void advance_to(double t);
  // Advance until all tracked pairs have coalesced or t is reached.
  void advance_until_coalesced(double t);

  std::uint64_t rings_processed() const noexcept { return rings_; }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Chain {
    std::vector<int> h;
    std::vector<std::uint32_t> relevant;  // per column: active site id or kNone
    double lambda;
    bool wall;
    CensoringSchedule schedule;
  };
  struct SiteState {
    ClockRealization::Cursor cursor{-1, 0, -1.0, 0.0};  // last ring looked up
    std::uint32_t refs = 0;
    bool in_heap = false;
  };
  struct HeapEntry {
    double t;
    std::uint32_t id;
  };
  struct Pair {
    int a;
    int b;
    int mismatch;
    double first = -1.0;
  };

  std::uint32_t relevant_site(const Chain& c, int x) const noexcept;
  void refresh_column(Chain& c, int x);
  void acquire(std::uint32_t id);
  void release(std::uint32_t id);
  void push(std::uint32_t id);
  void process(const HeapEntry& top);

  SiteLattice lattice_;
  ClockRealization clocks_;
  std::vector<Chain> chains_;
  std::vector<SiteState> sites_;
  std::vector<HeapEntry> heap_;
  std::vector<Pair> pairs_;
  EngineObserver* observer_ = nullptr;
  std::vector<std::vector<int>> chain_pairs_;
  int apart_ = 0;
  double now_ = 0.0;
  std::uint64_t rings_ = 0;
};

// Records accepted flips; used for trajectory comparison and event logs.
class FlipRecorder : public EngineObserver {
 public:
  void on_flip(double t, int chain, int x, int /*old_h*/, int new_h) override { flips.push_back({t, chain, x, new_h}); }
  std::vector<FlipRecord> flips;
};

// Checks designated (lower, upper) chain pairs after every ring.
class OrderMonitor : public EngineObserver {
 public:
  OrderMonitor(const CoupledChains& engine, std::vector<std::pair<int, int>> pairs);
  void on_ring_end(double t, int x, bool any_flip) override;
  std::uint64_t violations() const noexcept { return violations_; }
  std::uint64_t checks() const noexcept { return checks_; }
  std::optional<double> first_violation() const noexcept { return first_; }
  // Full sweep over all columns, for use at arbitrary times.
  bool holds_everywhere() const;

 private:
  const CoupledChains& engine_;
  std::vector<std::pair<int, int>> pairs_;
  std::uint64_t violations_ = 0;
  std::uint64_t checks_ = 0;
  std::optional<double> first_;
};

// Fan-out to several observers.
class ObserverList : public EngineObserver {
 public:
  void add(EngineObserver* o) { list_.push_back(o); }
  void on_ring(double t, const ClockSite& s, int c, bool a) override {
    for (auto* o : list_) o->on_ring(t, s, c, a);
  }
  void on_flip(double t, int c, int x, int o_, int n) override {
    for (auto* o : list_) o->on_flip(t, c, x, o_, n);
  }
  void on_ring_end(double t, int x, bool f) override {
    for (auto* o : list_) o->on_ring_end(t, x, f);
  }

 private:
  std::vector<EngineObserver*> list_;
};

struct Snapshot {
  double t;
  Path path;
};

struct Trajectory {
  std::vector<FlipRecord> flips;
  std::vector<Snapshot> snapshots;
  Path final_path = Path::trusted({0, 1, 0});
};

// Single chain from `initial` to `horizon`. Snapshots at each grid time
// (grid must be sorted, entries beyond the horizon are ignored).
Trajectory simulate(const Path& initial, const ModelParams& params, double horizon, const ClockRealization& clocks,
                    const CensoringSchedule& schedule = {}, std::span<const double> snapshot_grid = {},
                    EngineObserver* observer = nullptr);

struct CouplingStart {
  Path path;
  double lambda;
};

struct GrandCouplingResult {
  std::vector<Path> finals;
  // first coalescence time of every pair (i, j), i < j, row-major; nullopt if never
  std::vector<std::optional<double>> pair_coalescence;
  // order violations seen at any ring among pairs the coupling must order
  std::uint64_t order_violations = 0;
  std::uint64_t order_checks = 0;

  std::optional<double> coalescence(int i, int j, int n) const;
};

// All chains share one clock realization. Pairs that the coupling must keep
// ordered (xi <= xi' with equal lambda; equal start with lambda <= lambda')
// are checked after every ring.
GrandCouplingResult grand_coupling(const std::vector<CouplingStart>& starts, double horizon, std::uint64_t master_seed,
                                   const CensoringSchedule& schedule = {});

struct CoalescenceTimes {
  double tau = 0.0;   // wedge vs vee
  double tau1 = 0.0;  // wedge vs equilibrium start
  double tau2 = 0.0;  // vee vs equilibrium start
  bool tau_censored = false;
  bool tau1_censored = false;
  bool tau2_censored = false;
};

// Runs {wedge, vee, mu-start} on one realization; censored flags mark
// pairs still apart at the horizon (their time is then the horizon).
// The equilibrium start is drawn from RngStream(master_seed, kEquilibriumStartStream).
inline constexpr std::uint64_t kEquilibriumStartStream = 1;

CoalescenceTimes coalescence_time(std::uint64_t master_seed, const ModelParams& params, double horizon);
CoalescenceTimes coalescence_time(std::uint64_t master_seed, const EquilibriumSampler& sampler, double horizon);
// Same run, also handing the wedge chain to `probe` at each sorted probe
// time not beyond the horizon (the run continues past coalescence until the
// last probe time).
CoalescenceTimes coalescence_time(std::uint64_t master_seed, const EquilibriumSampler& sampler, double horizon,
                                  std::span<const double> probe_times,
                                  const std::function<void(std::size_t, std::span<const int>)>& probe);

// Column heat-bath chain: each column rings at rate 1 and redraws its height
// from the conditional law given its neighbours. The generator equals the
// corner-flip generator, so laws at fixed times agree; it is not the
// plaquette coupling and draws fresh randomness from `rng`. Cost is O(1)
// per ring with no scheduling, for experiments that only need marginals.
void heat_bath_run(std::vector<int>& heights, double lambda, bool wall, double duration, RngStream& rng);

}  // namespace pinmix
