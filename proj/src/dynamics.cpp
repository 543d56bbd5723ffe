#include "pinmix/dynamics.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace pinmix {

Path flip(const Path& path, int x) {
  const int L = path.length();
  if (x < 1 || x > L - 1) return path;
  const int a = path[x - 1];
  const int b = path[x + 1];
  if (a != b) return path;
  const int flipped = 2 * a - path[x];
  if (flipped < 0) return path;  // both neighbours on the wall
  std::vector<int> h(path.heights().begin(), path.heights().end());
  h[static_cast<std::size_t>(x)] = flipped;
  return Path::trusted(std::move(h));
}

double rate(const Path& path, int x, const ModelParams& params) {
  const int L = path.length();
  if (x < 1 || x > L - 1) return 0.0;
  const int a = path[x - 1];
  if (a != path[x + 1] || a == 0) return 0.0;
  if (a == 1) {
    const double lam = params.lambda;
    return path[x] == 2 ? lam / (1.0 + lam) : 1.0 / (1.0 + lam);
  }
  return 0.5;
}

void CensoringSchedule::add_interval(double start, std::vector<std::pair<int, int>> sites) {
  if (breakpoints_.empty()) {
    if (start != 0.0) {
      breakpoints_.push_back(0.0);
      sets_.emplace_back();
    }
  } else if (!(start > breakpoints_.back())) {
    throw std::invalid_argument("censoring breakpoints must increase");
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  breakpoints_.push_back(start);
  sets_.push_back(std::move(sites));
}

CensoringSchedule CensoringSchedule::window(std::vector<std::pair<int, int>> sites, double until) {
  CensoringSchedule s;
  if (until <= 0.0) return s;
  s.add_interval(0.0, std::move(sites));
  s.add_interval(until, {});
  return s;
}

std::span<const std::pair<int, int>> CensoringSchedule::censored_at(double t) const noexcept {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return {};
  return sets_[static_cast<std::size_t>(it - breakpoints_.begin() - 1)];
}

bool CensoringSchedule::censored(double t, int x, int z) const noexcept {
  if (breakpoints_.empty()) return false;
  const auto set = censored_at(t);
  return std::binary_search(set.begin(), set.end(), std::pair{x, z});
}

std::vector<std::pair<int, int>> contact_changing_sites(int L) {
  require_valid_length(L);
  std::vector<std::pair<int, int>> out;
  for (int x = 2; x <= L - 2; x += 2) out.emplace_back(x, 1);
  return out;
}

ChainState apply_clock_event(const ChainState& state, const ClockSite& site, double coin) {
  const Path& p = state.path;
  const int x = site.x;
  const int z = site.z;
  if (x < 1 || x > p.length() - 1 || z < 1) return state;
  if (p[x - 1] != z || p[x + 1] != z) return state;
  const int need = site.dir == Direction::up ? z - 1 : z + 1;
  if (p[x] != need) return state;
  if (!(coin < coin_threshold(site.dir, z, true, state.params.lambda))) return state;
  return {flip(p, x), state.time, state.params};
}

// ---------------------------------------------------------------------------

CoupledChains::CoupledChains(SiteLattice lattice, ClockRealization clocks, std::vector<ChainSpec> chains)
    : lattice_(lattice), clocks_(clocks), sites_(lattice.id_space()) {
  const int L = lattice_.L();
  chains_.reserve(chains.size());
  for (auto& spec : chains) {
    if (static_cast<int>(spec.initial.size()) != L + 1) throw std::invalid_argument("chain length differs from lattice L");
    if (spec.initial.front() != lattice_.base() || spec.initial.back() != lattice_.base())
      throw std::invalid_argument("chain endpoints differ from lattice base height");
    Chain c{std::move(spec.initial), std::vector<std::uint32_t>(static_cast<std::size_t>(L) + 1, kNone), spec.lambda,
            spec.wall, std::move(spec.schedule)};
    chains_.push_back(std::move(c));
  }
  chain_pairs_.resize(chains_.size());
  for (auto& c : chains_) {
    for (int x = 1; x < L; ++x) refresh_column(c, x);
  }
}

std::uint32_t CoupledChains::relevant_site(const Chain& c, int x) const noexcept {
  const auto ux = static_cast<std::size_t>(x);
  const int z = c.h[ux - 1];
  if (z != c.h[ux + 1]) return kNone;
  if (c.wall && z < 1) return kNone;
  if (!lattice_.contains(x, z)) return kNone;
  return lattice_.id(x, z, c.h[ux] < z ? Direction::up : Direction::down);
}

void CoupledChains::refresh_column(Chain& c, int x) {
  if (x < 1 || x >= lattice_.L()) return;
  auto& slot = c.relevant[static_cast<std::size_t>(x)];
  const std::uint32_t now_site = relevant_site(c, x);
  if (now_site == slot) return;
  if (slot != kNone) release(slot);
  slot = now_site;
  if (slot != kNone) acquire(slot);
}

void CoupledChains::acquire(std::uint32_t id) {
  SiteState& s = sites_[id];
  if (s.refs++ == 0 && !s.in_heap) {
    s.cursor = clocks_.first_after(lattice_.site(id), now_, s.cursor);
    push(id);
  }
}

void CoupledChains::release(std::uint32_t id) { --sites_[id].refs; }

namespace {
// Min-heap order on (time, site id); id order is (x, z, dir) lexicographic.
struct Later {
  template <class E>
  bool operator()(const E& a, const E& b) const noexcept {
    return a.t > b.t || (a.t == b.t && a.id > b.id);
  }
};
}  // namespace

void CoupledChains::push(std::uint32_t id) {
  SiteState& s = sites_[id];
  s.in_heap = true;
  heap_.push_back({s.cursor.time, id});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

int CoupledChains::track_pair(int a, int b) {
  const int n = chain_count();
  if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("track_pair: chain index");
  const auto& ha = chains_[static_cast<std::size_t>(a)].h;
  const auto& hb = chains_[static_cast<std::size_t>(b)].h;
  int mismatch = 0;
  for (std::size_t x = 0; x < ha.size(); ++x) mismatch += ha[x] != hb[x];
  const int handle = static_cast<int>(pairs_.size());
  pairs_.push_back({a, b, mismatch, mismatch == 0 ? now_ : -1.0});
  if (mismatch != 0) ++apart_;
  chain_pairs_[static_cast<std::size_t>(a)].push_back(handle);
  if (b != a) chain_pairs_[static_cast<std::size_t>(b)].push_back(handle);
  return handle;
}

std::optional<double> CoupledChains::coalescence_time(int pair) const noexcept {
  const double t = pairs_[static_cast<std::size_t>(pair)].first;
  if (t < 0.0) return std::nullopt;
  return t;
}

void CoupledChains::process(const HeapEntry& top) {
  const ClockSite site = lattice_.site(top.id);
  const double coin = sites_[top.id].cursor.coin;
  const int x = site.x;
  const auto ux = static_cast<std::size_t>(x);
  bool any_flip = false;
  for (std::size_t ci = 0; ci < chains_.size(); ++ci) {
    Chain& c = chains_[ci];
    if (c.relevant[ux] != top.id) continue;
    bool accepted = coin < coin_threshold(site.dir, site.z, c.wall, c.lambda);
    if (accepted && !c.schedule.empty() && c.schedule.censored(top.t, x, site.z)) accepted = false;
    if (observer_) observer_->on_ring(top.t, site, static_cast<int>(ci), accepted);
    if (!accepted) continue;
    const int old_h = c.h[ux];
    const int new_h = 2 * site.z - old_h;
    c.h[ux] = new_h;
    any_flip = true;
    for (int handle : chain_pairs_[ci]) {
      Pair& p = pairs_[static_cast<std::size_t>(handle)];
      const int other = p.a == static_cast<int>(ci) ? p.b : p.a;
      const int oh = chains_[static_cast<std::size_t>(other)].h[ux];
      const int before = p.mismatch;
      p.mismatch += (new_h != oh) - (old_h != oh);
      if (before == 0 && p.mismatch != 0) {
        ++apart_;
      } else if (before != 0 && p.mismatch == 0) {
        --apart_;
        if (p.first < 0.0) p.first = top.t;
      }
    }
    refresh_column(c, x - 1);
    refresh_column(c, x);
    refresh_column(c, x + 1);
    if (observer_) observer_->on_flip(top.t, static_cast<int>(ci), x, old_h, new_h);
  }
  if (observer_) observer_->on_ring_end(top.t, x, any_flip);
}

bool CoupledChains::step(double limit) {
  while (!heap_.empty()) {
    const HeapEntry top = heap_.front();
    SiteState& s = sites_[top.id];
    if (s.refs == 0) {
      std::pop_heap(heap_.begin(), heap_.end(), Later{});
      heap_.pop_back();
      s.in_heap = false;
      continue;
    }
    if (top.t > limit) break;
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    heap_.pop_back();
    s.in_heap = false;
    now_ = top.t;
    ++rings_;
    process(top);
    SiteState& after = sites_[top.id];
    if (after.refs > 0 && !after.in_heap) {
      after.cursor = clocks_.next(lattice_.site(top.id), after.cursor);
      push(top.id);
    }
    return true;
  }
  now_ = std::max(now_, limit);
  return false;
}

void CoupledChains::advance_to(double t) {
  while (step(t)) {
  }
}

void CoupledChains::advance_until_coalesced(double t) {
  while (apart_ != 0 && step(t)) {
  }
}

// ---------------------------------------------------------------------------

OrderMonitor::OrderMonitor(const CoupledChains& engine, std::vector<std::pair<int, int>> pairs)
    : engine_(engine), pairs_(std::move(pairs)) {}

void OrderMonitor::on_ring_end(double t, int x, bool any_flip) {
  ++checks_;
  if (!any_flip) return;
  for (const auto& [lo, hi] : pairs_) {
    if (engine_.heights(lo)[static_cast<std::size_t>(x)] > engine_.heights(hi)[static_cast<std::size_t>(x)]) {
      ++violations_;
      if (!first_) first_ = t;
    }
  }
}

bool OrderMonitor::holds_everywhere() const {
  return std::ranges::all_of(pairs_, [&](const auto& pr) { return leq(engine_.heights(pr.first), engine_.heights(pr.second)); });
}

// ---------------------------------------------------------------------------

Trajectory simulate(const Path& initial, const ModelParams& params, double horizon, const ClockRealization& clocks,
                    const CensoringSchedule& schedule, std::span<const double> snapshot_grid, EngineObserver* observer) {
  if (initial.length() != params.L) throw std::invalid_argument("simulate: path length differs from L");
  if (horizon < 0.0) throw std::invalid_argument("simulate: horizon must be >= 0");
  std::vector<ChainSpec> specs;
  specs.push_back({std::vector<int>(initial.heights().begin(), initial.heights().end()), params.lambda, true, schedule});
  CoupledChains engine(SiteLattice::pinning(params.L), clocks, std::move(specs));
  FlipRecorder recorder;
  ObserverList list;
  list.add(&recorder);
  if (observer) list.add(observer);
  engine.set_observer(&list);

  Trajectory out;
  for (double g : snapshot_grid) {
    if (g > horizon) break;
    engine.advance_to(g);
    const auto h = engine.heights(0);
    out.snapshots.push_back({g, Path::trusted({h.begin(), h.end()})});
  }
  engine.advance_to(horizon);
  const auto h = engine.heights(0);
  out.final_path = Path::trusted({h.begin(), h.end()});
  out.flips = std::move(recorder.flips);
  return out;
}

std::optional<double> GrandCouplingResult::coalescence(int i, int j, int n) const {
  if (i > j) std::swap(i, j);
  if (i == j) return 0.0;
  // row-major over i < j
  const int index = i * n - i * (i + 1) / 2 + (j - i - 1);
  return pair_coalescence[static_cast<std::size_t>(index)];
}

GrandCouplingResult grand_coupling(const std::vector<CouplingStart>& starts, double horizon, std::uint64_t master_seed,
                                   const CensoringSchedule& schedule) {
  if (starts.empty()) return {};
  const int L = starts.front().path.length();
  for (const auto& s : starts) {
    if (s.path.length() != L) throw std::invalid_argument("grand_coupling: initial paths have mixed L");
  }
  std::vector<ChainSpec> specs;
  for (const auto& s : starts) specs.push_back({{s.path.heights().begin(), s.path.heights().end()}, s.lambda, true, schedule});
  CoupledChains engine(SiteLattice::pinning(L), ClockRealization(master_seed), std::move(specs));

  const int n = static_cast<int>(starts.size());
  std::vector<std::pair<int, int>> ordered;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& a = starts[static_cast<std::size_t>(i)];
      const auto& b = starts[static_cast<std::size_t>(j)];
      if (a.lambda == b.lambda && a.path != b.path && leq(a.path, b.path)) ordered.emplace_back(i, j);
      // larger pinning pulls the path down
      if (a.path == b.path && a.lambda > b.lambda) ordered.emplace_back(i, j);
    }
  }
  OrderMonitor monitor(engine, ordered);
  engine.set_observer(&monitor);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) engine.track_pair(i, j);
  }
  engine.advance_to(horizon);

  GrandCouplingResult out;
  for (int i = 0; i < n; ++i) {
    const auto h = engine.heights(i);
    out.finals.push_back(Path::trusted({h.begin(), h.end()}));
  }
  const int pairs = n * (n - 1) / 2;
  for (int p = 0; p < pairs; ++p) out.pair_coalescence.push_back(engine.coalescence_time(p));
  out.order_violations = monitor.violations();
  out.order_checks = monitor.checks();
  return out;
}

CoalescenceTimes coalescence_time(std::uint64_t master_seed, const ModelParams& params, double horizon) {
  return coalescence_time(master_seed, EquilibriumSampler(params), horizon);
}

CoalescenceTimes coalescence_time(std::uint64_t master_seed, const EquilibriumSampler& sampler, double horizon) {
  return coalescence_time(master_seed, sampler, horizon, {}, {});
}

CoalescenceTimes coalescence_time(std::uint64_t master_seed, const EquilibriumSampler& sampler, double horizon,
                                  std::span<const double> probe_times,
                                  const std::function<void(std::size_t, std::span<const int>)>& probe) {
  const ModelParams& params = sampler.params();
  const int L = params.L;
  RngStream init(master_seed, kEquilibriumStartStream);
  std::vector<int> mu;
  sampler.sample_into(init, mu);
  const auto top = maximal_path(L);
  const auto bottom = minimal_path(L);
  if (L == 2) {
    for (std::size_t k = 0; k < probe_times.size() && probe_times[k] <= horizon; ++k) probe(k, top.heights());
    return {};
  }
  std::vector<ChainSpec> specs;
  specs.push_back({{top.heights().begin(), top.heights().end()}, params.lambda, true, {}});
  specs.push_back({{bottom.heights().begin(), bottom.heights().end()}, params.lambda, true, {}});
  specs.push_back({std::move(mu), params.lambda, true, {}});
  CoupledChains engine(SiteLattice::pinning(L), ClockRealization(master_seed), std::move(specs));
  const int p_tau = engine.track_pair(0, 1);
  const int p_tau1 = engine.track_pair(0, 2);
  const int p_tau2 = engine.track_pair(1, 2);
  for (std::size_t k = 0; k < probe_times.size() && probe_times[k] <= horizon; ++k) {
    engine.advance_to(probe_times[k]);
    probe(k, engine.heights(0));
  }
  engine.advance_until_coalesced(horizon);

  CoalescenceTimes out;
  auto read = [&](int pair, double& t, bool& censored) {
    const auto c = engine.coalescence_time(pair);
    censored = !c.has_value();
    t = c.value_or(horizon);
  };
  read(p_tau, out.tau, out.tau_censored);
  read(p_tau1, out.tau1, out.tau1_censored);
  read(p_tau2, out.tau2, out.tau2_censored);
  return out;
}

void heat_bath_run(std::vector<int>& h, double lambda, bool wall, double duration, RngStream& rng) {
  const int L = static_cast<int>(h.size()) - 1;
  if (L < 2 || duration <= 0.0) return;
  const double up_at_one = 1.0 / (1.0 + lambda);
  std::poisson_distribution<std::int64_t> rings(static_cast<double>(L - 1) * duration);
  const std::int64_t n = rings(rng);
  const auto columns = static_cast<std::uint64_t>(L - 1);
  for (std::int64_t k = 0; k < n; ++k) {
    const auto x = static_cast<std::size_t>(1 + rng.uniform_index(columns));
    const double u = rng.uniform();
    const int z = h[x - 1];
    if (z != h[x + 1]) continue;
    if (wall && z == 0) continue;
    const double p_up = wall && z == 1 ? up_at_one : 0.5;
    h[x] = u < p_up ? z + 1 : z - 1;
  }
}

}  // namespace pinmix
