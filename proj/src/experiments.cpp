#include "pinmix/experiments.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pinmix {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double mixing_scale(int L) {
  return static_cast<double>(L) * L * std::log(static_cast<double>(L)) / (std::numbers::pi * std::numbers::pi);
}

double t_delta(int L, double delta) { return (1.0 + delta) * mixing_scale(L); }

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) { throw std::invalid_argument(field + ": " + why); };
  if (L.empty()) fail("L", "needs at least one value");
  for (int l : L)
    if (l < 2 || l % 2 != 0) fail("L", "L must be even and >= 2 (got " + std::to_string(l) + ")");
  if (lambda.empty()) fail("lambda", "needs at least one value");
  for (double v : lambda)
    if (!(v >= 0.0) || !std::isfinite(v)) fail("lambda", "must be finite and >= 0");
  if (replicas < 1) fail("replicas", "must be >= 1");
  if (!(horizon > 0.0)) fail("horizon", "must be > 0");
  if (!std::is_sorted(grid.begin(), grid.end())) fail("grid", "must be sorted");
  for (double g : grid)
    if (!(g >= 0.0)) fail("grid", "times must be >= 0");
  if (!(lower_until >= 0.0)) fail("lower_until", "must be >= 0");
  if (!std::is_sorted(epsilon.begin(), epsilon.end())) fail("epsilon", "must be sorted");
  for (double e : epsilon)
    if (!(e > 0.0 && e < 1.0)) fail("epsilon", "values must lie in (0, 1)");
  if (!(delta > 0.0)) fail("delta", "must be > 0");
  if (M < 1) fail("M", "must be >= 1");
  if (!(s0_factor > 0.0)) fail("s0_factor", "must be > 0");
  if (beta != 0.0) {
    if (!(beta > 2.0 * std::numbers::pi / 3.0 && beta < std::numbers::pi)) fail("beta", "must lie in (2pi/3, pi)");
  }
  if (eta < 0.0) fail("eta", "must be >= 0");
  if (eq_samples < 0) fail("eq_samples", "must be >= 0");
  if (bootstrap < 0) fail("bootstrap", "must be >= 0");
  if (threads < 0) fail("threads", "must be >= 0");
}

std::vector<double> ExperimentConfig::grid_for(int L) const {
  std::vector<double> g;
  if (grid.empty()) {
    for (int i = 0; i <= 40; ++i) g.push_back(0.05 * i * scale(L));
  } else {
    for (double v : grid) g.push_back(v * scale(L));
  }
  const double h = horizon_for(L);
  g.erase(std::remove_if(g.begin(), g.end(), [h](double t) { return t > h; }), g.end());
  return g;
}

std::vector<double> ExperimentConfig::lower_grid_for(int L) const {
  auto g = grid_for(L);
  const double limit = lower_until * scale(L);
  g.erase(std::remove_if(g.begin(), g.end(), [limit](double t) { return t > limit; }), g.end());
  return g;
}

bool ExperimentConfig::outside_repulsive_phase() const {
  return std::any_of(lambda.begin(), lambda.end(), [](double v) { return v >= 2.0; });
}

double simultaneous_z(std::size_t k) {
  const boost::math::normal n;
  return boost::math::quantile(boost::math::complement(n, 0.025 / static_cast<double>(std::max<std::size_t>(k, 1))));
}

Interval wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::clamp(center - half, 0.0, p), std::clamp(center + half, p, 1.0)};
}

Interval newcombe_interval(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2, double z) {
  const double p1 = n1 ? static_cast<double>(k1) / static_cast<double>(n1) : 0.0;
  const double p2 = n2 ? static_cast<double>(k2) / static_cast<double>(n2) : 0.0;
  const Interval a = wilson_interval(k1, n1, z);
  const Interval b = wilson_interval(k2, n2, z);
  const double d = p1 - p2;
  return {d - std::hypot(p1 - a.lo, b.hi - p2), d + std::hypot(a.hi - p1, p2 - b.lo)};
}

std::size_t TauSamples::censored() const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const CoalescenceTimes& c) { return c.tau_censored; }));
}

double TauSamples::fraction_within(double t) const {
  if (samples.empty()) return kNaN;
  const auto k = std::count_if(samples.begin(), samples.end(),
                               [t](const CoalescenceTimes& c) { return !c.tau_censored && c.tau <= t; });
  return static_cast<double>(k) / static_cast<double>(samples.size());
}

double TauSamples::quantile(double p) const {
  if (samples.empty()) return kNaN;
  std::vector<double> v;
  for (const auto& c : samples) v.push_back(c.tau);
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

TauSamples estimate_tau_distribution(const ExperimentConfig& cfg, int L, double lambda, Execution ex,
                                     const std::atomic<bool>* cancel) {
  struct Replica {
    CoalescenceTimes times;
    std::vector<double> phi;
  };
  const EquilibriumSampler sampler({L, lambda});
  const double horizon = cfg.horizon_for(L);
  const auto probes = cfg.lower_grid_for(L);
  const auto weights = AreaWeights::sine(L);
  auto run = [&](int r) {
    Replica out;
    out.phi.assign(probes.size(), kNaN);
    out.times = coalescence_time(replica_seed(cfg.master_seed, L, lambda, static_cast<std::uint64_t>(r)), sampler,
                                 horizon, probes,
                                 [&](std::size_t k, std::span<const int> h) { out.phi[k] = weights.area(h); });
    return out;
  };
  auto results = replica_farm<Replica>(cfg.replicas, run, ex, cancel, cfg.threads);

  TauSamples s;
  s.L = L;
  s.lambda = lambda;
  s.horizon = horizon;
  s.requested = cfg.replicas;
  for (std::size_t r = 0; r < results.size(); ++r) {
    if (!results[r]) continue;
    s.samples.push_back(results[r]->times);
    s.phi.push_back(std::move(results[r]->phi));
    s.replica_ids.push_back(static_cast<int>(r));
  }
  return s;
}

std::vector<CurvePoint> tv_upper_curve(const TauSamples& s, std::span<const double> grid, double z) {
  std::vector<CurvePoint> out;
  const std::size_t n = s.samples.size();
  for (double t : grid) {
    const auto k = static_cast<std::size_t>(std::count_if(s.samples.begin(), s.samples.end(), [t](const CoalescenceTimes& c) {
      return c.tau_censored || c.tau > t;
    }));
    out.push_back({t, n ? static_cast<double>(k) / static_cast<double>(n) : kNaN, wilson_interval(k, n, z)});
  }
  return out;
}

std::vector<double> equilibrium_phi_samples(const ModelParams& params, int count, std::uint64_t seed) {
  const EquilibriumSampler sampler(params);
  const auto weights = AreaWeights::sine(params.L);
  RngStream rng(seed, 0);
  std::vector<int> h;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    sampler.sample_into(rng, h);
    out.push_back(weights.area(h));
  }
  return out;
}

std::vector<LowerPoint> tv_lower_curve(int L, std::span<const double> grid, const std::vector<std::vector<double>>& wedge_phi,
                                       std::span<const double> equilibrium_phi, double z) {
  std::vector<double> eq_a, eq_b;
  for (std::size_t i = 0; i < equilibrium_phi.size(); ++i) (i % 2 == 0 ? eq_a : eq_b).push_back(equilibrium_phi[i]);
  const double scale = std::pow(static_cast<double>(L), 1.5);
  auto above = [](const std::vector<double>& v, double c) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [c](double x) { return x > c; }));
  };

  std::vector<LowerPoint> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> w_a, w_b;
    for (std::size_t r = 0; r < wedge_phi.size(); ++r) (r % 2 == 0 ? w_a : w_b).push_back(wedge_phi[r][g]);
    if (w_a.empty() || w_b.empty() || eq_a.empty() || eq_b.empty()) {
      out.push_back({grid[g], kNaN, {kNaN, kNaN}, kNaN});
      continue;
    }
    std::vector<double> pooled = w_a;
    pooled.insert(pooled.end(), eq_a.begin(), eq_a.end());
    std::sort(pooled.begin(), pooled.end());
    double best_c = pooled.front();
    double best = -1.0;
    double sign = 1.0;
    for (int k = 0; k < 64; ++k) {
      const auto at = static_cast<std::size_t>((k + 0.5) / 64.0 * static_cast<double>(pooled.size()));
      const double c = pooled[std::min(at, pooled.size() - 1)];
      const double diff = static_cast<double>(above(w_a, c)) / static_cast<double>(w_a.size()) -
                          static_cast<double>(above(eq_a, c)) / static_cast<double>(eq_a.size());
      if (std::abs(diff) > best) {
        best = std::abs(diff);
        best_c = c;
        sign = diff < 0.0 ? -1.0 : 1.0;
      }
    }
    const std::size_t k1 = above(w_b, best_c);
    const std::size_t k2 = above(eq_b, best_c);
    const double d = static_cast<double>(k1) / static_cast<double>(w_b.size()) -
                     static_cast<double>(k2) / static_cast<double>(eq_b.size());
    const Interval ci = newcombe_interval(k1, w_b.size(), k2, eq_b.size(), z);
    const Interval signed_ci = sign > 0 ? ci : Interval{-ci.hi, -ci.lo};
    out.push_back({grid[g], sign * d, signed_ci, best_c / scale});
  }
  return out;
}

double survival_crossing(std::vector<double> sorted_tau, double eps, double /*horizon*/, std::size_t censored_from) {
  const double n = static_cast<double>(sorted_tau.size());
  if (sorted_tau.empty()) return kNaN;
  // inf{t : #{tau > t} < eps n} is the j-th order statistic, j = floor(n - eps n) + 1
  const auto j = static_cast<std::size_t>(std::floor(n - eps * n)) + 1;
  if (j > sorted_tau.size() || j > censored_from) return kNaN;
  return sorted_tau[j - 1];
}

namespace {

// Sorted tau with censored samples last; returns the index of the first
// censored sample.
std::size_t sorted_taus(const std::vector<CoalescenceTimes>& s, const std::vector<std::size_t>& pick, std::vector<double>& out) {
  out.clear();
  std::size_t censored = 0;
  for (auto i : pick) {
    if (s[i].tau_censored)
      ++censored;
    else
      out.push_back(s[i].tau);
  }
  std::sort(out.begin(), out.end());
  const std::size_t first = out.size();
  out.insert(out.end(), censored, std::numeric_limits<double>::infinity());
  return first;
}

Interval percentile_interval(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return {kNaN, kNaN};
  std::sort(v.begin(), v.end());
  auto at = [&](double q) { return v[std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size())))]; };
  return {at(0.025), at(0.975)};
}

}  // namespace

std::vector<CutoffRow> cutoff_rows(const TauSamples& s, std::span<const LowerPoint> lower, std::span<const double> eps,
                                   int resamples, std::uint64_t seed) {
  std::vector<CutoffRow> rows;
  const double unit = mixing_scale(s.L);
  std::vector<std::size_t> all(s.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<double> sorted;
  const std::size_t first_censored = sorted_taus(s.samples, all, sorted);

  for (double e : eps) {
    CutoffRow row{s.L, s.lambda, e, kNaN, kNaN, kNaN, kNaN, {kNaN, kNaN}, {kNaN, kNaN}, {}};
    row.t_hat_upper = survival_crossing(sorted, e, s.horizon, first_censored);
    const double other = survival_crossing(sorted, 1.0 - e, s.horizon, first_censored);
    row.normalized_location = row.t_hat_upper / unit;
    row.cutoff_ratio = row.t_hat_upper / other;
    if (std::isnan(row.t_hat_upper)) row.warning = "survival curve stays above eps up to the horizon";

    for (std::size_t g = 0; g < lower.size(); ++g)
      if (lower[g].value > e) row.t_hat_lower = lower[g].t;
    if (!lower.empty() && !std::isnan(row.t_hat_lower)) {
      const auto it = std::find_if(lower.begin(), lower.end(), [&](const LowerPoint& p) { return p.t == row.t_hat_lower; });
      const auto next = it + 1;
      std::ostringstream w;
      if (next == lower.end()) {
        w << "lower curve still above eps at the last lower grid time " << row.t_hat_lower;
      } else if (next->t - row.t_hat_lower > 0.1 * std::max(row.t_hat_lower, 1e-300)) {
        w << "grid too coarse: lower crossing bracketed by [" << row.t_hat_lower << ", " << next->t << "]";
      }
      if (!w.str().empty()) row.warning += (row.warning.empty() ? "" : "; ") + w.str();
    }
    rows.push_back(row);
  }

  if (resamples > 0 && !s.samples.empty()) {
    RngStream rng(seed, 0);
    std::vector<std::vector<double>> loc(rows.size()), ratio(rows.size());
    std::vector<std::size_t> pick(s.samples.size());
    for (int b = 0; b < resamples; ++b) {
      for (auto& p : pick) p = static_cast<std::size_t>(rng.uniform_index(s.samples.size()));
      const std::size_t fc = sorted_taus(s.samples, pick, sorted);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double t = survival_crossing(sorted, rows[i].eps, s.horizon, fc);
        const double o = survival_crossing(sorted, 1.0 - rows[i].eps, s.horizon, fc);
        loc[i].push_back(t / unit);
        ratio[i].push_back(t / o);
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].location_ci = percentile_interval(loc[i]);
      rows[i].ratio_ci = percentile_interval(ratio[i]);
    }
  }
  return rows;
}

MixingRun run_mixing(const ExperimentConfig& cfg, Execution ex, const std::atomic<bool>* cancel) {
  cfg.validate();
  MixingRun run;
  for (int L : cfg.L) {
    for (double lambda : cfg.lambda) {
      if (cancel && cancel->load()) {
        run.complete = false;
        return run;
      }
      MixingResult cell;
      cell.tau = estimate_tau_distribution(cfg, L, lambda, ex, cancel);
      if (!cell.tau.complete()) run.complete = false;
      cell.upper = tv_upper_curve(cell.tau, cfg.grid_for(L));
      const auto eq = equilibrium_phi_samples({L, lambda}, cfg.equilibrium_samples(),
                                              aux_seed(cfg.master_seed, L, lambda, AuxStream::equilibrium));
      cell.lower = tv_lower_curve(L, cfg.lower_grid_for(L), cell.tau.phi, eq);
      cell.cutoff = cutoff_rows(cell.tau, cell.lower, cfg.epsilon, cfg.bootstrap,
                                aux_seed(cfg.master_seed, L, lambda, AuxStream::bootstrap));
      if (cell.tau.censored() > 0)
        cell.warnings.push_back(std::to_string(cell.tau.censored()) + " replicas did not coalesce before the horizon");
      for (const auto& r : cell.cutoff)
        if (!r.warning.empty()) {
          std::ostringstream w;
          w << "eps=" << r.eps << ": " << r.warning;
          cell.warnings.push_back(w.str());
        }
      run.cells.push_back(std::move(cell));
    }
  }
  return run;
}

namespace {

void prepare(std::ostream& out) { out << std::setprecision(17); }

}  // namespace

void write_tau_samples_csv(std::ostream& out, const MixingRun& run) {
  prepare(out);
  out << "L,lambda,replica,tau,tau1,tau2,censored_flag,tau1_censored,tau2_censored\n";
  for (const auto& c : run.cells) {
    for (std::size_t i = 0; i < c.tau.samples.size(); ++i) {
      const auto& s = c.tau.samples[i];
      out << c.tau.L << ',' << c.tau.lambda << ',' << c.tau.replica_ids[i] << ',' << s.tau << ',' << s.tau1 << ','
          << s.tau2 << ',' << s.tau_censored << ',' << s.tau1_censored << ',' << s.tau2_censored << '\n';
    }
  }
}

void write_mixing_curve_csv(std::ostream& out, const MixingRun& run) {
  prepare(out);
  out << "L,lambda,t,d_upper,d_upper_ci,d_lower,d_lower_ci,d_upper_lo,d_upper_hi,d_lower_lo,d_lower_hi,threshold_scaled\n";
  for (const auto& c : run.cells) {
    for (std::size_t g = 0; g < c.upper.size(); ++g) {
      const auto& u = c.upper[g];
      out << c.tau.L << ',' << c.tau.lambda << ',' << u.t << ',' << u.value << ',' << (u.ci.hi - u.ci.lo) / 2 << ',';
      if (g < c.lower.size()) {
        const auto& l = c.lower[g];
        out << l.value << ',' << (l.ci.hi - l.ci.lo) / 2 << ',' << u.ci.lo << ',' << u.ci.hi << ',' << l.ci.lo << ','
            << l.ci.hi << ',' << l.threshold_scaled << '\n';
      } else {
        out << "nan,nan," << u.ci.lo << ',' << u.ci.hi << ",nan,nan,nan\n";
      }
    }
  }
}

void write_cutoff_table_csv(std::ostream& out, const MixingRun& run) {
  prepare(out);
  out << "L,lambda,eps,t_hat_upper,t_hat_lower,normalized_location,cutoff_ratio,location_lo,location_hi,ratio_lo,ratio_hi\n";
  for (const auto& c : run.cells) {
    for (const auto& r : c.cutoff) {
      out << r.L << ',' << r.lambda << ',' << r.eps << ',' << r.t_hat_upper << ',' << r.t_hat_lower << ','
          << r.normalized_location << ',' << r.cutoff_ratio << ',' << r.location_ci.lo << ',' << r.location_ci.hi << ','
          << r.ratio_ci.lo << ',' << r.ratio_ci.hi << '\n';
    }
  }
}

LiftingComparison lifting_comparison(int L, int replicas, std::uint64_t seed, std::span<const double> eps,
                                     double horizon_normalized, Execution ex) {
  if (L < 4) throw std::invalid_argument("lifting comparison needs L >= 4");
  ExperimentConfig cfg;
  cfg.replicas = replicas;
  cfg.master_seed = seed;
  cfg.time_unit = TimeUnit::absolute;
  cfg.horizon = horizon_normalized * mixing_scale(L);
  cfg.grid = {0.0};
  cfg.lower_until = 0.0;
  auto rows_for = [&](int l, double lambda) {
    const auto s = estimate_tau_distribution(cfg, l, lambda, ex);
    return cutoff_rows(s, {}, eps, 1000, aux_seed(seed, l, lambda, AuxStream::bootstrap));
  };
  LiftingComparison out{rows_for(L, 0.0), rows_for(L - 2, 1.0), true};
  for (std::size_t i = 0; i < out.zero.size(); ++i) {
    const double u0 = mixing_scale(L), u1 = mixing_scale(L - 2);
    const Interval a{out.zero[i].location_ci.lo * u0, out.zero[i].location_ci.hi * u0};
    const Interval b{out.one[i].location_ci.lo * u1, out.one[i].location_ci.hi * u1};
    if (!(a.lo <= b.hi && b.lo <= a.hi)) out.agree = false;
  }
  return out;
}

namespace {

class WindowObserver : public EngineObserver {
 public:
  WindowObserver(int chain, double until) : chain_(chain), until_(until) {}
  void on_flip(double t, int chain, int /*x*/, int old_h, int new_h) override {
    if (chain != chain_ || t >= until_) return;
    ++flips;
    if (old_h == 0 || new_h == 0) ++contact_changes;
  }
  std::uint64_t flips = 0;
  std::uint64_t contact_changes = 0;

 private:
  int chain_;
  double until_;
};

}  // namespace

CensoredProtocolResult censored_wedge_protocol(int L, double lambda, double delta, int replicas, std::uint64_t seed,
                                               std::span<const double> grid, int eq_samples, Execution ex) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("grid must be sorted");
  CensoredProtocolResult res;
  res.L = L;
  res.lambda = lambda;
  res.window = t_delta(L, delta / 2.0);
  res.grid.assign(grid.begin(), grid.end());
  res.replicas = replicas;
  const auto schedule = CensoringSchedule::window(contact_changing_sites(L), res.window);
  const auto weights = AreaWeights::sine(L);
  const auto top = maximal_path(L);
  const std::vector<int> start(top.heights().begin(), top.heights().end());

  struct Replica {
    std::vector<double> plain, censored;
    std::uint64_t flips, changes;
  };
  auto run = [&](int r) {
    std::vector<ChainSpec> specs{{start, lambda, true, {}}, {start, lambda, true, schedule}};
    CoupledChains engine(SiteLattice::pinning(L), ClockRealization(replica_seed(seed, L, lambda, static_cast<std::uint64_t>(r))),
                         std::move(specs));
    WindowObserver obs(1, res.window);
    engine.set_observer(&obs);
    Replica out;
    for (double t : grid) {
      engine.advance_to(t);
      out.plain.push_back(weights.area(engine.heights(0)));
      out.censored.push_back(weights.area(engine.heights(1)));
    }
    engine.advance_to(std::max(res.window, grid.empty() ? 0.0 : grid.back()));
    out.flips = obs.flips;
    out.changes = obs.contact_changes;
    return out;
  };
  const auto results = replica_farm<Replica>(replicas, run, ex);
  std::vector<std::vector<double>> plain, censored;
  for (const auto& r : results) {
    plain.push_back(r->plain);
    censored.push_back(r->censored);
    res.window_flips += r->flips;
    res.contact_changes += r->changes;
  }
  const auto eq = equilibrium_phi_samples({L, lambda}, eq_samples > 0 ? eq_samples : 4 * replicas,
                                          aux_seed(seed, L, lambda, AuxStream::equilibrium));
  res.plain = tv_lower_curve(L, grid, plain, eq);
  res.censored = tv_lower_curve(L, grid, censored, eq);

  if (L <= 12) {
    const auto idx = StateSpaceIndex::enumerate(L);
    const SparseGenerator gen(idx, {L, lambda});
    const auto s0 = point_mass(idx, top);
    res.exact_plain = exact_tv_curve(gen, s0, grid);
    res.exact_censored = exact_tv_curve(gen, s0, grid, schedule);
    for (std::size_t g = 0; g < grid.size(); ++g)
      if (res.exact_censored->points[g].d < res.exact_plain->points[g].d - 1e-10) res.exact_inequality_ok = false;
  }
  return res;
}

VeeReport vee_boundary_contact_check(int L, double lambda, std::vector<int> M, int replicas, std::uint64_t seed,
                                     double s0_factor, Execution ex) {
  std::sort(M.begin(), M.end());
  VeeReport rep;
  rep.L = L;
  rep.lambda = lambda;
  rep.s0 = s0_factor * std::pow(static_cast<double>(L), 16.0 / 9.0) * std::log(static_cast<double>(L));
  rep.replicas = replicas;
  rep.M = M;
  const auto bottom = minimal_path(L);
  auto run = [&](int r) {
    std::vector<int> h(bottom.heights().begin(), bottom.heights().end());
    RngStream rng(replica_seed(seed, L, lambda, static_cast<std::uint64_t>(r)), 0);
    heat_bath_run(h, lambda, true, rep.s0, rng);
    return h;
  };
  const auto finals = replica_farm<std::vector<int>>(replicas, run, ex);

  std::vector<std::size_t> zeros(static_cast<std::size_t>(L) + 1, 0);
  std::vector<std::size_t> inside(M.size(), 0);
  for (const auto& f : finals) {
    const auto& h = *f;
    for (std::size_t x = 0; x < h.size(); ++x) zeros[x] += h[x] == 0;
    for (std::size_t i = 0; i < M.size(); ++i) {
      bool ok = true;
      for (int x = M[i]; x <= L - M[i]; ++x) ok = ok && h[static_cast<std::size_t>(x)] >= 1;
      inside[i] += ok;
    }
  }
  const auto n = static_cast<std::size_t>(replicas);
  for (std::size_t x = 0; x < zeros.size(); ++x) {
    rep.contact_profile.push_back(static_cast<double>(zeros[x]) / static_cast<double>(n));
    rep.profile_ci.push_back(wilson_interval(zeros[x], n));
  }
  for (std::size_t i = 0; i < M.size(); ++i) {
    rep.fraction.push_back(static_cast<double>(inside[i]) / static_cast<double>(n));
    rep.fraction_ci.push_back(wilson_interval(inside[i], n));
  }
  return rep;
}

namespace {

class BracketObserver : public EngineObserver {
 public:
  BracketObserver(const CoupledChains& engine, const AreaWeights& w, BracketDiagnostics& d) : engine_(engine), w_(w), d_(d) {}
  void on_ring_end(double t, int /*x*/, bool any_flip) override {
    if (!any_flip) return;
    const auto top = engine_.heights(0);
    const auto ref = engine_.heights(1);
    const double A = area_process(top, ref, w_);
    d_ = bracket_diagnostics_update({t, A, height_max(top), q_monotone(ref)}, std::move(d_));
  }

 private:
  const CoupledChains& engine_;
  const AreaWeights& w_;
  BracketDiagnostics& d_;
};

}  // namespace

BracketDiagnostics bracket_monitor(const ModelParams& params, double delta, double beta, double eta, std::uint64_t seed,
                                   double horizon) {
  const int L = params.L;
  const EquilibriumSampler sampler(params);
  RngStream init(seed, kEquilibriumStartStream);
  std::vector<int> mu;
  sampler.sample_into(init, mu);
  const auto top = maximal_path(L);
  std::vector<ChainSpec> specs{{{top.heights().begin(), top.heights().end()}, params.lambda, true, {}},
                               {mu, params.lambda, true, {}}};
  CoupledChains engine(SiteLattice::pinning(L), ClockRealization(seed), std::move(specs));
  const int pair = engine.track_pair(0, 1);
  const auto w = AreaWeights::cosine_beta(L, beta);
  auto d = BracketDiagnostics::start(L, params.lambda, beta, eta, t_delta(L, delta / 2.0),
                                     area_process(engine.heights(0), engine.heights(1), w));
  BracketObserver obs(engine, w, d);
  engine.set_observer(&obs);
  engine.advance_until_coalesced(horizon);
  const auto c = engine.coalescence_time(pair);
  return bracket_diagnostics_finish(c.value_or(horizon), std::move(d));
}

}  // namespace pinmix
