#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <omp.h>

#include "pinmix/dynamics.hpp"
#include "pinmix/exact.hpp"
#include "pinmix/observables.hpp"
#include "pinmix/rng.hpp"
#include "pinmix/statespace.hpp"

namespace pinmix {

// L^2 log L / pi^2, the natural time unit of the dynamics.
double mixing_scale(int L);
// t_delta = (1 + delta) L^2 log L / pi^2
double t_delta(int L, double delta);

enum class TimeUnit { normalized, absolute };

struct ExperimentConfig {
  std::vector<int> L{32};
  std::vector<double> lambda{1.0};
  int replicas = 100;
  std::uint64_t master_seed = 1;
  // horizon and grid are in units of mixing_scale(L) unless absolute
  TimeUnit time_unit = TimeUnit::normalized;
  double horizon = 4.0;  // 2 t_{delta=1}
  std::vector<double> grid;  // empty: 0, 0.05, ..., 2 (normalized)
  double lower_until = 1.0;  // lower-bound statistic only on grid points up to here
  std::vector<double> epsilon{0.25, 0.75};
  double delta = 0.5;
  int M = 16;
  double s0_factor = 10.0;
  double beta = 0.0;  // 0: default_beta(delta)
  double eta = 0.0;   // 0: default_eta(delta)
  int eq_samples = 0;  // 0: 4 * replicas
  int bootstrap = 1000;
  std::string out_dir = ".";
  int threads = 0;  // 0: OpenMP default

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  double scale(int L) const { return time_unit == TimeUnit::normalized ? mixing_scale(L) : 1.0; }
  double horizon_for(int L) const { return horizon * scale(L); }
  std::vector<double> grid_for(int L) const;
  std::vector<double> lower_grid_for(int L) const;
  int equilibrium_samples() const { return eq_samples > 0 ? eq_samples : 4 * replicas; }
  double beta_value() const { return beta > 0.0 ? beta : default_beta(delta); }
  double eta_value() const { return eta > 0.0 ? eta : default_eta(delta); }
  bool outside_repulsive_phase() const;
};

// Seed of replica r of the (L, lambda) cell; independent of scheduling.
inline std::uint64_t replica_seed(std::uint64_t master, int L, double lambda, std::uint64_t r) {
  const std::uint64_t cell = derive_seed(master, static_cast<std::uint64_t>(L) ^ std::bit_cast<std::uint64_t>(lambda));
  return derive_seed(cell, r);
}
// Seed for auxiliary randomness (equilibrium samples, bootstrap, ...) of a cell.
enum class AuxStream : std::uint64_t { equilibrium = 0x65710000, bootstrap = 0x62737400, split = 0x73706c00 };
inline std::uint64_t aux_seed(std::uint64_t master, int L, double lambda, AuxStream s) {
  return replica_seed(master, L, lambda, static_cast<std::uint64_t>(s) << 32);
}

enum class Execution { serial, parallel };

// Runs fn(r) for r in [0, n). Results land in slot r, so the output does not
// depend on thread count or scheduling. A set cancel flag stops new replicas
// from starting; their slots stay empty.
template <class R, class Fn>
std::vector<std::optional<R>> replica_farm(int n, Fn&& fn, Execution ex = Execution::parallel,
                                           const std::atomic<bool>* cancel = nullptr, int threads = 0) {
  std::vector<std::optional<R>> out(static_cast<std::size_t>(n));
  if (ex == Execution::serial) {
    for (int r = 0; r < n; ++r) {
      if (cancel && cancel->load()) break;
      out[static_cast<std::size_t>(r)] = fn(r);
    }
    return out;
  }
  const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (int r = 0; r < n; ++r) {
    if (cancel && cancel->load()) continue;
    out[static_cast<std::size_t>(r)] = fn(r);
  }
  return out;
}

// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;
// Normal quantile for simultaneous 95% coverage of k intervals (Bonferroni).
double simultaneous_z(std::size_t k);

struct Interval {
  double lo;
  double hi;
};

// 95% Wilson score interval for k successes out of n.
Interval wilson_interval(std::size_t k, std::size_t n, double z = kZ95);
// Newcombe's hybrid score interval for p1 - p2 from independent samples.
Interval newcombe_interval(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2,
                           double z = kZ95);

struct TauSamples {
  int L = 0;
  double lambda = 1.0;
  double horizon = 0.0;
  std::vector<CoalescenceTimes> samples;  // completed replicas, in replica order
  std::vector<int> replica_ids;
  std::vector<std::vector<double>> phi;  // Phi of the wedge chain at the lower grid, per replica
  int requested = 0;

  std::size_t censored() const;
  bool complete() const { return static_cast<int>(samples.size()) == requested; }
  // Fraction of replicas with tau <= t (censored ones count as > t).
  double fraction_within(double t) const;
  // Empirical quantile of tau (censored values sit at the horizon).
  double quantile(double p) const;
};

// Grand-coupling replica farm for one (L, lambda). Records Phi(wedge) at the
// lower grid when given.
TauSamples estimate_tau_distribution(const ExperimentConfig& cfg, int L, double lambda, Execution ex = Execution::parallel,
                                     const std::atomic<bool>* cancel = nullptr);

struct CurvePoint {
  double t;
  double value;
  Interval ci;
};

// d_upper(t) = P-hat[tau > t] with Wilson bands.
std::vector<CurvePoint> tv_upper_curve(const TauSamples& s, std::span<const double> grid, double z = kZ95);

struct LowerPoint {
  double t;
  double value;
  Interval ci;
  double threshold_scaled;  // c / L^{3/2}
};

// Phi of exact equilibrium draws for the lower-bound statistic.
std::vector<double> equilibrium_phi_samples(const ModelParams& params, int count, std::uint64_t seed);

// Distinguishing statistic |P-hat(Phi(wedge_t) > c) - mu-hat(Phi > c)|. The
// threshold c is chosen on the even-indexed half of both samples (among 64
// quantiles of the pooled half) and the statistic is evaluated on the odd
// half, so the estimate is not biased upward by the optimisation.
std::vector<LowerPoint> tv_lower_curve(int L, std::span<const double> grid, const std::vector<std::vector<double>>& wedge_phi,
                                       std::span<const double> equilibrium_phi, double z = kZ95);

struct CutoffRow {
  int L;
  double lambda;
  double eps;
  double t_hat_upper;  // nan when the survival curve never drops below eps
  double t_hat_lower;  // nan when d_lower never exceeds eps on the grid
  double normalized_location;
  double cutoff_ratio;  // t_hat(eps) / t_hat(1 - eps), upper version
  Interval location_ci;
  Interval ratio_ci;
  std::string warning;
};

// t_hat_upper(eps) = inf{t : P-hat[tau > t] < eps}, read off the sorted
// samples; bootstrap percentile intervals from `resamples` resamples.
double survival_crossing(std::vector<double> sorted_tau, double eps, double horizon, std::size_t censored_from);
std::vector<CutoffRow> cutoff_rows(const TauSamples& s, std::span<const LowerPoint> lower, std::span<const double> eps,
                                   int resamples, std::uint64_t seed);

struct MixingResult {
  TauSamples tau;
  std::vector<CurvePoint> upper;
  std::vector<LowerPoint> lower;  // on the lower grid
  std::vector<CutoffRow> cutoff;
  std::vector<std::string> warnings;
};

struct MixingRun {
  std::vector<MixingResult> cells;  // (L, lambda) in config order
  bool complete = true;
};

MixingRun run_mixing(const ExperimentConfig& cfg, Execution ex = Execution::parallel,
                     const std::atomic<bool>* cancel = nullptr);

void write_tau_samples_csv(std::ostream& out, const MixingRun& run);
void write_mixing_curve_csv(std::ostream& out, const MixingRun& run);
void write_cutoff_table_csv(std::ostream& out, const MixingRun& run);

// lambda = 0 at L against lambda = 1 at L - 2 (the contact-free chain is the
// lifted lambda = 1 chain); agreement when the bootstrap intervals of
// t_hat(eps) overlap for every eps.
struct LiftingComparison {
  std::vector<CutoffRow> zero;  // lambda = 0, L
  std::vector<CutoffRow> one;   // lambda = 1, L - 2
  bool agree;
};
LiftingComparison lifting_comparison(int L, int replicas, std::uint64_t seed, std::span<const double> eps,
                                     double horizon_normalized = 4.0, Execution ex = Execution::parallel);

// Coupled uncensored and G_L-censored wedge chains, censoring on
// [0, t_{delta/2}).
struct CensoredProtocolResult {
  int L;
  double lambda;
  double window;
  std::vector<double> grid;
  std::vector<LowerPoint> plain;
  std::vector<LowerPoint> censored;
  std::optional<TvCurve> exact_plain;     // L <= 12
  std::optional<TvCurve> exact_censored;  // L <= 12
  bool exact_inequality_ok = true;        // censored >= plain - 1e-10 on the grid
  std::uint64_t window_flips = 0;         // flips of the censored chain inside the window
  std::uint64_t contact_changes = 0;      // of which changed N; must be 0
  int replicas = 0;
};
CensoredProtocolResult censored_wedge_protocol(int L, double lambda, double delta, int replicas, std::uint64_t seed,
                                               std::span<const double> grid, int eq_samples = 0,
                                               Execution ex = Execution::parallel);

// Vee chains run to s0 = factor L^{16/9} log L (heat-bath kernel).
struct VeeReport {
  int L;
  double lambda;
  double s0;
  int replicas;
  std::vector<int> M;
  std::vector<double> fraction;  // of replicas in E_{L,M}
  std::vector<Interval> fraction_ci;
  std::vector<double> contact_profile;  // x -> P-hat[xi_x = 0], x = 0..L
  std::vector<Interval> profile_ci;
};
VeeReport vee_boundary_contact_check(int L, double lambda, std::vector<int> M, int replicas, std::uint64_t seed,
                                     double s0_factor = 10.0, Execution ex = Execution::parallel);

// Runs the wedge chain against an equilibrium-started chain and feeds every
// change of A into BracketDiagnostics (thresholds searched from t_{delta/2}).
BracketDiagnostics bracket_monitor(const ModelParams& params, double delta, double beta, double eta, std::uint64_t seed,
                                   double horizon);

}  // namespace pinmix
