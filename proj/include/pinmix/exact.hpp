#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pinmix/dynamics.hpp"
#include "pinmix/path.hpp"
#include "pinmix/statespace.hpp"

namespace pinmix {

// Raised when an exact computation would exceed the enumeration cap.
class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(const std::string& what, double bytes) : std::runtime_error(what), bytes_(bytes) {}
  double estimated_bytes() const noexcept { return bytes_; }

 private:
  double bytes_;
};

// Omega_L as explicit data. States are in canonical order: lexicographic in
// the step sequence with up before down. The code of a state packs its steps
// most significant first (up = 0, down = 1), so canonical order is numeric
// order of codes and lookup is a binary search.
class StateSpaceIndex {
 public:
  static constexpr int kDefaultCap = 24;

  static StateSpaceIndex enumerate(int L, int cap = kDefaultCap);
  // Rough footprint of enumeration plus generator, in bytes.
  static double memory_estimate(int L);

  int L() const noexcept { return L_; }
  std::size_t size() const noexcept { return states_.size(); }
  const Path& state(std::size_t i) const noexcept { return states_[i]; }
  std::span<const Path> states() const noexcept { return states_; }
  std::uint64_t code(std::size_t i) const noexcept { return codes_[i]; }

  std::optional<std::size_t> find(std::span<const int> heights) const;
  std::size_t index_of(const Path& p) const;  // throws std::invalid_argument if absent

  static std::uint64_t encode(std::span<const int> heights) noexcept;

 private:
  int L_ = 0;
  std::vector<Path> states_;
  std::vector<std::uint64_t> codes_;
};

std::uint64_t catalan(int n);

// Generator of the corner-flip chain as CSR, plus its transpose for
// evolving row distributions. Each off-diagonal entry remembers the
// plaquette (x, z) whose ring produces it, so censored generators are
// obtained by dropping entries.
class SparseGenerator {
 public:
  SparseGenerator(const StateSpaceIndex& index, const ModelParams& params);

  const ModelParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return diag_.size(); }
  std::span<const double> mu() const noexcept { return mu_; }
  double max_exit_rate() const noexcept { return max_exit_; }
  // Entry q(i, j) for i != j; 0 when not adjacent.
  double rate(std::size_t i, std::size_t j) const;
  double diagonal(std::size_t i) const noexcept { return diag_[i]; }
  std::size_t nonzeros() const noexcept { return col_.size(); }

  template <class Fn>
  void for_each_entry(std::size_t row, Fn&& fn) const {
    for (auto k = row_ptr_[row]; k < row_ptr_[row + 1]; ++k) fn(static_cast<std::size_t>(col_[k]), val_[k], plaquette_[k]);
  }

  // Copy without the entries whose plaquette is in `sites`.
  SparseGenerator censored(std::span<const std::pair<int, int>> sites) const;

  // out = p Q (p a row vector). The parallel variant splits rows of the
  // transpose across OpenMP threads; both give identical results.
  void apply_left(std::span<const double> p, std::span<double> out) const;
  void apply_left_serial(std::span<const double> p, std::span<double> out) const;
  // out = Q f
  void apply_right(std::span<const double> f, std::span<double> out) const;

 private:
  SparseGenerator() = default;
  void build_transpose();

  ModelParams params_{2, 1.0};
  std::vector<double> mu_;
  std::vector<double> diag_;
  std::vector<std::uint32_t> row_ptr_, col_;
  std::vector<double> val_;
  std::vector<std::pair<int, int>> plaquette_;
  std::vector<std::uint32_t> trow_ptr_, tcol_;
  std::vector<double> tval_;
  double max_exit_ = 0.0;
};

// mu as a vector over the index (0^0 = 1 for lambda = 0).
std::vector<double> equilibrium_vector(const StateSpaceIndex& index, double lambda);
std::vector<double> point_mass(const StateSpaceIndex& index, const Path& p);

// max over edges |mu_i q_ij - mu_j q_ji| and max_j |(mu^T Q)_j|.
double detailed_balance_defect(const SparseGenerator& gen);
double stationarity_defect(const SparseGenerator& gen);

// Exact rational checks on unnormalised weights lambda^N.
bool detailed_balance_exact(const StateSpaceIndex& index, const Rational& lambda);
// mu(xi_{x-1} = xi_{x+1} = 1) = ((1 + lambda) / lambda) mu(xi_x = 0) for every
// even x in [2, L-2]; lambda > 0.
bool contact_identity_exact(const StateSpaceIndex& index, const Rational& lambda);

enum class GapMethod { automatic, dense, lanczos };

struct GapResult {
  double gap;
  double kappa;
  GapMethod method;
  bool bound_holds;  // gap >= kappa_L (up to 1e-10 relative)
};

// Smallest nonzero eigenvalue of -Q on the support of mu, from the
// symmetrised matrix D^{1/2} Q D^{-1/2}. Dense below L = 18, Lanczos above.
GapResult spectral_gap(const SparseGenerator& gen, GapMethod method = GapMethod::automatic);

struct Uniformization {
  double tolerance = 1e-12;  // total truncation error of one call
  double max_step = 30.0;    // largest Lambda h per Poisson mixture
};

// p e^{tQ} by uniformization with Lambda = max exit rate + 1.
std::vector<double> evolve(const SparseGenerator& gen, std::span<const double> p, double t, const Uniformization& u = {});

// The law at time t of the chain started from `initial`, with generators
// switched at the schedule's breakpoints (censored plaquettes removed).
std::vector<double> exact_distribution(const SparseGenerator& gen, std::span<const double> initial, double t,
                                       const CensoringSchedule& schedule = {}, const Uniformization& u = {});

double tv_distance(std::span<const double> p, std::span<const double> q);

struct TvPoint {
  double t;
  double d;
};

struct TvCurve {
  std::vector<TvPoint> points;
  bool nonincreasing;  // d(t) never rises by more than 1e-12
};

// (1/2) sum |P_t - mu| on a sorted grid, evolving once along the grid.
TvCurve exact_tv_curve(const SparseGenerator& gen, std::span<const double> initial, std::span<const double> grid,
                       const CensoringSchedule& schedule = {}, const Uniformization& u = {});

// Max over all initial states of the TV distance, with the maximiser per
// grid point and whether it is the wedge or the vee.
struct WorstStartPoint {
  double t;
  double d;
  std::size_t argmax;
  bool extremal;
};
std::vector<WorstStartPoint> worst_start_report(const StateSpaceIndex& index, const SparseGenerator& gen,
                                                std::span<const double> grid);

// (1/2) e^{-t gap} sqrt(Var_mu(nu / mu)); throws std::invalid_argument if nu
// charges a state outside the support of mu.
double chi_square_variance(const SparseGenerator& gen, std::span<const double> nu);
double chi_square_bound(const SparseGenerator& gen, std::span<const double> nu, double t, double gap);

struct ChiSquareReport {
  double variance;
  double gap;
  std::vector<TvPoint> bound;
  std::vector<TvPoint> exact;
  bool dominates;
};
ChiSquareReport chi_square_report(const SparseGenerator& gen, std::span<const double> nu, std::span<const double> grid);

// Replays the grand coupling of {wedge, vee, extra...} from every stream of
// the lattice materialised up to the horizon, sorted by (time, site id), and
// compares the accepted flips with the lazy engine bit for bit.
struct CouplingCheckReport {
  bool identical;
  std::size_t rings;           // rings materialised
  std::size_t flips_lazy;
  std::size_t flips_brute;
  std::optional<std::size_t> first_divergence;  // index into the flip lists
  std::string detail;
};
CouplingCheckReport brute_force_coupling_check(std::uint64_t master_seed, const ModelParams& params, double horizon,
                                               const std::vector<Path>& extra_starts = {});

}  // namespace pinmix
