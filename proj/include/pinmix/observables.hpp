#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pinmix/path.hpp"

namespace pinmix {

// Weight vector w[0..L] for the weighted areas. Entries 0 and L are never
// used (paths vanish there).
class AreaWeights {
 public:
  enum class Kind { sine, cosine_beta };

  // w[x] = sin(pi x / L)
  static AreaWeights sine(int L);
  // w[x] = cos(beta (x - L/2) / L), beta in (2pi/3, pi)
  static AreaWeights cosine_beta(int L, double beta);

  Kind kind() const noexcept { return kind_; }
  int L() const noexcept { return static_cast<int>(w_.size()) - 1; }
  double beta() const noexcept { return beta_; }
  double operator[](int x) const noexcept { return w_[static_cast<std::size_t>(x)]; }
  std::span<const double> values() const noexcept { return w_; }

  double area(std::span<const int> heights) const noexcept;

 private:
  AreaWeights(Kind k, double beta, std::vector<double> w) : kind_(k), beta_(beta), w_(std::move(w)) {}
  Kind kind_;
  double beta_;
  std::vector<double> w_;
};

void require_valid_beta(double beta);

// beta(delta) = pi sqrt((1 + 9 delta / 20) / (1 + delta / 2))
double default_beta(double delta);
// eta(delta) = min(delta / 10, 0.05)
double default_eta(double delta);

double phi(const Path& path);
double phi(const Path& path, const AreaWeights& w);
double phi_bar(const Path& path, double beta);

// Wall terms with sine weights.
double psi(std::span<const int> heights, double lambda);
double psi_bar(std::span<const int> heights, double lambda);
inline double psi(const Path& p, const ModelParams& m) { return psi(p.heights(), m.lambda); }
inline double psi_bar(const Path& p, const ModelParams& m) { return psi_bar(p.heights(), m.lambda); }

// (L xi)_x evaluated twice: by summing rate * increment over the flip at x,
// and through the discrete Laplacian plus wall indicators. Throws
// std::logic_error if the two differ by more than 1e-12.
struct GeneratorPair {
  double direct;
  double closed_form;
};
GeneratorPair generator_apply_coordinate(const Path& path, int x, const ModelParams& params);

// (L Phi)(xi) directly and as -kappa_L Phi + Psi; throws std::logic_error on
// relative disagreement above 1e-10.
GeneratorPair generator_apply_phi(const Path& path, const ModelParams& params);

int height_max(std::span<const int> heights) noexcept;
// Longest run of equal steps (all +1 or all -1).
int q_monotone(std::span<const int> heights) noexcept;
inline int height_max(const Path& p) noexcept { return height_max(p.heights()); }
inline int q_monotone(const Path& p) noexcept { return q_monotone(p.heights()); }

// 2 cos(beta (L/2 - 1) / L): a lower bound on the change of Phi-bar under one flip.
double delta_min(int L, double beta);

// (Phi-bar(top) - Phi-bar(ref)) / delta_min; throws std::invalid_argument
// unless ref <= top.
double area_process(std::span<const int> top, std::span<const int> ref, const AreaWeights& cosine);
double area_process(const Path& top, const Path& ref, double beta);

struct BracketEvent {
  double t;
  double A;  // value after the event
  int H;     // max height of the upper chain
  int Q;     // longest monotone run of the lower chain
};

// Running record of the A-process between the wedge chain and an
// equilibrium-started chain: jump sizes, the pathwise sum of squared jumps,
// hitting times of the thresholds L^{3/2 - i eta}, i = 2..K, searched from
// t_start on, and the logged ratio lambda delta_min A / (3 (1+lambda) H Q).
struct BracketDiagnostics {
  int L = 0;
  double lambda = 1.0;
  double delta_min = 1.0;
  double eta = 0.05;
  int K = 10;
  double t_start = 0.0;

  double t = 0.0;
  double A = 0.0;
  double quadratic_variation_proxy = 0.0;
  long jumps = 0;
  long small_jumps = 0;  // |jump| < 1 before coalescence; should stay 0
  bool started = false;
  std::vector<double> thresholds;                   // index i - 2
  std::vector<std::optional<double>> hitting_times;  // index i - 2
  std::size_t next_threshold = 0;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  double ratio_sum = 0.0;
  long ratio_count = 0;

  static BracketDiagnostics start(int L, double lambda, double beta, double eta, double t_start, double A0);
};

BracketDiagnostics bracket_diagnostics_update(const BracketEvent& event, BracketDiagnostics diag);
// Close the record at time t without a jump (threshold checks only).
BracketDiagnostics bracket_diagnostics_finish(double t, BracketDiagnostics diag);

}  // namespace pinmix
