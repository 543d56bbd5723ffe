#include "pinmix/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pinmix/dynamics.hpp"

namespace pinmix {

using std::numbers::pi;

void require_valid_beta(double beta) {
  if (!(beta > 2.0 * pi / 3.0 && beta < pi)) throw std::invalid_argument("beta must lie in (2pi/3, pi)");
}

double default_beta(double delta) { return pi * std::sqrt((1.0 + 9.0 * delta / 20.0) / (1.0 + delta / 2.0)); }

double default_eta(double delta) { return std::min(delta / 10.0, 0.05); }

AreaWeights AreaWeights::sine(int L) {
  require_valid_length(L);
  std::vector<double> w(static_cast<std::size_t>(L) + 1);
  for (int x = 0; x <= L; ++x) w[static_cast<std::size_t>(x)] = std::sin(pi * x / L);
  return {Kind::sine, 0.0, std::move(w)};
}

AreaWeights AreaWeights::cosine_beta(int L, double beta) {
  require_valid_length(L);
  require_valid_beta(beta);
  std::vector<double> w(static_cast<std::size_t>(L) + 1);
  for (int x = 0; x <= L; ++x) w[static_cast<std::size_t>(x)] = std::cos(beta * (x - L / 2.0) / L);
  return {Kind::cosine_beta, beta, std::move(w)};
}

double AreaWeights::area(std::span<const int> heights) const noexcept {
  double s = 0.0;
  for (std::size_t x = 1; x + 1 < heights.size(); ++x) s += heights[x] * w_[x];
  return s;
}

double phi(const Path& path) { return AreaWeights::sine(path.length()).area(path.heights()); }

double phi(const Path& path, const AreaWeights& w) {
  if (w.L() != path.length()) throw std::invalid_argument("weights built for a different L");
  return w.area(path.heights());
}

double phi_bar(const Path& path, double beta) { return AreaWeights::cosine_beta(path.length(), beta).area(path.heights()); }

namespace {

double wall_term(std::span<const int> h, double lambda, bool absolute) {
  const int L = static_cast<int>(h.size()) - 1;
  double coef = (lambda - 1.0) / (lambda + 1.0);
  if (absolute) coef = std::abs(coef);
  double s = 0.0;
  for (int x = 1; x < L; ++x) {
    const auto ux = static_cast<std::size_t>(x);
    if (h[ux - 1] != h[ux + 1]) continue;
    const double w = std::sin(pi * x / L);
    if (h[ux - 1] == 0) s += w;
    if (h[ux - 1] == 1) s += (absolute ? coef : -coef) * w;
  }
  return s;
}

}  // namespace

double psi(std::span<const int> heights, double lambda) { return wall_term(heights, lambda, false); }
double psi_bar(std::span<const int> heights, double lambda) { return wall_term(heights, lambda, true); }

GeneratorPair generator_apply_coordinate(const Path& path, int x, const ModelParams& params) {
  const int L = path.length();
  if (x < 1 || x > L - 1) throw std::out_of_range("column must lie in [1, L-1]");
  const double direct = rate(path, x, params) * (flip(path, x)[x] - path[x]);
  const int a = path[x - 1];
  const int b = path[x + 1];
  double closed = 0.5 * (a + b) - path[x];
  if (a == b && a == 0) closed += 1.0;
  if (a == b && a == 1) closed -= (params.lambda - 1.0) / (params.lambda + 1.0);
  if (std::abs(direct - closed) > 1e-12)
    throw std::logic_error("generator identity fails at x=" + std::to_string(x) + " for " + format_path(path.heights()));
  return {direct, closed};
}

GeneratorPair generator_apply_phi(const Path& path, const ModelParams& params) {
  const int L = path.length();
  const auto w = AreaWeights::sine(L);
  double direct = 0.0;
  for (int x = 1; x < L; ++x) {
    const double r = rate(path, x, params);
    if (r == 0.0) continue;
    direct += r * (flip(path, x)[x] - path[x]) * w[x];
  }
  const double closed = -params.kappa() * w.area(path.heights()) + psi(path.heights(), params.lambda);
  const double scale = std::max({1.0, std::abs(direct), std::abs(closed)});
  if (std::abs(direct - closed) > 1e-10 * scale)
    throw std::logic_error("weighted-area eigen-relation fails for " + format_path(path.heights()));
  return {direct, closed};
}

int height_max(std::span<const int> heights) noexcept { return *std::max_element(heights.begin(), heights.end()); }

int q_monotone(std::span<const int> heights) noexcept {
  int best = 0, run = 0, prev = 0;
  for (std::size_t x = 1; x < heights.size(); ++x) {
    const int step = heights[x] - heights[x - 1];
    run = step == prev ? run + 1 : 1;
    prev = step;
    best = std::max(best, run);
  }
  return best;
}

double delta_min(int L, double beta) { return 2.0 * std::cos(beta * (L / 2.0 - 1.0) / L); }

double area_process(std::span<const int> top, std::span<const int> ref, const AreaWeights& cosine) {
  if (!leq(ref, top)) throw std::invalid_argument("area_process: reference path is not below the top path");
  double s = 0.0;
  for (std::size_t x = 1; x + 1 < top.size(); ++x) s += (top[x] - ref[x]) * cosine[static_cast<int>(x)];
  return s / delta_min(cosine.L(), cosine.beta());
}

double area_process(const Path& top, const Path& ref, double beta) {
  return area_process(top.heights(), ref.heights(), AreaWeights::cosine_beta(top.length(), beta));
}

BracketDiagnostics BracketDiagnostics::start(int L, double lambda, double beta, double eta, double t_start, double A0) {
  require_valid_beta(beta);
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  BracketDiagnostics d;
  d.L = L;
  d.lambda = lambda;
  d.delta_min = pinmix::delta_min(L, beta);
  d.eta = eta;
  d.K = static_cast<int>(std::ceil(1.0 / (2.0 * eta)));
  d.t_start = t_start;
  d.A = A0;
  for (int i = 2; i <= d.K; ++i) d.thresholds.push_back(std::pow(static_cast<double>(L), 1.5 - i * eta));
  d.hitting_times.assign(d.thresholds.size(), std::nullopt);
  return d;
}

namespace {

void check_thresholds(BracketDiagnostics& d, double t) {
  while (d.next_threshold < d.thresholds.size() && d.A <= d.thresholds[d.next_threshold]) {
    d.hitting_times[d.next_threshold] = t;
    ++d.next_threshold;
  }
}

void enter_window(BracketDiagnostics& d, double t) {
  if (d.started || t < d.t_start) return;
  d.started = true;
  check_thresholds(d, d.t_start);
}

}  // namespace

BracketDiagnostics bracket_diagnostics_update(const BracketEvent& event, BracketDiagnostics d) {
  enter_window(d, event.t);
  d.t = event.t;
  const double jump = event.A - d.A;
  if (jump == 0.0) return d;
  if (d.A > 0.0 && std::abs(jump) < 1.0 - 1e-9) ++d.small_jumps;
  ++d.jumps;
  d.quadratic_variation_proxy += jump * jump;
  d.A = event.A;
  if (d.A > 0.0 && event.H > 0 && event.Q > 0) {
    const double ratio = d.lambda * d.delta_min * d.A / (3.0 * (1.0 + d.lambda) * event.H * event.Q);
    d.ratio_min = d.ratio_count == 0 ? ratio : std::min(d.ratio_min, ratio);
    d.ratio_max = d.ratio_count == 0 ? ratio : std::max(d.ratio_max, ratio);
    d.ratio_sum += ratio;
    ++d.ratio_count;
  }
  if (d.started) check_thresholds(d, event.t);
  return d;
}

BracketDiagnostics bracket_diagnostics_finish(double t, BracketDiagnostics d) {
  enter_window(d, t);
  d.t = std::max(d.t, t);
  return d;
}

}  // namespace pinmix
