#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pinmix/experiments.hpp"

using namespace pinmix;

namespace {

ExperimentConfig small_config(int L, double lambda, int replicas) {
  ExperimentConfig c;
  c.L = {L};
  c.lambda = {lambda};
  c.replicas = replicas;
  c.master_seed = 5;
  c.bootstrap = 200;
  return c;
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("time scales") {
  CHECK(mixing_scale(64) == doctest::Approx(64.0 * 64.0 * std::log(64.0) / (std::numbers::pi * std::numbers::pi)));
  CHECK(t_delta(64, 0.5) == doctest::Approx(1.5 * mixing_scale(64)));
  ExperimentConfig c;
  CHECK(c.grid_for(32).size() == 41);
  CHECK(c.grid_for(32).back() == doctest::Approx(2 * mixing_scale(32)));
  CHECK(c.lower_grid_for(32).size() == 21);
  CHECK(c.horizon_for(32) == doctest::Approx(2 * t_delta(32, 1.0)));
  c.time_unit = TimeUnit::absolute;
  c.horizon = 100;
  c.grid = {0, 10, 1e9};
  CHECK(c.grid_for(32).size() == 2);  // beyond the horizon dropped
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.L = {7};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("L must be even"), std::invalid_argument);
  c = {};
  c.epsilon = {0.0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.grid = {1, 0};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.lambda = {1.0, 2.5};
  CHECK(c.outside_repulsive_phase());
  c.lambda = {1.9};
  CHECK_FALSE(c.outside_repulsive_phase());
}

TEST_CASE("score intervals") {
  const auto w = wilson_interval(5, 10);
  CHECK(w.lo == doctest::Approx(0.2365931).epsilon(1e-6));
  CHECK(w.hi == doctest::Approx(0.7634069).epsilon(1e-6));
  CHECK(wilson_interval(0, 10).lo == 0.0);
  CHECK(simultaneous_z(1) == doctest::Approx(kZ95));
  CHECK(simultaneous_z(20) == doctest::Approx(3.0233).epsilon(1e-4));
  CHECK(wilson_interval(0, 10).hi == doctest::Approx(0.2775328).epsilon(1e-6));
  const auto d = newcombe_interval(5, 10, 5, 10);
  CHECK(d.lo < 0.0);
  CHECK(d.hi == doctest::Approx(-d.lo));
  const auto e = newcombe_interval(90, 100, 10, 100);
  CHECK(e.lo > 0.6);
  CHECK(e.hi < 0.9);
}

TEST_CASE("survival crossing is an order statistic") {
  const std::vector<double> tau{1, 2, 3, 4};
  // P[tau > t] < 0.25 first at t = 4; < 0.5 first at t = 3 (1/4 < 1/2)
  CHECK(survival_crossing(tau, 0.25, 10, 4) == 4);
  CHECK(survival_crossing(tau, 0.5, 10, 4) == 3);
  CHECK(survival_crossing(tau, 0.75, 10, 4) == 2);
  CHECK(survival_crossing(tau, 0.9, 10, 4) == 1);
  CHECK(std::isnan(survival_crossing(tau, 0.25, 10, 3)));  // needs the censored sample
  CHECK(survival_crossing(tau, 0.5, 10, 3) == 3);
}

TEST_CASE("replica farm determinism and coalescence structure") {
  auto c = small_config(16, 1.0, 24);
  const auto a = estimate_tau_distribution(c, 16, 1.0, Execution::serial);
  const auto b = estimate_tau_distribution(c, 16, 1.0, Execution::parallel);
  REQUIRE(a.samples.size() == 24);
  CHECK(a.complete());
  CHECK(a.censored() == 0);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].tau == b.samples[i].tau);
    CHECK(a.samples[i].tau1 == b.samples[i].tau1);
    CHECK(a.phi[i] == b.phi[i]);
    CHECK(a.samples[i].tau == std::max(a.samples[i].tau1, a.samples[i].tau2));
  }
  c.threads = 3;
  const auto d = estimate_tau_distribution(c, 16, 1.0, Execution::parallel);
  CHECK(d.samples.back().tau == a.samples.back().tau);

  const auto two = estimate_tau_distribution(small_config(2, 1.0, 5), 2, 1.0, Execution::serial);
  for (const auto& s : two.samples) CHECK(s.tau == 0.0);
}

TEST_CASE("cancellation leaves later replicas empty") {
  std::atomic<bool> stop{true};
  const auto s = estimate_tau_distribution(small_config(8, 1.0, 10), 8, 1.0, Execution::serial, &stop);
  CHECK(s.samples.empty());
  CHECK_FALSE(s.complete());
}

TEST_CASE("upper curve is a survival function") {
  const auto c = small_config(12, 1.0, 60);
  const auto s = estimate_tau_distribution(c, 12, 1.0);
  const auto grid = c.grid_for(12);
  const auto up = tv_upper_curve(s, grid);
  CHECK(up.front().value == 1.0);
  for (std::size_t i = 1; i < up.size(); ++i) CHECK(up[i].value <= up[i - 1].value);
  for (const auto& p : up) {
    CHECK(p.ci.lo <= p.value);
    CHECK(p.value <= p.ci.hi);
  }
}

TEST_CASE("lower statistic on separated and identical samples") {
  const std::vector<double> grid{0.0};
  std::vector<std::vector<double>> far, same;
  std::vector<double> eq;
  RngStream rng(3, 0);
  for (int i = 0; i < 400; ++i) {
    far.push_back({100.0 + rng.uniform()});
    same.push_back({rng.uniform()});
    eq.push_back(rng.uniform());
  }
  const auto hi = tv_lower_curve(16, grid, far, eq);
  CHECK(hi[0].value > 0.9);  // 64 quantile thresholds need not split the samples exactly
  const auto lo = tv_lower_curve(16, grid, same, eq);
  CHECK(std::abs(lo[0].value) < 0.15);
  CHECK(tv_lower_curve(16, grid, {{1.0}}, eq)[0].value != tv_lower_curve(16, grid, {{1.0}}, eq)[0].value);  // nan
}

TEST_CASE("simulated curves sandwich the exact distance at L = 8") {
  auto c = small_config(8, 1.0, 400);
  c.time_unit = TimeUnit::absolute;
  c.horizon = 400;
  c.grid = {0, 1, 2, 4, 6, 8, 10, 14, 18, 25};
  c.lower_until = 25;
  const auto s = estimate_tau_distribution(c, 8, 1.0);
  const auto grid = c.grid_for(8);
  const double z = simultaneous_z(grid.size());
  const auto up = tv_upper_curve(s, grid, z);
  const auto eq = equilibrium_phi_samples({8, 1.0}, 1600, 77);
  const auto low = tv_lower_curve(8, grid, s.phi, eq, z);

  const auto idx = StateSpaceIndex::enumerate(8);
  const SparseGenerator gen(idx, {8, 1.0});
  const auto exact = exact_tv_curve(gen, point_mass(idx, maximal_path(8)), grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double d = exact.points[g].d;
    CHECK(up[g].ci.hi >= d);
    CHECK(low[g].ci.lo <= d);
    CHECK(low[g].value <= up[g].value + (up[g].ci.hi - up[g].ci.lo) / 2 + (low[g].ci.hi - low[g].ci.lo) / 2);
  }
}

TEST_CASE("cutoff rows and bootstrap") {
  auto c = small_config(16, 1.0, 100);
  const auto s = estimate_tau_distribution(c, 16, 1.0);
  const double eps[] = {0.25, 0.75};
  const auto rows = cutoff_rows(s, {}, eps, 300, 9);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].t_hat_upper >= rows[1].t_hat_upper);
  CHECK(rows[0].cutoff_ratio == doctest::Approx(rows[0].t_hat_upper / rows[1].t_hat_upper));
  CHECK(rows[1].cutoff_ratio == doctest::Approx(1.0 / rows[0].cutoff_ratio));
  CHECK(rows[0].normalized_location == doctest::Approx(rows[0].t_hat_upper / mixing_scale(16)));
  CHECK(rows[0].location_ci.lo <= rows[0].normalized_location);
  CHECK(rows[0].normalized_location <= rows[0].location_ci.hi);
  CHECK(std::isnan(rows[0].t_hat_lower));
  const auto again = cutoff_rows(s, {}, eps, 300, 9);
  CHECK(again[0].location_ci.lo == rows[0].location_ci.lo);

  const std::vector<LowerPoint> lower{{0, 1.0, {1, 1}, 0}, {10, 0.5, {0, 1}, 0}, {20, 0.1, {0, 1}, 0}};
  const auto with_lower = cutoff_rows(s, lower, eps, 0, 9);
  CHECK(with_lower[0].t_hat_lower == 10);
  CHECK(with_lower[1].t_hat_lower == 0);
  CHECK(with_lower[0].warning.find("coarse") != std::string::npos);
}

TEST_CASE("mixing run and csv outputs") {
  auto c = small_config(10, 1.0, 10);
  c.lambda = {1.0, 2.5};
  const auto run = run_mixing(c, Execution::parallel);
  CHECK(run.complete);
  REQUIRE(run.cells.size() == 2);
  std::ostringstream tau, curve, table, tau2;
  write_tau_samples_csv(tau, run);
  write_mixing_curve_csv(curve, run);
  write_cutoff_table_csv(table, run);
  CHECK(count_lines(tau.str()) == 1 + 20);
  CHECK(count_lines(curve.str()) == 1 + 2 * 41);
  CHECK(count_lines(table.str()) == 1 + 4);
  CHECK(tau.str().rfind("L,lambda,replica,tau,tau1,tau2,censored_flag", 0) == 0);
  write_tau_samples_csv(tau2, run_mixing(c, Execution::serial));
  CHECK(tau2.str() == tau.str());
}

TEST_CASE("censored wedge protocol") {
  const std::vector<std::pair<int, int>> g8{{2, 1}, {4, 1}, {6, 1}};
  CHECK(contact_changing_sites(8) == g8);
  const double window = t_delta(8, 0.25);
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(window * 2.0 * i / 19.0);
  const auto r = censored_wedge_protocol(8, 1.5, 0.5, 100, 4, grid);
  CHECK(r.window == doctest::Approx(window));
  CHECK(r.window_flips > 0);
  CHECK(r.contact_changes == 0);
  REQUIRE(r.exact_plain.has_value());
  CHECK(r.exact_inequality_ok);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(r.exact_censored->points[i].d >= r.exact_plain->points[i].d - 1e-10);
  CHECK(r.plain.size() == grid.size());
}

TEST_CASE("vee contact check") {
  const auto r = vee_boundary_contact_check(32, 1.5, {16, 4, 8}, 200, 2, 1.0);
  CHECK(r.M == std::vector<int>{4, 8, 16});
  for (std::size_t i = 1; i < r.fraction.size(); ++i) CHECK(r.fraction[i] >= r.fraction[i - 1]);
  CHECK(r.fraction.back() > 0.6);
  CHECK(r.contact_profile.front() == 1.0);
  CHECK(r.contact_profile.back() == 1.0);
  CHECK(r.contact_profile[1] == 0.0);
  const auto again = vee_boundary_contact_check(32, 1.5, {16, 4, 8}, 200, 2, 1.0, Execution::serial);
  CHECK(again.contact_profile == r.contact_profile);
}

TEST_CASE("heat-bath kernel has the corner-flip law at fixed times") {
  const int L = 8;
  const double lambda = 1.5, t = 1.5;
  const auto idx = StateSpaceIndex::enumerate(L);
  const SparseGenerator gen(idx, {L, lambda});
  const auto law = exact_distribution(gen, point_mass(idx, minimal_path(L)), t);
  const int n = 40000;
  std::vector<double> counts(idx.size(), 0.0);
  RngStream rng(21, 0);
  const auto start = minimal_path(L);
  for (int i = 0; i < n; ++i) {
    std::vector<int> h(start.heights().begin(), start.heights().end());
    heat_bath_run(h, lambda, true, t, rng);
    counts[*idx.find(h)] += 1;
  }
  double chi2 = 0;
  int cells = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double e = law[i] * n;
    if (e < 5) continue;
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  CHECK(cells > 5);
  CHECK(chi2 < boost::math::quantile(boost::math::chi_squared(cells - 1), 0.999));
}

TEST_CASE("contact-free chain matches the lifted smaller chain") {
  const double eps[] = {0.25, 0.75};
  const auto r = lifting_comparison(12, 300, 8, eps);
  CHECK(r.agree);
  REQUIRE(r.zero.size() == 2);
  CHECK(r.zero[0].lambda == 0.0);
  CHECK(r.one[0].L == 10);
}

TEST_CASE("bracket monitor") {
  const double delta = 0.5;
  const double beta = default_beta(delta);
  const auto d = bracket_monitor({32, 1.0}, delta, beta, default_eta(delta), 3, 1e5);
  CHECK(d.jumps > 0);
  CHECK(d.small_jumps == 0);
  CHECK(d.A == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(d.quadratic_variation_proxy > 0.0);
}
