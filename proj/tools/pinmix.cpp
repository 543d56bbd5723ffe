#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "manifest.hpp"
#include "pinmix/config.hpp"
#include "pinmix/experiments.hpp"
#include "pinmix/sep.hpp"

#ifndef PINMIX_VERSION
#define PINMIX_VERSION "dev"
#endif

using namespace pinmix;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitCap = 3;
constexpr int kExitInvariant = 4;
constexpr int kExitInterrupted = 130;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  int L = 8;
  double lambda = 1.0;
  std::uint64_t seed = 1;
  int replicas = 100;
  double horizon = 0.0;  // 0: subcommand default
  double delta = 0.5;
  std::vector<double> epsilon{0.25, 0.75};
  double beta = 0.0;
  double eta = 0.0;
  bool censor = false;
  std::vector<int> M{16};
  std::string out_dir;
  std::string out;
  int threads = 0;
  std::string config;
  int count = 1;
  int points = 20;
  std::vector<double> times;
  int cap = StateSpaceIndex::kDefaultCap;
  std::string start = "wedge";
  std::string events;
  double s0_factor = 10.0;
  int m = -1;
  int seeds = 1;
};

void check_L(int L) {
  if (L < 2 || L % 2 != 0) throw UsageError("L must be even and ≥ 2");
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("lambda must be finite and >= 0");
}

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("PINMIX_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) omp_set_num_threads(threads);
}

// Runs fn with a stream bound to --out, or stdout when empty.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ostringstream buf;
  fn(buf);
  cli::write_atomic(path, buf.str());
}

std::vector<double> even_grid(double end, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(points > 1 ? end * i / (points - 1) : 0.0);
  return g;
}

json curve_json(const std::vector<TvPoint>& pts) {
  auto a = json::array();
  for (const auto& p : pts) a.push_back({p.t, p.d});
  return a;
}

json lower_json(const std::vector<LowerPoint>& pts) {
  auto a = json::array();
  for (const auto& p : pts)
    a.push_back({{"t", p.t}, {"d_lower", p.value}, {"ci", {p.ci.lo, p.ci.hi}}, {"threshold_scaled", p.threshold_scaled}});
  return a;
}

json interval_json(const Interval& i) { return {i.lo, i.hi}; }

int cmd_sample(const Options& o) {
  check_L(o.L);
  check_lambda(o.lambda);
  if (o.count < 0) throw UsageError("count must be >= 0");
  const EquilibriumSampler sampler({o.L, o.lambda});
  RngStream rng(o.seed, 0);
  std::vector<int> h;
  with_output(o.out, [&](std::ostream& out) {
    for (int i = 0; i < o.count; ++i) {
      sampler.sample_into(rng, h);
      out << format_path(h) << '\n';
    }
  });
  return 0;
}

int cmd_exact(const Options& o) {
  check_L(o.L);
  check_lambda(o.lambda);
  std::optional<StateSpaceIndex> idx;
  try {
    idx.emplace(StateSpaceIndex::enumerate(o.L, o.cap));
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCap;
  }
  const SparseGenerator gen(*idx, {o.L, o.lambda});
  const auto gap = spectral_gap(gen);
  std::vector<double> grid = o.times;
  if (grid.empty()) grid = even_grid(2.0 * t_delta(o.L, o.delta), o.points);
  std::sort(grid.begin(), grid.end());
  const auto start = point_mass(*idx, maximal_path(o.L));
  const auto tv = exact_tv_curve(gen, start, grid);

  json j;
  j["L"] = o.L;
  j["lambda"] = o.lambda;
  j["states"] = idx->size();
  j["gap"] = gap.gap;
  j["kappa"] = gap.kappa;
  j["gap_method"] = gap.method == GapMethod::dense ? "dense" : "lanczos";
  j["gap_bound_holds"] = gap.bound_holds;
  j["start"] = "wedge";
  j["tv_curve"] = curve_json(tv.points);
  j["tv_nonincreasing"] = tv.nonincreasing;
  std::vector<TvPoint> bound;
  if (std::isfinite(gap.gap)) {
    for (double t : grid) bound.push_back({t, chi_square_bound(gen, start, t, gap.gap)});
  }
  j["chi2_bound_curve"] = curve_json(bound);
  j["censored_tv_curve"] = nullptr;
  bool ok = true;
  if (o.censor) {
    const double window = t_delta(o.L, o.delta / 2.0);
    const auto schedule = CensoringSchedule::window(contact_changing_sites(o.L), window);
    const auto ctv = exact_tv_curve(gen, start, grid, schedule);
    for (std::size_t i = 0; i < grid.size(); ++i) ok = ok && ctv.points[i].d >= tv.points[i].d - 1e-10;
    j["censored_tv_curve"] = curve_json(ctv.points);
    j["censoring_window"] = window;
    j["censoring_inequality_ok"] = ok;
  }
  with_output(o.out, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  return ok ? 0 : kExitInvariant;
}

json config_json(const ExperimentConfig& c) {
  return {{"L", c.L},
          {"lambda", c.lambda},
          {"replicas", c.replicas},
          {"master_seed", c.master_seed},
          {"time_unit", c.time_unit == TimeUnit::normalized ? "normalized" : "absolute"},
          {"horizon", c.horizon},
          {"grid", c.grid},
          {"lower_until", c.lower_until},
          {"epsilon", c.epsilon},
          {"delta", c.delta},
          {"M", c.M},
          {"s0_factor", c.s0_factor},
          {"beta", c.beta},
          {"eta", c.eta},
          {"eq_samples", c.eq_samples},
          {"bootstrap", c.bootstrap},
          {"out_dir", c.out_dir},
          {"threads", c.threads}};
}

int cmd_mix(const Options& o, bool seed_given) {
  ExperimentConfig cfg;
  try {
    cfg = parse_config_file(o.config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.threads > 0) cfg.threads = o.threads;
  if (seed_given) cfg.master_seed = o.seed;
  apply_threads(cfg.threads);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  const std::string started = cli::utc_now();
  std::signal(SIGINT, on_sigint);
  const auto run = run_mixing(cfg, Execution::parallel, &g_interrupted);
  std::signal(SIGINT, SIG_DFL);

  std::vector<cli::OutputFile> files;
  auto emit = [&](const char* name, void (*writer)(std::ostream&, const MixingRun&)) {
    std::ostringstream buf;
    writer(buf, run);
    cli::write_atomic(dir / name, buf.str());
    files.push_back(cli::describe_output(dir / name));
  };
  emit("tau_samples.csv", write_tau_samples_csv);
  emit("mixing_curve.csv", write_mixing_curve_csv);
  emit("cutoff_table.csv", write_cutoff_table_csv);

  json warnings = json::array();
  json cells = json::array();
  for (const auto& c : run.cells) {
    for (const auto& w : c.warnings) {
      warnings.push_back({{"L", c.tau.L}, {"lambda", c.tau.lambda}, {"message", w}});
      std::cerr << "warning: L=" << c.tau.L << " lambda=" << c.tau.lambda << ": " << w << '\n';
    }
    cells.push_back({{"L", c.tau.L},
                     {"lambda", c.tau.lambda},
                     {"replicas_requested", c.tau.requested},
                     {"replicas_completed", c.tau.samples.size()},
                     {"censored", c.tau.censored()},
                     {"fraction_within_t_delta", c.tau.fraction_within(t_delta(c.tau.L, cfg.delta))}});
  }
  json m;
  m["artifact"] = "pinmix";
  m["version"] = PINMIX_VERSION;
  m["config"] = config_json(cfg);
  m["config_text"] = format_config(cfg);
  m["master_seed"] = cfg.master_seed;
  m["started_at"] = started;
  m["finished_at"] = cli::utc_now();
  m["complete"] = run.complete;
  m["outside_repulsive_phase"] = cfg.outside_repulsive_phase();
  m["worst_case_over"] = json::array({"wedge", "vee"});
  m["cells"] = cells;
  m["warnings"] = warnings;
  m["outputs"] = cli::to_json(files);
  cli::write_atomic(dir / "manifest.json", m.dump(2) + "\n");
  if (!run.complete) {
    std::cerr << "interrupted: partial results written, manifest marked incomplete\n";
    return kExitInterrupted;
  }
  return 0;
}

Path start_path(const Options& o, RngStream& rng) {
  if (o.start == "wedge") return maximal_path(o.L);
  if (o.start == "vee") return minimal_path(o.L);
  if (o.start == "eq") return EquilibriumSampler({o.L, o.lambda}).sample(rng);
  std::ifstream in(o.start);
  if (!in) throw UsageError("start must be wedge, vee, eq or a path file");
  const auto paths = read_paths(in);
  if (paths.empty() || paths.front().length() != o.L) throw UsageError("start file must hold a path of length L");
  return paths.front();
}

class EventLog : public EngineObserver {
 public:
  explicit EventLog(std::ostream* out) : out_(out) {
    if (out_) *out_ << "t,x,z,dir,accepted,chain_id\n";
  }
  void on_ring(double t, const ClockSite& s, int chain, bool accepted) override {
    if (out_)
      *out_ << t << ',' << s.x << ',' << s.z << ',' << (s.dir == Direction::up ? "up" : "down") << ',' << accepted << ','
            << chain << '\n';
  }

 private:
  std::ostream* out_;
};

int cmd_simulate(const Options& o) {
  check_L(o.L);
  check_lambda(o.lambda);
  const double horizon = o.horizon > 0 ? o.horizon : 2.0 * mixing_scale(o.L);
  const double beta = o.beta > 0 ? o.beta : default_beta(o.delta);
  require_valid_beta(beta);
  RngStream init(o.seed, kEquilibriumStartStream);
  const Path start = start_path(o, init);
  const Path ref = EquilibriumSampler({o.L, o.lambda}).sample(init);

  CensoringSchedule schedule;
  if (o.censor) schedule = CensoringSchedule::window(contact_changing_sites(o.L), t_delta(o.L, o.delta / 2.0));
  std::vector<ChainSpec> specs{{{start.heights().begin(), start.heights().end()}, o.lambda, true, schedule},
                               {{ref.heights().begin(), ref.heights().end()}, o.lambda, true, {}}};
  CoupledChains engine(SiteLattice::pinning(o.L), ClockRealization(o.seed), std::move(specs));

  std::ofstream events_file;
  if (!o.events.empty()) {
    events_file.open(o.events);
    if (!events_file) throw UsageError("cannot write " + o.events);
    events_file.precision(17);
  }
  EventLog log(o.events.empty() ? nullptr : &events_file);
  std::vector<std::pair<int, int>> ordered;
  if (!o.censor && o.start == "wedge") ordered.emplace_back(1, 0);
  if (!o.censor && o.start == "vee") ordered.emplace_back(0, 1);
  OrderMonitor monitor(engine, ordered);
  ObserverList observers;
  observers.add(&log);
  observers.add(&monitor);
  engine.set_observer(&observers);

  const auto cosine = AreaWeights::cosine_beta(o.L, beta);
  const double dmin = delta_min(o.L, beta);
  with_output(o.out, [&](std::ostream& out) {
    out.precision(17);
    out << "t,N,Phi,PhiBar,Psi,A,H,Q\n";
    for (double t : even_grid(horizon, std::max(o.points, 2))) {
      engine.advance_to(t);
      const auto h = engine.heights(0);
      const auto r = engine.heights(1);
      const Path p = Path::trusted({h.begin(), h.end()});
      out << t << ',' << contacts(p) << ',' << phi(p) << ',' << cosine.area(h) << ',' << psi(h, o.lambda) << ','
          << (cosine.area(h) - cosine.area(r)) / dmin << ',' << height_max(h) << ',' << q_monotone(r) << '\n';
    }
  });
  if (monitor.violations() > 0) {
    std::cerr << "invariant violation: order broken " << monitor.violations() << " times, first at t="
              << *monitor.first_violation() << '\n';
    return kExitInvariant;
  }
  return 0;
}

int cmd_coalesce(const Options& o) {
  check_L(o.L);
  check_lambda(o.lambda);
  ExperimentConfig cfg;
  cfg.L = {o.L};
  cfg.lambda = {o.lambda};
  cfg.replicas = o.replicas;
  cfg.master_seed = o.seed;
  cfg.horizon = o.horizon > 0 ? o.horizon : 4.0;
  cfg.grid = {0.0};
  cfg.lower_until = 0.0;
  cfg.epsilon = o.epsilon;
  cfg.delta = o.delta;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  MixingRun run;
  run.cells.push_back({});
  auto& cell = run.cells.back();
  std::signal(SIGINT, on_sigint);
  cell.tau = estimate_tau_distribution(cfg, o.L, o.lambda, Execution::parallel, &g_interrupted);
  std::signal(SIGINT, SIG_DFL);
  cell.cutoff = cutoff_rows(cell.tau, {}, cfg.epsilon, cfg.bootstrap, aux_seed(o.seed, o.L, o.lambda, AuxStream::bootstrap));

  if (!o.out.empty()) {
    std::ostringstream buf;
    write_tau_samples_csv(buf, run);
    cli::write_atomic(o.out, buf.str());
  }
  const double scale = mixing_scale(o.L);
  json q;
  for (double p : {0.1, 0.25, 0.5, 0.75, 0.9}) q[std::to_string(p).substr(0, 4)] = cell.tau.quantile(p) / scale;
  json rows = json::array();
  for (const auto& r : cell.cutoff)
    rows.push_back({{"eps", r.eps},
                    {"t_hat_upper", r.t_hat_upper},
                    {"normalized_location", r.normalized_location},
                    {"location_ci", interval_json(r.location_ci)},
                    {"cutoff_ratio", r.cutoff_ratio},
                    {"ratio_ci", interval_json(r.ratio_ci)}});
  json j{{"L", o.L},
         {"lambda", o.lambda},
         {"replicas", cell.tau.samples.size()},
         {"complete", cell.tau.complete()},
         {"censored", cell.tau.censored()},
         {"horizon", cell.tau.horizon},
         {"t_delta", t_delta(o.L, o.delta)},
         {"fraction_within_t_delta", cell.tau.fraction_within(t_delta(o.L, o.delta))},
         {"normalized_quantiles", q},
         {"cutoff", rows}};
  std::cout << j.dump(2) << '\n';
  return cell.tau.complete() ? 0 : kExitInterrupted;
}

int cmd_censor(const Options& o) {
  check_L(o.L);
  check_lambda(o.lambda);
  if (!(o.lambda > 1.0 && o.lambda < 2.0)) std::cerr << "warning: the censoring protocol targets lambda in (1, 2)\n";
  const auto grid = o.times.empty() ? even_grid(2.0 * t_delta(o.L, o.delta), o.points) : o.times;
  const auto r = censored_wedge_protocol(o.L, o.lambda, o.delta, o.replicas, o.seed, grid);
  json j{{"L", r.L},
         {"lambda", r.lambda},
         {"window", r.window},
         {"replicas", r.replicas},
         {"plain", lower_json(r.plain)},
         {"censored", lower_json(r.censored)},
         {"window_flips", r.window_flips},
         {"contact_changes", r.contact_changes},
         {"exact_tv_curve", r.exact_plain ? curve_json(r.exact_plain->points) : json(nullptr)},
         {"exact_censored_tv_curve", r.exact_censored ? curve_json(r.exact_censored->points) : json(nullptr)},
         {"censoring_inequality_ok", r.exact_plain ? json(r.exact_inequality_ok) : json(nullptr)}};
  with_output(o.out, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  if (r.contact_changes != 0 || !r.exact_inequality_ok) {
    std::cerr << "invariant violation: censored chain changed contacts or the censoring inequality failed\n";
    return kExitInvariant;
  }
  return 0;
}

int cmd_vee(const Options& o) {
  check_L(o.L);
  check_lambda(o.lambda);
  if (!(o.lambda > 1.0 && o.lambda < 2.0)) std::cerr << "warning: the vee protocol targets lambda in (1, 2)\n";
  const auto r = vee_boundary_contact_check(o.L, o.lambda, o.M, o.replicas, o.seed, o.s0_factor);
  json rows = json::array();
  for (std::size_t i = 0; i < r.M.size(); ++i)
    rows.push_back({{"M", r.M[i]}, {"fraction", r.fraction[i]}, {"ci", interval_json(r.fraction_ci[i])}});
  json profile = json::array();
  for (std::size_t x = 0; x < r.contact_profile.size(); ++x)
    profile.push_back({{"x", x}, {"p_zero", r.contact_profile[x]}, {"ci", interval_json(r.profile_ci[x])}});
  json j{{"L", r.L}, {"lambda", r.lambda}, {"s0", r.s0}, {"replicas", r.replicas}, {"events", rows}, {"contact_profile", profile}};
  with_output(o.out, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  return 0;
}

int cmd_sep(const Options& o) {
  check_L(o.L);
  const int m = o.m >= 0 ? o.m : sep_m(o.L);
  const double horizon = o.horizon > 0 ? o.horizon : 2.0 * mixing_scale(o.L);
  json runs = json::array();
  std::uint64_t violations = 0;
  for (int s = 0; s < o.seeds; ++s) {
    const auto r = sep_sandwich(o.L, horizon, o.seed + static_cast<std::uint64_t>(s), m);
    violations += r.violations + (r.holds_at_end ? 0 : 1);
    runs.push_back({{"seed", o.seed + static_cast<std::uint64_t>(s)},
                    {"checks", r.checks},
                    {"violations", r.violations},
                    {"holds_at_end", r.holds_at_end},
                    {"uniform_chain_min", r.min_height}});
  }
  json j{{"L", o.L}, {"m", m}, {"horizon", horizon}, {"bridge_min_tail_exact", bridge_min_tail_exact(o.L, m)}, {"runs", runs}};
  with_output(o.out, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  if (violations > 0) {
    std::cerr << "invariant violation: sandwich order broken\n";
    return kExitInvariant;
  }
  return 0;
}

int cmd_bracket(const Options& o) {
  check_L(o.L);
  check_lambda(o.lambda);
  const double beta = o.beta > 0 ? o.beta : default_beta(o.delta);
  const double eta = o.eta > 0 ? o.eta : default_eta(o.delta);
  require_valid_beta(beta);
  const double horizon = o.horizon > 0 ? o.horizon : 4.0 * mixing_scale(o.L);
  const auto d = bracket_monitor({o.L, o.lambda}, o.delta, beta, eta, o.seed, horizon);
  json hits = json::array();
  for (std::size_t i = 0; i < d.thresholds.size(); ++i)
    hits.push_back({{"i", i + 2}, {"threshold", d.thresholds[i]},
                    {"hitting_time", d.hitting_times[i] ? json(*d.hitting_times[i]) : json(nullptr)}});
  json j{{"L", o.L},
         {"lambda", o.lambda},
         {"beta", beta},
         {"eta", eta},
         {"delta_min", d.delta_min},
         {"t_start", d.t_start},
         {"t_end", d.t},
         {"A_end", d.A},
         {"jumps", d.jumps},
         {"small_jumps", d.small_jumps},
         {"quadratic_variation_proxy", d.quadratic_variation_proxy},
         {"thresholds", hits},
         {"ratio_min", d.ratio_min},
         {"ratio_max", d.ratio_max},
         {"ratio_mean", d.ratio_count ? d.ratio_sum / static_cast<double>(d.ratio_count) : 0.0}};
  with_output(o.out, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  if (d.small_jumps > 0) {
    std::cerr << "invariant violation: A-process jump smaller than 1\n";
    return kExitInvariant;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and exact analysis of the pinned corner-flip dynamics"};
  app.set_version_flag("--version", PINMIX_VERSION);
  app.require_subcommand(1);
  Options o;

  auto add_model = [&](CLI::App* s) {
    s->add_option("--L", o.L, "path length (even, >= 2)");
    s->add_option("--lambda", o.lambda, "pinning parameter");
    s->add_option("--seed", o.seed, "master seed");
    s->add_option("--threads", o.threads, "worker threads (fallback: PINMIX_THREADS)");
    s->add_option("--out", o.out, "output file (default stdout)");
  };

  auto* sample = app.add_subcommand("sample", "exact equilibrium paths, one per line");
  add_model(sample);
  sample->add_option("--count", o.count, "number of paths");

  auto* exact = app.add_subcommand("exact", "spectral gap and exact TV curves (JSON)");
  add_model(exact);
  exact->add_option("--times", o.times, "time grid (default: --points up to 2 t_delta)")->delimiter(',');
  exact->add_option("--points", o.points, "grid points");
  exact->add_option("--delta", o.delta, "t_delta parameter");
  exact->add_flag("--censor", o.censor, "also evolve with the contact-censoring window");
  exact->add_option("--cap", o.cap, "largest L to enumerate");

  auto* mix = app.add_subcommand("mix", "mixing sweep from a config file");
  mix->add_option("--config", o.config, "config file")->required();
  mix->add_option("--out-dir", o.out_dir, "output directory (overrides config)");
  mix->add_option("--threads", o.threads, "worker threads (fallback: PINMIX_THREADS)");
  auto* mix_seed = mix->add_option("--seed", o.seed, "master seed (overrides config)");

  auto* simulate = app.add_subcommand("simulate", "one chain with snapshots and an optional event log");
  add_model(simulate);
  simulate->add_option("--horizon", o.horizon, "end time (default 2 L^2 log L / pi^2)");
  simulate->add_option("--start", o.start, "wedge, vee, eq or a path file");
  simulate->add_option("--points", o.points, "snapshot count");
  simulate->add_option("--events", o.events, "event log CSV");
  simulate->add_flag("--censor", o.censor, "censor contact changes on [0, t_{delta/2})");
  simulate->add_option("--delta", o.delta, "t_delta parameter");
  simulate->add_option("--beta", o.beta, "cosine weight parameter (default from delta)");

  auto* coalesce = app.add_subcommand("coalesce", "coalescence-time replicas (JSON summary)");
  add_model(coalesce);
  coalesce->add_option("--replicas", o.replicas, "replicas");
  coalesce->add_option("--horizon", o.horizon, "horizon in units of L^2 log L / pi^2 (default 4)");
  coalesce->add_option("--delta", o.delta, "t_delta parameter");
  coalesce->add_option("--epsilon", o.epsilon, "thresholds")->delimiter(',');

  auto* censor = app.add_subcommand("censor", "censored versus plain wedge chains (JSON)");
  add_model(censor);
  censor->add_option("--replicas", o.replicas, "replicas");
  censor->add_option("--delta", o.delta, "t_delta parameter");
  censor->add_option("--points", o.points, "grid points");
  censor->add_option("--times", o.times, "time grid")->delimiter(',');

  auto* vee = app.add_subcommand("vee", "contact profile of vee chains at s0 (JSON)");
  add_model(vee);
  vee->add_option("--replicas", o.replicas, "replicas");
  vee->add_option("--M", o.M, "boundary margins")->delimiter(',');
  vee->add_option("--s0-factor", o.s0_factor, "s0 = factor L^{16/9} log L");

  auto* sep = app.add_subcommand("sep", "no-wall comparison sandwich (JSON)");
  add_model(sep);
  sep->add_option("--horizon", o.horizon, "end time (default 2 L^2 log L / pi^2)");
  sep->add_option("--m", o.m, "lift height (default 2 ceil(sqrt(L) (log L)^2 / 2))");
  sep->add_option("--seeds", o.seeds, "consecutive seeds");

  auto* bracket = app.add_subcommand("bracket", "A-process diagnostics of the wedge against an equilibrium chain (JSON)");
  add_model(bracket);
  bracket->add_option("--delta", o.delta, "t_delta parameter");
  bracket->add_option("--beta", o.beta, "cosine weight parameter (default from delta)");
  bracket->add_option("--eta", o.eta, "threshold spacing (default from delta)");
  bracket->add_option("--horizon", o.horizon, "end time (default 4 L^2 log L / pi^2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!mix->parsed()) apply_threads(o.threads);
    if (sample->parsed()) return cmd_sample(o);
    if (exact->parsed()) return cmd_exact(o);
    if (mix->parsed()) return cmd_mix(o, mix_seed->count() > 0);
    if (simulate->parsed()) return cmd_simulate(o);
    if (coalesce->parsed()) return cmd_coalesce(o);
    if (censor->parsed()) return cmd_censor(o);
    if (vee->parsed()) return cmd_vee(o);
    if (sep->parsed()) return cmd_sep(o);
    if (bracket->parsed()) return cmd_bracket(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return kExitUsage;
}
