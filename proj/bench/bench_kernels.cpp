// Serial reference kernels against their OpenMP versions.
#include <benchmark/benchmark.h>

#include "pinmix/exact.hpp"
#include "pinmix/experiments.hpp"

using namespace pinmix;

namespace {

ExperimentConfig farm_config(int L, int replicas) {
  ExperimentConfig c;
  c.L = {L};
  c.replicas = replicas;
  c.grid = {0.0};
  c.lower_until = 0.0;
  return c;
}

void BM_ReplicaFarm(benchmark::State& state, Execution ex) {
  const int L = static_cast<int>(state.range(0));
  const auto cfg = farm_config(L, 32);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_tau_distribution(cfg, L, 1.0, ex).samples.data());
  state.SetItemsProcessed(state.iterations() * cfg.replicas);
}
BENCHMARK_CAPTURE(BM_ReplicaFarm, serial, Execution::serial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ReplicaFarm, parallel, Execution::parallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

struct MatvecFixture {
  explicit MatvecFixture(int L) : idx(StateSpaceIndex::enumerate(L)), gen(idx, {L, 1.0}), p(equilibrium_vector(idx, 0.5)), out(idx.size()) {}
  StateSpaceIndex idx;
  SparseGenerator gen;
  std::vector<double> p, out;
};

void BM_ApplyLeftSerial(benchmark::State& state) {
  MatvecFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    f.gen.apply_left_serial(f.p, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.gen.nonzeros()));
}
void BM_ApplyLeftParallel(benchmark::State& state) {
  MatvecFixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    f.gen.apply_left(f.p, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.gen.nonzeros()));
}
BENCHMARK(BM_ApplyLeftSerial)->Arg(18)->Arg(22)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ApplyLeftParallel)->Arg(18)->Arg(22)->Unit(benchmark::kMicrosecond);

void BM_HeatBath(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  RngStream rng(1, 0);
  const auto bottom = minimal_path(L);
  std::vector<int> h(bottom.heights().begin(), bottom.heights().end());
  const double duration = 1000.0;
  for (auto _ : state) {
    heat_bath_run(h, 1.5, true, duration, rng);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * duration * (L - 1)));
}
BENCHMARK(BM_HeatBath)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
