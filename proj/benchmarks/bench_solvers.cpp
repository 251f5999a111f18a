#include <benchmark/benchmark.h>

#include "rbmpc/mpc.hpp"
#include "rbmpc/ocp.hpp"
#include "rbmpc/riccati.hpp"

namespace {

using namespace rbmpc;

void BM_OcpWindow(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto [prob, split] = heat_ring_example(n);
  (void)split;
  ConstantSparseGenerator gen(prob.A, kKeyProblemA);
  const TimeGrid grid{0.0, 1.0, 15};
  for (auto _ : state) {
    CnCache cache;
    OcpResult res = solve_ocp(prob, gen, prob.x0, grid, cache);
    benchmark::DoNotOptimize(res.cost);
  }
}

void BM_RbmMpcRealization(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto [prob, split] = heat_ring_example(n);
  HorizonPlan plan;
  plan.t_end = 50.0;
  std::uint64_t realization = 0;
  for (auto _ : state) {
    CnCache cache;
    MpcRun run = run_rbm_mpc(prob, split, plan, 1, realization++, {}, &cache);
    benchmark::DoNotOptimize(run.trajectory.states.data());
  }
}

void BM_AreSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto [prob, split] = heat_ring_example(n);
  (void)split;
  for (auto _ : state) {
    StabilizedLoop loop = solve_are(prob);
    benchmark::DoNotOptimize(loop.mu_inf);
  }
}

}  // namespace

BENCHMARK(BM_OcpWindow)->Arg(101)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RbmMpcRealization)->Arg(101)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AreSolve)->Arg(11)->Arg(101)->Unit(benchmark::kMillisecond);
