#include <benchmark/benchmark.h>

#include "rbmpc/integrator.hpp"
#include "rbmpc/sampler.hpp"
#include "rbmpc/system_model.hpp"

namespace {

using namespace rbmpc;

// One CN step under the full ring generator (sparse LU path).
void BM_CnStepFullRing(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto [prob, split] = heat_ring_example(n);
  (void)split;
  CnFactorization fact(prob.A, 1.0);
  Vector x = Vector::Ones(n);
  for (auto _ : state) {
    x = fact.solve(fact.apply_plus(x));
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations());
}

// One CN step under a ring-cut RBM piece (banded path).
void BM_CnStepRingCut(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto [prob, split] = heat_ring_example(n);
  (void)prob;
  CnFactorization fact(split.assemble(0), 1.0);
  Vector x = Vector::Ones(n);
  for (auto _ : state) {
    x = fact.solve(fact.apply_plus(x));
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_RingCutFactorize(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto [prob, split] = heat_ring_example(n);
  (void)prob;
  const SpMat piece = split.assemble(1);
  for (auto _ : state) {
    CnFactorization fact(piece, 1.0);
    benchmark::DoNotOptimize(&fact);
  }
}

}  // namespace

BENCHMARK(BM_CnStepFullRing)->Arg(101)->Arg(1001);
BENCHMARK(BM_CnStepRingCut)->Arg(101)->Arg(1001);
BENCHMARK(BM_RingCutFactorize)->Arg(101)->Arg(1001);
