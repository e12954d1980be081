// Serial reference vs OpenMP kernels on dense random MDPs.

#include <benchmark/benchmark.h>

#include "mimic/kernels.hpp"

namespace {

using namespace mimic;

TabularMDP bench_mdp(std::size_t states) {
  Rng rng(42);
  return make_random_mdp(states, 4, 20, rng);
}

template <kernels::BackupFn Fn>
void BM_SoftBackup(benchmark::State& state) {
  const auto mdp = bench_mdp(static_cast<std::size_t>(state.range(0)));
  kernels::RewardTable reward{mdp.rewards(), false, mdp.state_count(), mdp.action_count()};
  for (auto _ : state) benchmark::DoNotOptimize(Fn(mdp, reward, 1.0));
}

template <kernels::OccupancyFn Fn>
void BM_Occupancy(benchmark::State& state) {
  const auto mdp = bench_mdp(static_cast<std::size_t>(state.range(0)));
  const TabularPolicy uniform(mdp.horizon(), mdp.state_count(), mdp.action_count());
  for (auto _ : state) benchmark::DoNotOptimize(Fn(mdp, uniform.table()));
}

template <bool Parallel>
void BM_Rollouts(benchmark::State& state) {
  const auto env = make_env("gridworld-5x5", SeedStream(0));
  const UniformPolicy policy(env->obs_dim(), env->action_count());
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto trajs = Parallel ? kernels::omp::rollouts(policy, *env, n, SeedStream(1))
                          : kernels::serial::rollouts(policy, *env, n, SeedStream(1));
    benchmark::DoNotOptimize(trajs);
  }
}

}  // namespace

BENCHMARK(BM_SoftBackup<mimic::kernels::serial::backup>)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_SoftBackup<mimic::kernels::omp::backup>)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_Occupancy<mimic::kernels::serial::occupancy>)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_Occupancy<mimic::kernels::omp::occupancy>)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(BM_Rollouts<false>)->Arg(64)->Arg(1024);
BENCHMARK(BM_Rollouts<true>)->Arg(64)->Arg(1024);

BENCHMARK_MAIN();
