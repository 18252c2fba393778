// Copyright 2026 The exteam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reference tuple enumeration against the count-DP kernels, plus Monte Carlo
// throughput at the current OpenMP thread count.

#include <benchmark/benchmark.h>

#include "exteam/evaluation.hpp"
#include "exteam/kernels.hpp"
#include "exteam/optimization.hpp"
#include "exteam/policy.hpp"
#include "exteam/team_model.hpp"

namespace {

using namespace exteam;

StaticTeam bench_static_team(std::size_t n) {
  PolynomialStageCost cost;
  cost.coeffs = {{{0.1, 0.4, 1.0}, {0.3, 0.2, 0.5}, {0.0, 1.0, 0.0}},
                 {{0.2, 0.1, 0.4}, {0.3, 0.6, 0.1}, {0.5, 0.0, 0.7}}};
  return StaticTeam(FiniteSpace({"lo", "hi"}), {0.4, 0.6}, FiniteSpace({"a", "b"}),
                    FiniteSpace::numeric({0.0, 0.5, 1.0}),
                    StochasticMatrix::from_rows({{0.7, 0.3}, {0.2, 0.8}}), cost, n);
}

PolicyProfile bench_profile(std::size_t n, std::size_t stages, std::size_t obs,
                            std::size_t actions) {
  PolicyProfile profile;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> probs(stages * obs * actions);
    for (std::size_t r = 0; r < stages * obs; ++r) {
      double total = 0.0;
      for (std::size_t u = 0; u < actions; ++u) {
        const double v = 1.0 + static_cast<double>((i + r + u) % 3);
        probs[r * actions + u] = v;
        total += v;
      }
      for (std::size_t u = 0; u < actions; ++u) probs[r * actions + u] /= total;
    }
    profile.emplace_back(stages, obs, actions, probs);
  }
  return profile;
}

DynamicTeam bench_dynamic_team(std::size_t n) {
  DynamicTeamData d;
  d.horizon = 2;
  d.omega0 = FiniteSpace({"w"});
  d.prior = {1.0};
  d.states = FiniteSpace::numeric({0.0, 1.0});
  d.observations = FiniteSpace({"0", "1"});
  d.actions = FiniteSpace::numeric({0.0, 1.0});
  d.init_kernel = StochasticMatrix::from_rows({{0.5, 0.5}});
  d.dyn_noise = FiniteSpace({"keep", "flip"});
  d.dyn_noise_probs = {0.9, 0.1};
  d.obs_noise = FiniteSpace({"v"});
  d.obs_noise_probs = {1.0};
  TransitionTable table;
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t w = 0; w < 2; ++w) table.next.push_back(w == 0 ? u : 1 - u);
  d.dynamics = table;
  const auto noisy = StochasticMatrix::from_rows({{0.8, 0.2}, {0.2, 0.8}});
  d.observation = ObservationKernels{{noisy, noisy}};
  QuadraticDynamicCost cost;
  cost.mean_state_weight = 0.5;
  d.cost = cost;
  d.num_dms = n;
  return DynamicTeam(std::move(d));
}

void BM_StaticReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto team = bench_static_team(n);
  const auto profile = bench_profile(n, 1, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(reference::static_cost(team, profile));
}
BENCHMARK(BM_StaticReference)->DenseRange(2, 6);

void BM_StaticCountDp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto team = bench_static_team(n);
  const auto profile = bench_profile(n, 1, 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::static_cost(team, profile));
}
BENCHMARK(BM_StaticCountDp)->DenseRange(2, 6)->Arg(16)->Arg(64);

void BM_DynamicReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto team = bench_dynamic_team(n);
  const auto profile = bench_profile(n, 2, 2, 2);
  const auto obs = direct_obs_law(team);
  for (auto _ : state) benchmark::DoNotOptimize(reference::dynamic_cost(team, profile, obs));
}
BENCHMARK(BM_DynamicReference)->DenseRange(1, 4);

void BM_DynamicGrouped(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto team = bench_dynamic_team(n);
  const auto profile = bench_profile(n, 2, 2, 2);
  const auto obs = direct_obs_law(team);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::dynamic_cost(team, profile, obs));
}
BENCHMARK(BM_DynamicGrouped)->DenseRange(1, 4)->Arg(8);

void BM_StaticMonteCarlo(benchmark::State& state) {
  const auto team = bench_static_team(8);
  const auto mixture = Mixture::iid(bench_profile(1, 1, 2, 3).front(), 8);
  McSettings mc;
  mc.samples = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(expected_cost_static_mc(team, mixture, mc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StaticMonteCarlo)->Arg(1 << 16);

void BM_BruteForceHalfSplit(benchmark::State& state) {
  const auto team = half_split_team(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_dirac(team).best_value);
}
BENCHMARK(BM_BruteForceHalfSplit)->Arg(8)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
