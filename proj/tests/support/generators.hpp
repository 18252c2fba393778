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

#ifndef EXTEAM_TESTS_SUPPORT_GENERATORS_HPP_
#define EXTEAM_TESTS_SUPPORT_GENERATORS_HPP_

#include <cstddef>
#include <random>
#include <vector>

#include "exteam/policy.hpp"
#include "exteam/rng.hpp"
#include "exteam/team_model.hpp"

namespace exteam::testing {

inline std::vector<double> random_simplex(std::size_t k, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) total += (v = e(rng));
  for (auto& v : p) v /= total;
  return p;
}

inline StochasticMatrix random_stochastic(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<std::vector<double>> r(rows);
  for (auto& row : r) row = random_simplex(cols, rng);
  return StochasticMatrix::from_rows(r);
}

inline RelaxedKernel random_kernel(std::size_t stages, std::size_t obs, std::size_t actions,
                                   Rng& rng) {
  std::vector<double> probs;
  for (std::size_t r = 0; r < stages * obs; ++r) {
    auto row = random_simplex(actions, rng);
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return RelaxedKernel(stages, obs, actions, probs);
}

inline DeterministicPolicy random_deterministic(std::size_t stages, std::size_t obs,
                                                std::size_t actions, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, actions - 1);
  std::vector<std::size_t> table(stages * obs);
  for (auto& a : table) a = pick(rng);
  return DeterministicPolicy(stages, obs, actions, table);
}

// Polynomial mean-field cost of degree two with random nonnegative
// coefficients; the joint cost is exchangeable by construction.
inline StaticTeam random_static_team(std::size_t n, Rng& rng, std::size_t omega0 = 2,
                                     std::size_t obs = 2, std::size_t actions = 2) {
  std::uniform_real_distribution<double> coef(0.0, 1.0);
  PolynomialStageCost cost;
  cost.coeffs.assign(omega0, std::vector<std::vector<double>>(actions, std::vector<double>(3)));
  for (auto& w : cost.coeffs)
    for (auto& u : w)
      for (auto& c : u) c = coef(rng);
  std::vector<double> values(actions);
  for (std::size_t a = 0; a < actions; ++a) values[a] = static_cast<double>(a);
  return StaticTeam(FiniteSpace::indexed(omega0, "w"), random_simplex(omega0, rng),
                    FiniteSpace::indexed(obs, "y"), FiniteSpace::numeric(values),
                    random_stochastic(omega0, obs, rng), cost, n);
}

// Random profiles of relaxed kernels with Dirichlet weights.
inline Mixture random_mixture(std::size_t n, std::size_t atoms, std::size_t stages,
                              std::size_t obs, std::size_t actions, Rng& rng,
                              bool deterministic = false) {
  const auto w = random_simplex(atoms, rng);
  std::vector<MixtureAtom> out;
  for (std::size_t a = 0; a < atoms; ++a) {
    PolicyProfile profile;
    for (std::size_t i = 0; i < n; ++i) {
      profile.push_back(deterministic ? random_deterministic(stages, obs, actions, rng).to_kernel()
                                      : random_kernel(stages, obs, actions, rng));
    }
    out.push_back({w[a], std::move(profile)});
  }
  return Mixture(std::move(out));
}

// Two states, two observations, two actions, two noise values. Observations
// come from random per-stage kernels, transitions from a random table.
inline DynamicTeam random_dynamic_team(std::size_t n, std::size_t horizon, Rng& rng,
                                       bool threshold = false) {
  constexpr std::size_t kX = 2, kU = 2, kW = 2, kY = 2;
  DynamicTeamData d;
  d.horizon = horizon;
  d.omega0 = FiniteSpace::indexed(2, "w");
  d.prior = random_simplex(2, rng);
  d.states = FiniteSpace::numeric({0.0, 1.0});
  d.observations = FiniteSpace::indexed(kY, "y");
  d.actions = FiniteSpace::numeric({0.0, 1.0});
  d.init_kernel = random_stochastic(2, kX, rng);
  d.dyn_noise = FiniteSpace::indexed(kW, "n");
  d.dyn_noise_probs = random_simplex(kW, rng);
  d.obs_noise = FiniteSpace::indexed(1, "v");
  d.obs_noise_probs = {1.0};
  std::uniform_int_distribution<std::size_t> pick(0, kX - 1);
  TransitionTable table;
  table.next.resize(horizon * kX * kU * kW);
  for (auto& x : table.next) x = pick(rng);
  if (threshold) {
    table.threshold = 0.5;
    table.next_above.resize(table.next.size());
    for (auto& x : table.next_above) x = pick(rng);
  }
  d.dynamics = table;
  ObservationKernels obs;
  for (std::size_t t = 0; t < horizon; ++t) obs.kernels.push_back(random_stochastic(kX, kY, rng));
  d.observation = obs;
  std::uniform_real_distribution<double> weight(0.0, 1.0);
  QuadraticDynamicCost cost;
  cost.action_target = weight(rng);
  cost.state_target = weight(rng);
  cost.mean_action_weight = weight(rng);
  cost.mean_state_weight = weight(rng);
  cost.private_action_weight = weight(rng);
  cost.state_weight = weight(rng);
  d.cost = cost;
  d.num_dms = n;
  return DynamicTeam(std::move(d));
}

}  // namespace exteam::testing

#endif  // EXTEAM_TESTS_SUPPORT_GENERATORS_HPP_
