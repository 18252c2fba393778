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
#ifndef EXTEAM_EVALUATION_HPP_
#define EXTEAM_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exteam/parallel.hpp"
#include "exteam/policy.hpp"
#include "exteam/team_model.hpp"

namespace exteam {

struct CostEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = false;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

std::string cost_estimate_csv_header();
// value,std_error,exact,samples,seed with shortest round-trip reals.
std::string to_csv_row(const CostEstimate& estimate);

// Upper bound on enumeration work for one exact evaluation.
inline constexpr double kExactWorkBudget = 1e8;
// Reduction weights above this indicate a badly chosen reference measure.
inline constexpr double kMaxReductionWeight = 1e6;

struct McSettings {
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 0;
  std::size_t chunk_size = kDefaultChunkSize;
};

enum class EvalMode { kExact, kMonteCarlo };

// Exact E_P[(1/N) sum_i c(omega0, u^i, mean u)].
CostEstimate expected_cost_static_exact(const StaticTeam& team, const Mixture& mixture);

// Sample i is drawn from stream (seed, i / chunk_size) in the order atom,
// omega0, per-DM observation, per-DM action. Results do not depend on the
// thread count.
CostEstimate expected_cost_static_mc(const StaticTeam& team, const Mixture& mixture,
                                     const McSettings& mc);

// Expected (1/N) sum_t sum_i c_t over the horizon. Monte Carlo draws atom,
// omega0, initial states, then per stage per-DM observations, actions and
// dynamics noise.
CostEstimate expected_cost_dynamic(const DynamicTeam& team, const Mixture& mixture, EvalMode mode,
                                   const McSettings& mc = {});

// Same cost under the change of measure: observations are drawn from the
// reference measure and the cost is weighted by prod_{t,i} psi_t.
CostEstimate expected_cost_reduced(const DynamicTeam& team, const ReductionData& reduction,
                                   const Mixture& mixture, EvalMode mode,
                                   const McSettings& mc = {});

struct EmpiricalMeasure {
  std::vector<std::pair<double, double>> atoms;  // (point, 1/n)
  double mean = 0.0;

  // Mass on each point of a finite space.
  std::vector<double> law(const FiniteSpace& space) const;
};

EmpiricalMeasure empirical_action_measure(std::span<const std::size_t> actions,
                                          const FiniteSpace& space);

// 1/2 sum_k |p_k - q_k| over a common index set.
double tv_distance(std::span<const double> p, std::span<const double> q);

}  // namespace exteam

#endif  // EXTEAM_EVALUATION_HPP_
