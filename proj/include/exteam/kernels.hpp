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
#ifndef EXTEAM_KERNELS_HPP_
#define EXTEAM_KERNELS_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "exteam/policy.hpp"
#include "exteam/team_model.hpp"

// Exact expected cost of a single policy profile.
//
// reference:: enumerates observation, action and noise tuples DM by DM and is
// kept as the test oracle. kernels:: exploits exchangeability of the cost: the
// static kernel runs a DP over action-count vectors, the dynamic kernel over
// per-group state-count vectors where a group is a set of DMs sharing a
// kernel. Both return E[(1/N) sum_{t,i} c] for one profile.

namespace exteam {

// sum_k counts[k] values[k] / n; every evaluator computes empirical means this
// way so threshold dynamics agree bitwise across evaluators.
double mean_from_counts(std::span<const double> values, std::span<const std::size_t> counts,
                        std::size_t n);

// Observation law at stage t given (omega0, state): the team's own nu_t for the
// direct cost, tau_t(y) psi_t(y, omega0, x) for the reduced cost.
using ObsLawFn =
    std::function<double(std::size_t t, std::size_t omega0, std::size_t state, std::size_t y)>;

ObsLawFn direct_obs_law(const DynamicTeam& team);

namespace reference {

double static_work(const StaticTeam& team);
double static_cost(const StaticTeam& team, const PolicyProfile& profile);

double dynamic_work(const DynamicTeam& team);
double dynamic_cost(const DynamicTeam& team, const PolicyProfile& profile, const ObsLawFn& obs);

}  // namespace reference

namespace kernels {

double static_work(const StaticTeam& team);
double static_cost(const StaticTeam& team, const PolicyProfile& profile);
// N i.i.d. copies of one row-major |Y| x |U| kernel. Rows are not checked or
// normalized: the result is the polynomial extension of the cost.
double static_cost_iid_raw(const StaticTeam& team, std::span<const double> kernel_probs);

double dynamic_work(const DynamicTeam& team, const PolicyProfile& profile);
double dynamic_cost(const DynamicTeam& team, const PolicyProfile& profile, const ObsLawFn& obs);

}  // namespace kernels
}  // namespace exteam

#endif  // EXTEAM_KERNELS_HPP_
