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
#ifndef EXTEAM_OPTIMIZATION_HPP_
#define EXTEAM_OPTIMIZATION_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "exteam/evaluation.hpp"
#include "exteam/policy.hpp"
#include "exteam/team_model.hpp"

namespace exteam {

enum class OptMethod {
  kBruteForce,
  kGrid,
  kProjectedGradient,
  kProductGrid,
  kExchangeableGrid,
  kCrossEntropy,
};

std::string_view to_string(OptMethod method);

struct OptResult {
  double best_value = 0.0;
  Mixture best_policy;
  std::uint64_t evaluations = 0;
  OptMethod method = OptMethod::kBruteForce;
  std::size_t restarts = 0;
  bool converged = true;
  // Cross-entropy only: elite mean after each iteration (index 0 = initial
  // population).
  std::vector<double> elite_means;
};

// Ties within this absolute tolerance keep the lexicographically first
// candidate.
inline constexpr double kTieTol = 1e-12;
inline constexpr double kProfileBudget = 1e7;

// Number of permutation orbits of deterministic profiles, C(P + N - 1, N) with
// P = |U|^(|Y| T).
double deterministic_orbit_count(std::uint64_t policies, std::size_t n);

// Minimum over deterministic profiles. The cost is permutation invariant, so
// one sorted representative per orbit is evaluated; the returned profile is
// the lexicographically first minimizer in policy numbering.
OptResult brute_force_dirac(const StaticTeam& team);
OptResult brute_force_dirac(const DynamicTeam& team);

struct SymmetricOptions {
  enum class Method { kAuto, kGrid, kProjectedGradient };
  Method method = Method::kAuto;
  double pitch = 1.0 / 64;
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  double tol = 1e-7;
  double fd_step = 1e-5;
  std::size_t max_iterations = 1000;
  // kAuto uses the grid when it has at most this many kernels.
  std::size_t auto_grid_limit = 4096;
};

inline constexpr std::size_t kMaxGradientParameters = 64;

// Minimum over i.i.d. profiles gamma^{(x) N}.
OptResult optimize_symmetric_kernel(const StaticTeam& team, const SymmetricOptions& options = {});

// Projected-gradient norm ||x - P(x - grad)|| of the symmetric objective at a
// kernel, by central differences of the given step.
double symmetric_projected_gradient_norm(const StaticTeam& team, const RelaxedKernel& kernel,
                                         double fd_step = 1e-5);

// Grid search over independent, possibly asymmetric, kernels for each DM.
OptResult optimize_product_grid(const StaticTeam& team, double pitch);

inline constexpr double kExchangeableGridBudget = 1e6;

// Grid search over exchangeable mixtures sum_k w_k symmetrize(delta_k) of
// deterministic orbits with weights on the pitch grid; each candidate is
// built and evaluated as a mixture.
OptResult optimize_exchangeable_grid(const StaticTeam& team, double pitch = 1.0 / 8);

struct SymmetricGap {
  double eps = 0.0;
  double j_sym = 0.0;
  double j_det = 0.0;
};

// eps = J_sym - J_det; values in [-1e-9, 0) are reported as 0, smaller ones
// raise an Error.
SymmetricGap symmetric_gap(const StaticTeam& team, const SymmetricOptions& options = {});

struct CrossEntropyOptions {
  std::size_t population = 48;
  std::size_t elites = 8;
  std::size_t iterations = 40;
  std::uint64_t seed = 0;
  double smoothing = 0.7;
  double initial_concentration = 4.0;
  double concentration_growth = 1.2;
  double concentration_floor = 0.05;
  // Exact evaluation when one candidate needs at most this much work,
  // otherwise Monte Carlo with common random numbers within an iteration.
  double exact_work_limit = 2e5;
  std::uint64_t mc_samples = 20'000;
  std::size_t chunk_size = kDefaultChunkSize;
};

// Cross-entropy search over per-stage symmetric kernels. Elites survive into
// the next population, so the elite mean never increases.
OptResult optimize_symmetric_dynamic(const DynamicTeam& team,
                                     const CrossEntropyOptions& options = {});

}  // namespace exteam

#endif  // EXTEAM_OPTIMIZATION_HPP_
