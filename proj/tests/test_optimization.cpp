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

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "exteam/error.hpp"
#include "exteam/evaluation.hpp"
#include "exteam/kernels.hpp"
#include "exteam/optimization.hpp"
#include "exteam/parallel.hpp"
#include "support/generators.hpp"

using namespace exteam;

namespace {

struct Naive {
  double value;
  std::vector<std::uint64_t> ids;
};

// Full enumeration of every (unsorted) deterministic profile.
Naive naive_dirac(const StaticTeam& team) {
  const std::size_t n = team.num_dms();
  const auto P = DeterministicPolicy::count(1, team.observations().size(), team.actions().size());
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= P;
  Naive best{INFINITY, {}};
  for (std::uint64_t code = 0; code < total; ++code) {
    std::vector<std::uint64_t> ids(n);
    std::uint64_t c = code;
    for (std::size_t i = n; i-- > 0;) {
      ids[i] = c % P;
      c /= P;
    }
    PolicyProfile profile;
    for (auto id : ids) {
      profile.push_back(DeterministicPolicy::from_index(id, 1, team.observations().size(),
                                                        team.actions().size())
                            .to_kernel());
    }
    const double v = reference::static_cost(team, profile);
    if (v < best.value - kTieTol) best = {v, ids};
  }
  return best;
}

std::vector<std::uint64_t> profile_ids(const Mixture& mix) {
  std::vector<std::uint64_t> ids;
  for (const auto& k : mix.atoms().front().profile) {
    ids.push_back(DeterministicPolicy::from_kernel(k)->index());
  }
  return ids;
}

}  // namespace

TEST_CASE("orbit counts") {
  CHECK(deterministic_orbit_count(2, 8) == 9.0);
  CHECK(deterministic_orbit_count(4, 3) == 20.0);
  CHECK(deterministic_orbit_count(16, 4) == 3876.0);
}

TEST_CASE("brute force on the half-split family") {
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto r = brute_force_dirac(half_split_team(n));
    const double expect = n % 2 == 0 ? 0.0 : 1.0 / (4.0 * n * n);
    CHECK(r.best_value == doctest::Approx(expect).epsilon(1e-15));
    CHECK(r.method == OptMethod::kBruteForce);
    CHECK(r.evaluations == n + 1);
    CHECK(r.best_policy.tag() == MixtureClass::kDirac);
  }
  const auto ids = profile_ids(brute_force_dirac(half_split_team(4)).best_policy);
  CHECK(ids == std::vector<std::uint64_t>{0, 0, 1, 1});
}

TEST_CASE("orbit enumeration finds the lexicographically first global minimizer") {
  Rng rng(101);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 1 + rep % 4;
    const auto team = testing::random_static_team(n, rng, 2, 2, 2 + rep % 2);
    const auto fast = brute_force_dirac(team);
    const auto slow = naive_dirac(team);
    CHECK(fast.best_value == doctest::Approx(slow.value).epsilon(1e-12));
    CHECK(profile_ids(fast.best_policy) == slow.ids);
  }
}

TEST_CASE("dynamic brute force agrees with the static one through the wrapper") {
  Rng rng(103);
  for (int rep = 0; rep < 8; ++rep) {
    const auto team = testing::random_static_team(1 + rep % 4, rng);
    CHECK(brute_force_dirac(DynamicTeam::from_static(team)).best_value ==
          doctest::Approx(brute_force_dirac(team).best_value).epsilon(1e-12));
  }
}

TEST_CASE("brute force refuses oversized enumerations") {
  std::vector<double> values(4);
  for (std::size_t k = 0; k < 4; ++k) values[k] = static_cast<double>(k);
  const StaticTeam big(FiniteSpace({"w"}), {1.0}, FiniteSpace::indexed(4, "y"),
                       FiniteSpace::numeric(values),
                       StochasticMatrix::from_rows({{0.25, 0.25, 0.25, 0.25}}),
                       QuadraticStageCost{}, 8);
  CHECK_THROWS_AS(brute_force_dirac(big), BudgetError);
}

TEST_CASE("symmetric optimum of the half-split family") {
  SymmetricOptions grid;
  grid.method = SymmetricOptions::Method::kGrid;
  SymmetricOptions pg;
  pg.method = SymmetricOptions::Method::kProjectedGradient;
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto team = half_split_team(n);
    const double expect = n == 1 ? 0.25 : 1.0 / (4.0 * n);
    const auto a = optimize_symmetric_kernel(team, grid);
    const auto b = optimize_symmetric_kernel(team, pg);
    CHECK(a.best_value == doctest::Approx(expect).epsilon(1e-12));
    CHECK(b.best_value == doctest::Approx(expect).epsilon(1e-9));
    CHECK(a.method == OptMethod::kGrid);
    CHECK(b.method == OptMethod::kProjectedGradient);
    CHECK(b.converged);
    CHECK(a.best_policy.tag() != MixtureClass::kGeneral);
    if (n >= 2) {
      const auto& k = b.best_policy.atoms().front().profile.front();
      CHECK(k.prob(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-5));
    }
  }
}

TEST_CASE("one DM sees a flat symmetric objective") {
  const auto team = half_split_team(1);
  for (double p : {0.0, 0.3, 0.5, 1.0}) {
    const auto k = RelaxedKernel::bernoulli(p);
    CHECK(expected_cost_static_exact(team, Mixture::iid(k, 1)).value ==
          doctest::Approx(0.25).epsilon(1e-15));
    CHECK(symmetric_projected_gradient_norm(team, k) < 1e-9);
  }
}

TEST_CASE("projected gradient beats a coarse grid on random teams") {
  Rng rng(107);
  SymmetricOptions coarse;
  coarse.method = SymmetricOptions::Method::kGrid;
  coarse.pitch = 1.0 / 16;
  SymmetricOptions pg;
  pg.method = SymmetricOptions::Method::kProjectedGradient;
  for (int rep = 0; rep < 15; ++rep) {
    const auto team = testing::random_static_team(2 + rep % 3, rng);
    const auto g = optimize_symmetric_kernel(team, coarse);
    const auto p = optimize_symmetric_kernel(team, pg);
    CHECK(p.best_value <= g.best_value + 1e-9);
    const auto& k = p.best_policy.atoms().front().profile.front();
    CHECK(symmetric_projected_gradient_norm(team, k) < 1e-5);
    CHECK(expected_cost_static_exact(team, p.best_policy).value ==
          doctest::Approx(p.best_value).epsilon(1e-12));
  }
}

TEST_CASE("symmetric gap is nonnegative and decays on the half-split family") {
  double prev = INFINITY;
  for (std::size_t n = 2; n <= 12; n += 2) {
    const auto gap = symmetric_gap(half_split_team(n));
    CHECK(gap.eps >= 0.0);
    CHECK(gap.eps * 4.0 * n == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(gap.eps < prev);
    prev = gap.eps;
  }
}

TEST_CASE("product grid is never below the deterministic optimum") {
  Rng rng(109);
  for (int rep = 0; rep < 10; ++rep) {
    const auto team = testing::random_static_team(1 + rep % 3, rng);
    const double det = brute_force_dirac(team).best_value;
    const auto quarter = optimize_product_grid(team, 0.25);
    CHECK(quarter.best_value >= det - 1e-9);
    CHECK(quarter.best_value == doctest::Approx(det).epsilon(1e-9));
    CHECK(optimize_product_grid(team, 1.0).best_value == doctest::Approx(det).epsilon(1e-12));
  }
}

TEST_CASE("exchangeable grid attains the symmetrized deterministic optimum") {
  Rng rng(113);
  for (int rep = 0; rep < 10; ++rep) {
    const auto team = testing::random_static_team(1 + rep % 3, rng);
    const auto det = brute_force_dirac(team);
    const double sym_cost = expected_cost_static_exact(team, symmetrize(det.best_policy)).value;
    CHECK(sym_cost == doctest::Approx(det.best_value).epsilon(1e-12));
    const auto ex = optimize_exchangeable_grid(team, 0.5);
    CHECK(ex.best_value >= det.best_value - 1e-9);
    CHECK(ex.best_value == doctest::Approx(det.best_value).epsilon(1e-12));
    CHECK(is_exchangeable(ex.best_policy));
  }
}

TEST_CASE("cross-entropy on the wrapped half-split team") {
  const auto team = DynamicTeam::from_static(half_split_team(2));
  CrossEntropyOptions opts;
  opts.seed = 3;
  const auto r = optimize_symmetric_dynamic(team, opts);
  CHECK(r.method == OptMethod::kCrossEntropy);
  CHECK(r.best_value == doctest::Approx(0.125).epsilon(1e-3));
  REQUIRE(r.elite_means.size() == opts.iterations + 1);
  for (std::size_t k = 1; k < r.elite_means.size(); ++k) {
    CHECK(r.elite_means[k] <= r.elite_means[k - 1] + 1e-15);
  }
  const auto again = optimize_symmetric_dynamic(team, opts);
  CHECK(again.best_value == r.best_value);
}

TEST_CASE("cross-entropy does not depend on the thread count") {
  Rng rng(127);
  const auto team = testing::random_dynamic_team(3, 2, rng);
  CrossEntropyOptions opts;
  opts.iterations = 6;
  opts.exact_work_limit = 0.0;
  opts.mc_samples = 2000;
  const int before = num_threads();
  set_num_threads(1);
  const auto a = optimize_symmetric_dynamic(team, opts);
  set_num_threads(3);
  const auto b = optimize_symmetric_dynamic(team, opts);
  set_num_threads(before);
  CHECK(a.best_value == b.best_value);
  CHECK(a.elite_means == b.elite_means);
}

TEST_CASE("a single action forces every class to the same value") {
  const auto team = constant_cost_team(3, 0.4, 1);
  const auto gap = symmetric_gap(team);
  CHECK(gap.eps == 0.0);
  CHECK(gap.j_sym == doctest::Approx(0.4));
  CHECK(gap.j_det == doctest::Approx(0.4));
  CHECK(optimize_symmetric_kernel(team).best_value == doctest::Approx(0.4));
}

TEST_CASE("half-split symmetric gap examples") {
  const auto two = symmetric_gap(half_split_team(2));
  CHECK(two.j_sym == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(two.j_det == 0.0);
  const auto four = symmetric_gap(half_split_team(4));
  CHECK(four.eps == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(brute_force_dirac(half_split_team(3)).best_value == doctest::Approx(1.0 / 36).epsilon(1e-15));
  CHECK(brute_force_dirac(half_split_team(1)).best_value == 0.25);
  const auto quarter = optimize_product_grid(half_split_team(2), 0.25);
  CHECK(quarter.best_value == 0.0);
  for (const auto& k : quarter.best_policy.atoms().front().profile) CHECK(k.is_deterministic());
}

TEST_CASE("cross-entropy starts at zero on a zero-cost team") {
  const auto team = DynamicTeam::from_static(constant_cost_team(2, 0.0));
  CrossEntropyOptions opts;
  opts.iterations = 3;
  const auto r = optimize_symmetric_dynamic(team, opts);
  CHECK(r.elite_means.front() == 0.0);
  CHECK(r.best_value == 0.0);
}

TEST_CASE("cross-entropy stays above the deterministic optimum on a tiny dynamic team") {
  Rng rng(241);
  const auto team = testing::random_dynamic_team(2, 2, rng);
  const double det = brute_force_dirac(team).best_value;
  double best = INFINITY, worst = -INFINITY;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CrossEntropyOptions opts;
    opts.seed = seed;
    opts.iterations = 15;
    const double v = optimize_symmetric_dynamic(team, opts).best_value;
    CHECK(v >= det - 1e-9);
    best = std::min(best, v);
    worst = std::max(worst, v);
  }
  MESSAGE("J_det " << det << ", cross-entropy range over 20 seeds [" << best << ", " << worst << "]");
}
