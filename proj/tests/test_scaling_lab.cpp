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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "exteam/scaling_lab.hpp"
#include "support/generators.hpp"

using namespace exteam;

namespace {

// Two states tracking the previous action with 10% flips, no observation,
// cost (mean action - 1/2)^2 + 1/2 (mean state - 1/2)^2.
DynamicTeam memory_team(std::size_t n) {
  DynamicTeamData d;
  d.horizon = 2;
  d.omega0 = FiniteSpace({"w"});
  d.prior = {1.0};
  d.states = FiniteSpace::numeric({0.0, 1.0});
  d.observations = FiniteSpace({"none"});
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
  d.observation = ObservationTable{{0, 0, 0, 0}};
  QuadraticDynamicCost cost;
  cost.mean_state_weight = 0.5;
  d.cost = cost;
  d.num_dms = n;
  return DynamicTeam(std::move(d));
}

}  // namespace

TEST_CASE("gap curve on the half-split family") {
  const std::vector<std::size_t> ns{2, 3, 4, 6};
  const auto curve = gap_curve(static_family(half_split_team(1)), ns);
  REQUIRE(curve.rows.size() == ns.size());
  for (const auto& r : curve.rows) {
    const double n = static_cast<double>(r.n);
    const double det = r.n % 2 == 0 ? 0.0 : 1.0 / (4.0 * n * n);
    CHECK(r.j_det == doctest::Approx(det).epsilon(1e-12));
    CHECK(r.j_sym == doctest::Approx(1.0 / (4.0 * n)).epsilon(1e-12));
    CHECK(r.eps == doctest::Approx(r.j_sym - r.j_det).epsilon(1e-15));
  }
  const std::vector<std::size_t> unsorted{4, 2};
  CHECK_THROWS_AS(gap_curve(static_family(half_split_team(1)), unsorted), std::invalid_argument);
  CHECK_THROWS_AS(gap_curve(static_family(half_split_team(1)), std::vector<std::size_t>{}),
                  std::invalid_argument);
}

TEST_CASE("gap csv omits runtimes unless asked") {
  GapCurve curve;
  curve.rows.push_back({2, 0.125, 0.0, 0.125, 1.5});
  CHECK(to_csv(curve, false) == "N,J_sym,J_det,eps,runtime_s\n2,0.125,0,0.125,0\n");
  CHECK(to_csv(curve, true) == "N,J_sym,J_det,eps,runtime_s\n2,0.125,0,0.125,1.5\n");
}

TEST_CASE("limit estimate reports the tail maximum") {
  std::vector<std::size_t> ns;
  for (std::size_t n = 2; n <= 20; n += 2) ns.push_back(n);
  const auto est =
      limit_cost_estimate(RelaxedKernel::bernoulli(0.5), static_family(half_split_team(1)), ns, 3);
  REQUIRE(est.values.size() == ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    CHECK(est.values[i] == doctest::Approx(1.0 / (4.0 * ns[i])).epsilon(1e-12));
  }
  CHECK(est.limsup_proxy == doctest::Approx(1.0 / (4.0 * 16)).epsilon(1e-12));
  CHECK(est.monotone);
  const auto csv = to_csv(est);
  CHECK(csv.rfind("N,J_N,tail,limsup_proxy,monotone\n", 0) == 0);
  CHECK_THROWS_AS(limit_cost_estimate(RelaxedKernel::bernoulli(0.5),
                                      static_family(half_split_team(1)),
                                      std::vector<std::size_t>{2, 4}, 3),
                  std::invalid_argument);
}

TEST_CASE("non-monotone limit sequences are flagged") {
  const std::vector<std::size_t> ns{1, 2, 3, 4, 5};
  const StaticFamily alternating = [](std::size_t n) {
    return n % 2 == 1 ? constant_cost_team(n, 0.5) : half_split_team(n);
  };
  const auto est = limit_cost_estimate(RelaxedKernel::bernoulli(0.5), alternating, ns, 2);
  CHECK_FALSE(est.monotone);
  CHECK(est.limsup_proxy == doctest::Approx(0.5));
}

TEST_CASE("restriction suboptimality of Bernoulli one half") {
  const std::vector<std::size_t> ns{1, 2, 3, 4};
  const auto rows = restriction_suboptimality(RelaxedKernel::bernoulli(0.5),
                                              static_family(half_split_team(1)), ns);
  for (const auto& r : rows) {
    const double n = static_cast<double>(r.n);
    const double det = r.n % 2 == 0 ? 0.0 : 1.0 / (4.0 * n * n);
    CHECK(r.j_restricted == doctest::Approx(1.0 / (4.0 * n)).epsilon(1e-12));
    CHECK(r.excess == doctest::Approx(1.0 / (4.0 * n) - det).epsilon(1e-12));
  }
  CHECK(to_csv(rows).rfind("N,J_restricted,J_det,excess\n", 0) == 0);
}

TEST_CASE("extension bound audit on random exchangeable mixtures") {
  Rng rng(131);
  std::vector<Mixture> instances;
  for (int k = 0; k < 60; ++k) {
    const auto m = random_exchangeable_mixture(1 + k % 5, 3, 1, 2, 2, rng);
    CHECK(is_exchangeable(m));
    instances.push_back(m);
  }
  const std::vector<std::size_t> ms{1, 2, 3, 4, 5, 6};
  const auto audit = df_bound_audit(instances, ms);
  CHECK(audit.violations == 0);
  CHECK(audit.min_slack >= -kDfSlackTol);
  for (const auto& r : audit.rows) {
    CHECK(r.m <= r.n);
    if (r.m == 1) CHECK(r.tv == doctest::Approx(0.0));
  }
  CHECK(to_csv(audit).rfind("instance,N,m,tv,bound,slack,violation\n", 0) == 0);
}

TEST_CASE("the symmetrized Dirac pair has zero slack") {
  const auto a = RelaxedKernel::constant(1, 1, 2, 0), b = RelaxedKernel::constant(1, 1, 2, 1);
  const std::vector<Mixture> pair{symmetrize(Mixture::single({a, b}))};
  const std::vector<std::size_t> ms{2};
  const auto audit = df_bound_audit(pair, ms);
  REQUIRE(audit.rows.size() == 1);
  CHECK(std::abs(audit.rows.front().slack) < 1e-12);
  CHECK_FALSE(audit.rows.front().violation);
}

TEST_CASE("dynamic gap curve on a small memory family") {
  const std::vector<std::size_t> ns{2, 4};
  CrossEntropyOptions opts;
  opts.iterations = 20;
  const auto curve = dynamic_gap_curve(dynamic_family(memory_team(1)), ns, opts);
  REQUIRE(curve.rows.size() == 2);
  for (const auto& r : curve.rows) CHECK(r.eps >= 0.0);
  CHECK(curve.rows.back().eps < curve.rows.front().eps);
}

TEST_CASE("constant-cost families have no gap and no excess") {
  const std::vector<std::size_t> ns{1, 2, 3, 4};
  const auto curve = gap_curve(static_family(constant_cost_team(1, 0.3)), ns);
  for (const auto& r : curve.rows) CHECK(r.eps == 0.0);
  const auto rows = restriction_suboptimality(RelaxedKernel::bernoulli(0.5),
                                              static_family(constant_cost_team(1, 0.3)), ns);
  for (const auto& r : rows) CHECK(r.excess == doctest::Approx(0.0).epsilon(1e-15));
  const auto est = limit_cost_estimate(RelaxedKernel::bernoulli(0.5),
                                       static_family(constant_cost_team(1, 0.3)), ns, 2);
  CHECK(est.limsup_proxy == doctest::Approx(0.3));
}

TEST_CASE("odd team sizes pay the unmatched DM") {
  const std::vector<std::size_t> ns{3, 5};
  const auto curve = gap_curve(static_family(half_split_team(1)), ns);
  for (const auto& r : curve.rows) {
    const double n = static_cast<double>(r.n);
    CHECK(r.j_det == doctest::Approx(1.0 / (4 * n * n)).epsilon(1e-12));
    CHECK(r.eps == doctest::Approx(1.0 / (4 * n) - 1.0 / (4 * n * n)).epsilon(1e-9));
  }
}

TEST_CASE("limit of Bernoulli one half over even sizes up to 64") {
  std::vector<std::size_t> ns;
  for (std::size_t n = 2; n <= 64; n += 2) ns.push_back(n);
  const auto est =
      limit_cost_estimate(RelaxedKernel::bernoulli(0.5), static_family(half_split_team(1)), ns, 3);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    CHECK(est.values[i] == doctest::Approx(1.0 / (4.0 * ns[i])).epsilon(1e-12));
  }
  // Tail {60, 62, 64}: the maximum sits at N = 60.
  CHECK(est.limsup_proxy == doctest::Approx(1.0 / 240).epsilon(1e-12));
}

TEST_CASE("the all-zero deterministic recipe never escapes one quarter") {
  const std::vector<std::size_t> ns{1, 2, 4, 8};
  const auto est = limit_cost_estimate(RelaxedKernel::constant(1, 1, 2, 0),
                                       static_family(half_split_team(1)), ns, 2);
  for (double v : est.values) CHECK(v == doctest::Approx(0.25));
  CHECK(est.limsup_proxy == doctest::Approx(0.25));
}
