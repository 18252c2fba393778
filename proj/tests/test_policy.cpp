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
#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "exteam/error.hpp"
#include "exteam/policy.hpp"
#include "support/generators.hpp"

using namespace exteam;

namespace {

RelaxedKernel dirac_action(std::size_t u) { return RelaxedKernel::constant(1, 1, 2, u); }

// Law over profiles keyed by the row-major probabilities of every kernel.
std::map<std::vector<double>, double> law_by_value(const Mixture& m) {
  std::map<std::vector<double>, double> out;
  for (const auto& atom : m.atoms()) {
    std::vector<double> key;
    for (const auto& k : atom.profile) key.insert(key.end(), k.data().begin(), k.data().end());
    out[key] += atom.weight;
  }
  return out;
}

double tv(const std::map<std::vector<double>, double>& a,
          const std::map<std::vector<double>, double>& b) {
  double s = 0.0;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    s += std::abs(v - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : b) {
    if (!a.count(k)) s += v;
  }
  return 0.5 * s;
}

// Independent m-marginal of the uniform-index extension: for each atom, draw
// m indices from {0..n-1} with replacement.
std::map<std::vector<double>, double> extension_oracle(const Mixture& mix, std::size_t m) {
  std::map<std::vector<double>, double> out;
  const std::size_t n = mix.num_dms();
  std::size_t tuples = 1;
  for (std::size_t j = 0; j < m; ++j) tuples *= n;
  for (const auto& atom : mix.atoms()) {
    for (std::size_t code = 0; code < tuples; ++code) {
      std::size_t c = code;
      std::vector<double> key;
      for (std::size_t j = 0; j < m; ++j) {
        const auto& k = atom.profile[c % n];
        c /= n;
        key.insert(key.end(), k.data().begin(), k.data().end());
      }
      out[key] += atom.weight / static_cast<double>(tuples);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("relaxed kernels validate rows") {
  CHECK_THROWS_AS(RelaxedKernel(1, 1, 2, {0.5, 0.6}), ConfigError);
  CHECK_THROWS_AS(RelaxedKernel(1, 2, 2, {0.5, 0.5}), ConfigError);
  const auto k = RelaxedKernel::bernoulli(0.25);
  CHECK(k.prob(0, 0, 1) == 0.25);
  CHECK_FALSE(k.is_deterministic());
  CHECK(RelaxedKernel::constant(2, 3, 2, 1).is_deterministic());
}

TEST_CASE("deterministic policy numbering puts the first stage and observation first") {
  CHECK(DeterministicPolicy::count(2, 2, 3) == 81);
  const auto p = DeterministicPolicy::from_index(1, 1, 2, 2);
  CHECK(p.action(0, 0) == 0);
  CHECK(p.action(0, 1) == 1);
  const auto q = DeterministicPolicy::from_index(2, 1, 2, 2);
  CHECK(q.action(0, 0) == 1);
  CHECK(q.action(0, 1) == 0);
  for (std::uint64_t i = 0; i < 81; ++i) {
    const auto d = DeterministicPolicy::from_index(i, 2, 2, 3);
    CHECK(d.index() == i);
    CHECK(DeterministicPolicy::from_kernel(d.to_kernel())->index() == i);
  }
  CHECK_FALSE(DeterministicPolicy::from_kernel(RelaxedKernel::bernoulli(0.5)).has_value());
  CHECK_THROWS_AS(DeterministicPolicy::count(40, 2, 2), BudgetError);
}

TEST_CASE("mixture builders choose the narrowest class") {
  const auto a = dirac_action(0), b = dirac_action(1), half = RelaxedKernel::bernoulli(0.5);
  CHECK(Mixture::single({a, b}).tag() == MixtureClass::kDirac);
  CHECK(Mixture::single({half, half}).tag() == MixtureClass::kPrivateSymmetric);
  CHECK(Mixture::single({half, a}).tag() == MixtureClass::kPrivate);
  CHECK(Mixture::iid(half, 3).tag() == MixtureClass::kPrivateSymmetric);
  CHECK(Mixture::iid(a, 3).tag() == MixtureClass::kDirac);

  const PolicyLottery lot{{0.25, a}, {0.75, b}};
  const auto iid = Mixture::iid(lot, 2);
  CHECK(iid.atoms().size() == 4);
  CHECK(iid.tag_is_sound());
  const auto prod = Mixture::product({lot, PolicyLottery{{1.0, a}}});
  CHECK(prod.tag() == MixtureClass::kPrivate);
  CHECK(prod.tag_is_sound());

  CommonRandomness cr;
  cr.eta = {0.5, 0.5};
  cr.factors = {{PolicyLottery{{1.0, a}}, PolicyLottery{{1.0, a}}},
                {PolicyLottery{{1.0, b}}, PolicyLottery{{1.0, b}}}};
  const auto co = Mixture::common_randomness(cr);
  CHECK(co.tag() == MixtureClass::kCommonSymmetric);
  CHECK(co.tag_is_sound());
  CHECK(co.atoms().size() == 2);
}

TEST_CASE("unsound tags are detected") {
  const auto a = dirac_action(0), b = dirac_action(1);
  const Mixture pair({{1.0, {a, b}}}, MixtureClass::kExchangeable);
  CHECK_FALSE(pair.tag_is_sound());
  const Mixture correlated({{0.5, {a, a}}, {0.5, {b, b}}}, MixtureClass::kPrivate);
  CHECK_FALSE(correlated.tag_is_sound());
  const Mixture asym({{1.0, {a, b}}}, MixtureClass::kPrivateSymmetric);
  CHECK_FALSE(asym.tag_is_sound());
  const Mixture no_layout({{1.0, {a, a}}}, MixtureClass::kCommon);
  CHECK_FALSE(no_layout.tag_is_sound());
  CHECK_THROWS_AS(Mixture({{0.4, {a}}, {0.4, {b}}}), ConfigError);
  CHECK_THROWS_AS(Mixture({{1.0, {a}}, {0.0, {a, b}}}), ConfigError);
}

TEST_CASE("convex combinations stay exchangeable only inside the class") {
  const auto a = dirac_action(0), b = dirac_action(1);
  const auto ex = symmetrize(Mixture::single({a, b}));
  const auto ex2 = symmetrize(Mixture::single({a, a}));
  CHECK(Mixture::convex(0.3, ex, ex2).tag() == MixtureClass::kExchangeable);
  CHECK(Mixture::convex(0.3, ex, Mixture::single({a, a})).tag() == MixtureClass::kGeneral);
  CHECK_THROWS_AS(Mixture::convex(1.5, ex, ex2), std::invalid_argument);
}

TEST_CASE("permutation moves DM sigma(i) into slot i") {
  const auto a = dirac_action(0), b = dirac_action(1), half = RelaxedKernel::bernoulli(0.5);
  const auto mix = Mixture::single({a, b, half});
  const std::vector<std::size_t> sigma{2, 0, 1};
  const auto p = permute_mixture(mix, sigma);
  CHECK(p.atoms().front().profile[0] == half);
  CHECK(p.atoms().front().profile[1] == a);
  CHECK(p.atoms().front().profile[2] == b);
  const std::vector<std::size_t> bad{0, 0, 1};
  CHECK_THROWS_AS(permute_mixture(mix, bad), std::invalid_argument);
}

TEST_CASE("symmetrization of a Dirac pair") {
  const auto a = dirac_action(0), b = dirac_action(1);
  const auto pair = Mixture::single({a, b});
  CHECK(exchangeability_defect(pair) == doctest::Approx(0.5));
  const auto sym = symmetrize(pair);
  CHECK(sym.tag() == MixtureClass::kExchangeable);
  CHECK(sym.atoms().size() == 2);
  for (const auto& atom : sym.atoms()) CHECK(atom.weight == doctest::Approx(0.5));
  CHECK(is_exchangeable(sym));
  CHECK(sym.tag_is_sound());
}

TEST_CASE("symmetrized random mixtures are exchangeable and idempotent") {
  Rng rng(23);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + rep % 4;
    const auto mix = testing::random_mixture(n, 1 + rep % 3, 1, 2, 2, rng, rep % 2 == 0);
    const auto sym = symmetrize(mix);
    CHECK(exchangeability_defect(sym) < 1e-12);
    CHECK(profile_tv_distance(sym, symmetrize(sym)) < 1e-12);
    // Every one-DM marginal of the symmetrization is the average marginal.
    std::vector<double> avg(mix.shape().data().size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = mixed_kernel(mix, i);
      for (std::size_t j = 0; j < avg.size(); ++j) avg[j] += k.data()[j] / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = mixed_kernel(sym, i);
      for (std::size_t j = 0; j < avg.size(); ++j) CHECK(k.data()[j] == doctest::Approx(avg[j]));
    }
  }
}

TEST_CASE("sampled symmetrization is a probability mixture") {
  const auto pair = Mixture::single({dirac_action(0), dirac_action(1)});
  const auto s = symmetrize_sampled(pair, 64, 9);
  double total = 0.0;
  for (const auto& atom : s.atoms()) total += atom.weight;
  CHECK(total == doctest::Approx(1.0));
  CHECK(s.tag() == MixtureClass::kGeneral);
  CHECK(exchangeability_defect(s) < 0.25);
}

TEST_CASE("restriction is the marginal on the first DMs") {
  Rng rng(29);
  const auto mix = testing::random_mixture(3, 3, 1, 2, 2, rng, true);
  const auto r = restrict(mix, 2);
  std::map<std::vector<double>, double> oracle;
  for (const auto& atom : mix.atoms()) {
    std::vector<double> key;
    for (std::size_t i = 0; i < 2; ++i) {
      key.insert(key.end(), atom.profile[i].data().begin(), atom.profile[i].data().end());
    }
    oracle[key] += atom.weight;
  }
  CHECK(tv(law_by_value(r), oracle) < 1e-14);
  CHECK_THROWS_AS(restrict(mix, 4), std::invalid_argument);
}

TEST_CASE("extension marginal matches index sampling") {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + rep % 3;
    const auto mix = symmetrize(testing::random_mixture(n, 2, 1, 2, 2, rng, true));
    for (std::size_t m = 1; m <= n; ++m) {
      const auto ext = df_extend_marginal(mix, m);
      CHECK(ext.tag() == MixtureClass::kCommonSymmetric);
      CHECK(ext.tag_is_sound(1e-12));
      CHECK(tv(law_by_value(ext), extension_oracle(mix, m)) < 1e-12);
      CHECK(profile_tv_distance(restrict(mix, m), ext) <= df_bound(n, m) + 1e-12);
    }
  }
  CHECK_THROWS_AS(df_extend_marginal(Mixture::single({dirac_action(0), dirac_action(1)}), 1),
                  std::invalid_argument);
}

TEST_CASE("the symmetrized Dirac pair attains the extension bound") {
  const auto sym = symmetrize(Mixture::single({dirac_action(0), dirac_action(1)}));
  CHECK(df_bound(2, 2) == 0.5);
  CHECK(profile_tv_distance(restrict(sym, 2), df_extend_marginal(sym, 2)) ==
        doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("kernel grid size") {
  CHECK(kernel_grid(1, 1, 2, 0.25).size() == 5);
  CHECK(kernel_grid(1, 2, 3, 0.5).size() == 36);
  CHECK_THROWS_AS(kernel_grid(1, 1, 2, 0.3), std::invalid_argument);
}

TEST_CASE("de Finetti fit recovers i.i.d. mixtures") {
  const auto k1 = RelaxedKernel::from_rows({{0.25, 0.75}, {0.5, 0.5}});
  const auto k2 = RelaxedKernel::from_rows({{1.0, 0.0}, {0.125, 0.875}});
  // Few enough candidates that their induced laws are linearly independent,
  // so the weights are identified.
  const std::vector<RelaxedKernel> candidates{
      RelaxedKernel::uniform(1, 2, 2), k1, RelaxedKernel::constant(1, 2, 2, 1), k2,
      RelaxedKernel::from_rows({{0.75, 0.25}, {0.0, 1.0}})};
  for (std::size_t m : {3u, 4u}) {
    const Mixture target = Mixture::convex(0.3, symmetrize(Mixture::iid(k1, m)),
                                           symmetrize(Mixture::iid(k2, m)));
    const auto fit = definetti_extract(target, candidates);
    CHECK(fit.residual_l2 < 1e-8);
    CHECK(fit.weights[1] == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(fit.weights[3] == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(fit.weights[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(fit.as_mixture(m).tag() == MixtureClass::kCommonSymmetric);
  }
  // A dense grid still fits the law, though not with unique weights.
  const Mixture wide = Mixture::convex(0.3, symmetrize(Mixture::iid(k1, 2)),
                                       symmetrize(Mixture::iid(k2, 2)));
  const auto dense = definetti_extract(wide, kernel_grid(1, 2, 2, 0.125));
  CHECK(dense.residual_l2 < 1e-8);
  CHECK(std::accumulate(dense.weights.begin(), dense.weights.end(), 0.0) ==
        doctest::Approx(1.0));
}

TEST_CASE("the antisymmetric pair is not a finite i.i.d. mixture") {
  const auto sym = symmetrize(Mixture::single({dirac_action(0), dirac_action(1)}));
  const auto fit = definetti_extract(sym, kernel_grid(1, 1, 2, 1.0 / 16));
  CHECK(fit.residual_l2 > 0.01);
  CHECK(fit.residual_tv > 0.01);
}

TEST_CASE("kernel decomposition into deterministic maps") {
  Rng rng(37);
  for (int rep = 0; rep < 10; ++rep) {
    const auto k = testing::random_kernel(2, 2, 3, rng);
    const auto mix = kernel_to_deterministic_mixture(k);
    CHECK(mix.atoms().size() == 81);
    const auto back = mixed_kernel(mix, 0);
    for (std::size_t j = 0; j < k.data().size(); ++j) {
      CHECK(back.data()[j] == doctest::Approx(k.data()[j]).epsilon(1e-13));
    }
    for (const auto& atom : mix.atoms()) {
      const auto d = DeterministicPolicy::from_kernel(atom.profile.front());
      REQUIRE(d.has_value());
      double w = 1.0;
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t y = 0; y < 2; ++y) w *= k.prob(t, y, d->action(t, y));
      CHECK(atom.weight == doctest::Approx(w).epsilon(1e-14));
    }
  }
}

TEST_CASE("profile laws intern equal kernels") {
  const auto a = dirac_action(0), b = dirac_action(1);
  const Mixture m({{0.25, {a, b}}, {0.25, {a, b}}, {0.5, {b, a}}});
  const auto law = profile_law(m);
  CHECK(law.pool.size() == 2);
  CHECK(law.weights.size() == 2);
  CHECK(merge_atoms(m.atoms()).size() == 2);
  CHECK(profile_tv_distance(m, permute_mixture(m, std::vector<std::size_t>{1, 0})) ==
        doctest::Approx(0.0));
}

TEST_CASE("permutation fixes an exchangeable pair") {
  const auto a = dirac_action(0), b = dirac_action(1);
  const auto sym = symmetrize(Mixture::single({a, b}));
  const std::vector<std::size_t> swap{1, 0}, id{0, 1};
  CHECK(profile_tv_distance(permute_mixture(sym, swap), sym) < 1e-15);
  CHECK(profile_tv_distance(permute_mixture(sym, id), sym) < 1e-15);
  CHECK(permute_mixture(Mixture::single({a, b}), swap).atoms().front().profile ==
        PolicyProfile{b, a});
}

TEST_CASE("symmetrizing an exchangeable mixture keeps its atoms") {
  Rng rng(211);
  const auto ex = symmetrize(testing::random_mixture(3, 2, 1, 2, 2, rng));
  const auto again = symmetrize(ex);
  CHECK(profile_tv_distance(ex, again) < 1e-12);
  CHECK(merge_atoms(again.atoms()).size() == merge_atoms(ex.atoms()).size());
}

TEST_CASE("i.i.d. products are exchangeable, a split pair is not") {
  CHECK(is_exchangeable(Mixture::iid(RelaxedKernel::bernoulli(0.3), 4)));
  CHECK_FALSE(is_exchangeable(Mixture::single({dirac_action(0), dirac_action(1)})));
}

TEST_CASE("restriction examples") {
  const auto a = dirac_action(0), b = dirac_action(1);
  const auto sym = symmetrize(Mixture::single({a, b}));
  CHECK(profile_tv_distance(restrict(sym, 2), sym) < 1e-15);
  const auto one = restrict(sym, 1);
  const Mixture expect({{0.5, {a}}, {0.5, {b}}});
  CHECK(profile_tv_distance(one, expect) < 1e-15);
  const PolicyLottery lot{{0.5, a}, {0.5, b}};
  CHECK(profile_tv_distance(restrict(Mixture::iid(lot, 4), 2), Mixture::iid(lot, 2)) < 1e-15);
  CHECK(restrict(Mixture::iid(lot, 4), 2).tag() == MixtureClass::kPrivateSymmetric);
}

TEST_CASE("extension of an i.i.d. pair") {
  const auto a = dirac_action(0), b = dirac_action(1);
  const auto iid = Mixture::iid(PolicyLottery{{0.5, a}, {0.5, b}}, 2);
  const auto ext = df_extend_marginal(iid, 2);
  const auto law = law_by_value(ext);
  auto key = [&](const RelaxedKernel& x, const RelaxedKernel& y) {
    std::vector<double> k = x.data();
    k.insert(k.end(), y.data().begin(), y.data().end());
    return k;
  };
  CHECK(law.at(key(a, a)) == doctest::Approx(0.375));
  CHECK(law.at(key(a, b)) == doctest::Approx(0.125));
  CHECK(law.at(key(b, a)) == doctest::Approx(0.125));
  CHECK(law.at(key(b, b)) == doctest::Approx(0.375));
  CHECK(profile_tv_distance(iid, ext) == doctest::Approx(0.25));
  CHECK(profile_tv_distance(restrict(iid, 1), df_extend_marginal(iid, 1)) < 1e-15);
}

TEST_CASE("de Finetti fit on exact atoms") {
  const auto q1 = RelaxedKernel::bernoulli(0.2), q2 = RelaxedKernel::bernoulli(0.9);
  const auto single = definetti_extract(Mixture::iid(q1, 3), {q2, q1});
  CHECK(single.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(single.residual_l2 <= 1e-10);
  const auto pair = definetti_extract(
      Mixture::convex(0.3, symmetrize(Mixture::iid(q1, 2)), symmetrize(Mixture::iid(q2, 2))),
      {q1, q2});
  CHECK(pair.weights[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(pair.weights[1] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(pair.residual_l2 <= 1e-8);
  const auto anti = definetti_extract(symmetrize(Mixture::single({dirac_action(0), dirac_action(1)})),
                                      {dirac_action(0), dirac_action(1)});
  CHECK(anti.residual_l2 > 0.0);
}

TEST_CASE("kernel decomposition examples") {
  const auto ident = RelaxedKernel::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const auto one = kernel_to_deterministic_mixture(ident);
  REQUIRE(one.atoms().size() == 1);
  CHECK(one.atoms().front().weight == 1.0);
  const auto coin = kernel_to_deterministic_mixture(RelaxedKernel::bernoulli(0.5));
  REQUIRE(coin.atoms().size() == 2);
  CHECK(coin.atoms()[0].profile.front() == dirac_action(0));
  CHECK(coin.atoms()[0].weight == 0.5);
  const auto four = kernel_to_deterministic_mixture(RelaxedKernel::uniform(1, 2, 2));
  REQUIRE(four.atoms().size() == 4);
  for (const auto& atom : four.atoms()) CHECK(atom.weight == 0.25);
}
