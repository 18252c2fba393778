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
#include "exteam/optimization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "exteam/error.hpp"
#include "exteam/kernels.hpp"
#include "exteam/parallel.hpp"
#include "exteam/rng.hpp"

namespace exteam {
namespace {

constexpr std::size_t kBatch = 1024;

struct SearchBest {
  double value = std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> ids;
  std::uint64_t evaluations = 0;
};

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string(what) + ": non-finite cost encountered");
}

// Nondecreasing id sequences of length n over [0, symbols), in lexicographic
// order; each is the lexicographically smallest member of its orbit.
bool next_orbit(std::vector<std::uint64_t>& ids, std::uint64_t symbols) {
  for (std::size_t i = ids.size(); i-- > 0;) {
    if (ids[i] + 1 < symbols) {
      const std::uint64_t v = ids[i] + 1;
      for (std::size_t j = i; j < ids.size(); ++j) ids[j] = v;
      return true;
    }
  }
  return false;
}

template <class Eval>
SearchBest orbit_search(std::uint64_t symbols, std::size_t n, Eval&& eval) {
  SearchBest best;
  std::vector<std::uint64_t> ids(n, 0);
  bool more = true;
  std::vector<std::vector<std::uint64_t>> batch;
  while (more) {
    batch.clear();
    while (more && batch.size() < kBatch) {
      batch.push_back(ids);
      more = next_orbit(ids, symbols);
    }
    const auto values = parallel_map<double>(batch.size(), [&](std::size_t b) { return eval(batch[b]); });
    for (std::size_t b = 0; b < batch.size(); ++b) {
      check_finite(values[b], "brute force");
      if (values[b] < best.value - kTieTol) {
        best.value = values[b];
        best.ids = batch[b];
      }
    }
    best.evaluations += batch.size();
  }
  return best;
}

std::vector<DeterministicPolicy> policies_from_ids(const std::vector<std::uint64_t>& ids,
                                                   std::size_t stages, std::size_t obs,
                                                   std::size_t actions) {
  std::vector<DeterministicPolicy> out;
  for (auto id : ids) out.push_back(DeterministicPolicy::from_index(id, stages, obs, actions));
  return out;
}

PolicyProfile kernels_from_ids(const std::vector<std::uint64_t>& ids, std::size_t stages,
                               std::size_t obs, std::size_t actions) {
  PolicyProfile out;
  for (auto id : ids) out.push_back(DeterministicPolicy::from_index(id, stages, obs, actions).to_kernel());
  return out;
}

void check_orbits(std::uint64_t policies, std::size_t n) {
  const double orbits = deterministic_orbit_count(policies, n);
  if (orbits > kProfileBudget) {
    throw BudgetError("brute force needs " + std::to_string(static_cast<long double>(orbits)) +
                      " profile orbits (budget 1e7)");
  }
}

// Euclidean projection of each length-k row onto the probability simplex.
void project_rows(std::vector<double>& x, std::size_t k) {
  std::vector<double> sorted(k);
  for (std::size_t r = 0; r < x.size() / k; ++r) {
    double* row = x.data() + r * k;
    std::copy(row, row + k, sorted.begin());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      cum += sorted[j];
      const double t = (cum - 1.0) / static_cast<double>(j + 1);
      if (sorted[j] - t > 0.0) theta = t;
    }
    for (std::size_t j = 0; j < k; ++j) row[j] = std::max(0.0, row[j] - theta);
  }
}

RelaxedKernel kernel_from_point(std::vector<double> x, std::size_t stages, std::size_t obs,
                                std::size_t actions) {
  for (std::size_t r = 0; r < stages * obs; ++r) {
    double s = 0.0;
    for (std::size_t u = 0; u < actions; ++u) {
      double& v = x[r * actions + u];
      v = std::max(0.0, v);
      s += v;
    }
    for (std::size_t u = 0; u < actions; ++u) x[r * actions + u] /= s;
  }
  return RelaxedKernel(stages, obs, actions, std::move(x));
}

std::vector<double> fd_gradient(const StaticTeam& team, const std::vector<double>& x, double h,
                                std::uint64_t& evaluations) {
  std::vector<double> g(x.size()), probe = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const double up = kernels::static_cost_iid_raw(team, probe);
    probe[j] = x[j] - h;
    const double down = kernels::static_cost_iid_raw(team, probe);
    probe[j] = x[j];
    g[j] = (up - down) / (2.0 * h);
  }
  evaluations += 2 * x.size();
  return g;
}

double projected_norm(const std::vector<double>& x, const std::vector<double>& g, std::size_t k) {
  std::vector<double> y(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] - g[j];
  project_rows(y, k);
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
  return std::sqrt(s);
}

std::vector<double> dirichlet_ones(Rng& rng, std::size_t rows, std::size_t k) {
  std::vector<double> x(rows * k);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      x[r * k + j] = -std::log1p(-uniform01(rng));
      s += x[r * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) x[r * k + j] /= s;
  }
  return x;
}

struct Descent {
  std::vector<double> x;
  double value;
  bool converged;
  std::uint64_t evaluations;
};

Descent projected_descent(const StaticTeam& team, std::vector<double> x,
                          const SymmetricOptions& opt) {
  const std::size_t k = team.actions().size();
  Descent d{{}, 0.0, false, 0};
  double f = kernels::static_cost_iid_raw(team, x);
  ++d.evaluations;
  check_finite(f, "projected gradient");
  double alpha = 1.0;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    const auto g = fd_gradient(team, x, opt.fd_step, d.evaluations);
    if (projected_norm(x, g, k) < opt.tol) {
      d.converged = true;
      break;
    }
    bool accepted = false;
    for (; alpha > 1e-14; alpha *= 0.5) {
      std::vector<double> xn(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) xn[j] = x[j] - alpha * g[j];
      project_rows(xn, k);
      double decrease = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) decrease += g[j] * (xn[j] - x[j]);
      const double fn = kernels::static_cost_iid_raw(team, xn);
      ++d.evaluations;
      check_finite(fn, "projected gradient");
      if (fn <= f + 1e-4 * decrease) {
        x = std::move(xn);
        f = fn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    alpha = std::min(alpha * 2.0, 1e3);
  }
  d.x = std::move(x);
  d.value = f;
  return d;
}

std::size_t grid_size(std::size_t rows, std::size_t actions, double pitch) {
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / pitch));
  double points = 1.0;
  for (std::size_t j = 1; j < actions; ++j) {
    points = points * static_cast<double>(steps + j) / static_cast<double>(j);
  }
  const double total = std::pow(std::round(points), static_cast<double>(rows));
  return total > 1e18 ? std::numeric_limits<std::size_t>::max() : static_cast<std::size_t>(total);
}

// Compositions of `total` into k parts in lexicographic order.
bool next_composition(std::vector<std::size_t>& c) {
  const std::size_t k = c.size();
  std::size_t tail = c[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) {
    if (tail > 0) {
      ++c[i];
      for (std::size_t j = i + 1; j + 1 < k; ++j) c[j] = 0;
      c[k - 1] = tail - 1;
      return true;
    }
    tail += c[i];
  }
  return false;
}

}  // namespace

std::string_view to_string(OptMethod method) {
  switch (method) {
    case OptMethod::kBruteForce: return "brute_force";
    case OptMethod::kGrid: return "grid";
    case OptMethod::kProjectedGradient: return "projected_gradient";
    case OptMethod::kProductGrid: return "product_grid";
    case OptMethod::kExchangeableGrid: return "exchangeable_grid";
    case OptMethod::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

double deterministic_orbit_count(std::uint64_t policies, std::size_t n) {
  double c = 1.0;
  for (std::size_t j = 1; j <= n; ++j) {
    c = c * (static_cast<double>(policies) + static_cast<double>(j) - 1.0) / static_cast<double>(j);
  }
  return std::round(c);
}

OptResult brute_force_dirac(const StaticTeam& team) {
  const std::size_t Y = team.observations().size(), U = team.actions().size(), n = team.num_dms();
  const std::uint64_t policies = DeterministicPolicy::count(1, Y, U);
  check_orbits(policies, n);
  if (kernels::static_work(team) > kExactWorkBudget) {
    throw BudgetError("brute force: one exact evaluation exceeds the 1e8 term budget");
  }
  const SearchBest best = orbit_search(policies, n, [&](const std::vector<std::uint64_t>& ids) {
    return kernels::static_cost(team, kernels_from_ids(ids, 1, Y, U));
  });
  return OptResult{best.value, Mixture::deterministic(policies_from_ids(best.ids, 1, Y, U)),
                   best.evaluations, OptMethod::kBruteForce, 0, true, {}};
}

OptResult brute_force_dirac(const DynamicTeam& team) {
  const std::size_t T = team.horizon(), Y = team.observations().size(), U = team.actions().size(),
                    n = team.num_dms();
  const std::uint64_t policies = DeterministicPolicy::count(T, Y, U);
  check_orbits(policies, n);
  const ObsLawFn obs = direct_obs_law(team);
  const SearchBest best = orbit_search(policies, n, [&](const std::vector<std::uint64_t>& ids) {
    const PolicyProfile profile = kernels_from_ids(ids, T, Y, U);
    if (kernels::dynamic_work(team, profile) > kExactWorkBudget) {
      throw BudgetError("brute force: one exact dynamic evaluation exceeds the 1e8 term budget");
    }
    return kernels::dynamic_cost(team, profile, obs);
  });
  return OptResult{best.value, Mixture::deterministic(policies_from_ids(best.ids, T, Y, U)),
                   best.evaluations, OptMethod::kBruteForce, 0, true, {}};
}

OptResult optimize_symmetric_kernel(const StaticTeam& team, const SymmetricOptions& opt) {
  const std::size_t Y = team.observations().size(), U = team.actions().size(), n = team.num_dms();
  if (U == 1) {
    const RelaxedKernel only = RelaxedKernel::constant(1, Y, 1, 0);
    const double v = expected_cost_static_exact(team, Mixture::iid(only, n)).value;
    return OptResult{v, Mixture::iid(only, n), 1, OptMethod::kGrid, 0, true, {}};
  }
  auto method = opt.method;
  if (method == SymmetricOptions::Method::kAuto) {
    method = grid_size(Y, U, opt.pitch) <= opt.auto_grid_limit
                 ? SymmetricOptions::Method::kGrid
                 : SymmetricOptions::Method::kProjectedGradient;
  }
  if (method == SymmetricOptions::Method::kGrid) {
    const auto grid = kernel_grid(1, Y, U, opt.pitch);
    const auto values = parallel_map<double>(grid.size(), [&](std::size_t g) {
      return kernels::static_cost_iid_raw(team, grid[g].data());
    });
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      check_finite(values[g], "symmetric grid");
      if (values[g] < values[best] - kTieTol) best = g;
    }
    const Mixture policy = Mixture::iid(grid[best], n);
    return OptResult{expected_cost_static_exact(team, policy).value, policy, grid.size(),
                     OptMethod::kGrid, 0, true, {}};
  }
  if (Y * (U - 1) > kMaxGradientParameters) {
    throw BudgetError("projected gradient: more than 64 kernel parameters");
  }
  const std::size_t restarts = std::max<std::size_t>(opt.restarts, 1);
  const auto runs = parallel_map<Descent>(restarts, [&](std::size_t r) {
    std::vector<double> x;
    if (r == 0) {
      x.assign(Y * U, 1.0 / static_cast<double>(U));
    } else {
      Rng rng = make_stream(opt.seed, r);
      x = dirichlet_ones(rng, Y, U);
    }
    return projected_descent(team, std::move(x), opt);
  });
  std::size_t best = 0;
  std::uint64_t evaluations = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    evaluations += runs[r].evaluations;
    if (runs[r].value < runs[best].value - kTieTol) best = r;
  }
  const Mixture policy = Mixture::iid(kernel_from_point(runs[best].x, 1, Y, U), n);
  return OptResult{expected_cost_static_exact(team, policy).value, policy, evaluations,
                   OptMethod::kProjectedGradient, restarts, runs[best].converged, {}};
}

double symmetric_projected_gradient_norm(const StaticTeam& team, const RelaxedKernel& kernel,
                                         double fd_step) {
  std::uint64_t evaluations = 0;
  const auto g = fd_gradient(team, kernel.data(), fd_step, evaluations);
  return projected_norm(kernel.data(), g, team.actions().size());
}

OptResult optimize_product_grid(const StaticTeam& team, double pitch) {
  const std::size_t Y = team.observations().size(), U = team.actions().size(), n = team.num_dms();
  const double per_dm = static_cast<double>(grid_size(Y, U, pitch));
  if (std::pow(per_dm, static_cast<double>(n)) > kProfileBudget) {
    throw BudgetError("product grid: more than 1e7 grid profiles");
  }
  const auto grid = kernel_grid(1, Y, U, pitch);
  // The cost is permutation invariant, so sorted grid-index tuples suffice.
  const SearchBest best = orbit_search(grid.size(), n, [&](const std::vector<std::uint64_t>& ids) {
    PolicyProfile profile;
    for (auto id : ids) profile.push_back(grid[id]);
    return kernels::static_cost(team, profile);
  });
  PolicyProfile profile;
  for (auto id : best.ids) profile.push_back(grid[id]);
  return OptResult{best.value, Mixture::single(std::move(profile)), best.evaluations,
                   OptMethod::kProductGrid, 0, true, {}};
}

OptResult optimize_exchangeable_grid(const StaticTeam& team, double pitch) {
  const std::size_t Y = team.observations().size(), U = team.actions().size(), n = team.num_dms();
  const std::uint64_t policies = DeterministicPolicy::count(1, Y, U);
  const double orbit_count = deterministic_orbit_count(policies, n);
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / pitch));
  double points = 1.0;
  for (std::size_t j = 1; j < static_cast<std::size_t>(orbit_count); ++j) {
    points = points * (static_cast<double>(steps) + static_cast<double>(j)) / static_cast<double>(j);
    if (points > kExchangeableGridBudget) break;
  }
  if (orbit_count > kExchangeableGridBudget || points > kExchangeableGridBudget) {
    throw BudgetError("exchangeable grid: more than 1e6 candidate mixtures");
  }
  // Each orbit contributes its distinct arrangements with equal weight.
  std::vector<std::vector<PolicyProfile>> arrangements;
  std::vector<std::uint64_t> ids(n, 0);
  do {
    std::vector<PolicyProfile> perms;
    std::vector<std::uint64_t> p = ids;
    do {
      perms.push_back(kernels_from_ids(p, 1, Y, U));
    } while (std::next_permutation(p.begin(), p.end()));
    arrangements.push_back(std::move(perms));
  } while (next_orbit(ids, policies));

  const std::size_t K = arrangements.size();
  auto build = [&](const std::vector<std::size_t>& c) {
    std::vector<MixtureAtom> atoms;
    for (std::size_t k = 0; k < K; ++k) {
      if (c[k] == 0) continue;
      const double w = static_cast<double>(c[k]) / static_cast<double>(steps) /
                       static_cast<double>(arrangements[k].size());
      for (const auto& p : arrangements[k]) atoms.push_back({w, p});
    }
    return Mixture(std::move(atoms), MixtureClass::kExchangeable);
  };

  std::vector<std::size_t> comp(K, 0);
  comp[K - 1] = steps;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_comp;
  std::uint64_t evaluations = 0;
  bool more = true;
  std::vector<std::vector<std::size_t>> batch;
  while (more) {
    batch.clear();
    while (more && batch.size() < kBatch) {
      batch.push_back(comp);
      more = next_composition(comp);
    }
    const auto values = parallel_map<double>(batch.size(), [&](std::size_t b) {
      return expected_cost_static_exact(team, build(batch[b])).value;
    });
    for (std::size_t b = 0; b < batch.size(); ++b) {
      check_finite(values[b], "exchangeable grid");
      if (values[b] < best_value - kTieTol) {
        best_value = values[b];
        best_comp = batch[b];
      }
    }
    evaluations += batch.size();
  }
  return OptResult{best_value, build(best_comp), evaluations, OptMethod::kExchangeableGrid, 0,
                   true, {}};
}

SymmetricGap symmetric_gap(const StaticTeam& team, const SymmetricOptions& options) {
  SymmetricGap gap;
  gap.j_sym = optimize_symmetric_kernel(team, options).best_value;
  gap.j_det = brute_force_dirac(team).best_value;
  const double eps = gap.j_sym - gap.j_det;
  if (eps < -1e-9) {
    throw Error("symmetric optimum " + std::to_string(gap.j_sym) +
                " lies below the deterministic optimum " + std::to_string(gap.j_det));
  }
  gap.eps = std::max(0.0, eps);
  return gap;
}

OptResult optimize_symmetric_dynamic(const DynamicTeam& team, const CrossEntropyOptions& opt) {
  if (opt.elites == 0 || opt.population < 2 * opt.elites) {
    throw std::invalid_argument("cross entropy: population must be at least twice the elites");
  }
  if (!(opt.smoothing > 0.0 && opt.smoothing <= 1.0)) {
    throw std::invalid_argument("cross entropy: smoothing must lie in (0, 1]");
  }
  const std::size_t T = team.horizon(), Y = team.observations().size(), U = team.actions().size(),
                    n = team.num_dms();
  if (Y * (U - 1) > kMaxGradientParameters) {
    throw BudgetError("cross entropy: more than 64 kernel parameters per stage");
  }
  const std::size_t rows = T * Y;
  const ObsLawFn obs = direct_obs_law(team);
  const RelaxedKernel uniform = RelaxedKernel::uniform(T, Y, U);
  const bool exact =
      kernels::dynamic_work(team, PolicyProfile(n, uniform)) <= opt.exact_work_limit;

  struct Candidate {
    std::vector<double> x;
    double value;
  };
  auto evaluate = [&](std::vector<Candidate>& cands, std::size_t from, std::uint64_t it) {
    const auto values = parallel_map<double>(cands.size() - from, [&](std::size_t j) {
      const RelaxedKernel k = kernel_from_point(cands[from + j].x, T, Y, U);
      if (exact) return kernels::dynamic_cost(team, PolicyProfile(n, k), obs);
      const McSettings mc{opt.mc_samples, mix_seed(opt.seed, 0x5EED0000ULL + it), opt.chunk_size};
      return expected_cost_dynamic(team, Mixture::iid(k, n), EvalMode::kMonteCarlo, mc).value;
    });
    for (std::size_t j = 0; j < values.size(); ++j) {
      check_finite(values[j], "cross entropy");
      cands[from + j].value = values[j];
    }
  };

  std::vector<double> mean(uniform.data());
  double concentration = opt.initial_concentration;
  std::vector<Candidate> elites;
  OptResult result{0.0, Mixture::iid(uniform, n), 0, OptMethod::kCrossEntropy, 0, true, {}};
  for (std::size_t it = 0; it <= opt.iterations; ++it) {
    Rng rng = make_stream(opt.seed, it);
    std::vector<Candidate> pop = elites;
    const std::size_t carried = pop.size();
    if (it == 0) pop.push_back({mean, 0.0});
    while (pop.size() < opt.population) {
      std::vector<double> x(rows * U);
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t u = 0; u < U; ++u) {
          const double a = concentration * mean[r * U + u] + opt.concentration_floor;
          std::gamma_distribution<double> gamma(a, 1.0);
          x[r * U + u] = gamma(rng);
          s += x[r * U + u];
        }
        for (std::size_t u = 0; u < U; ++u) {
          x[r * U + u] = s > 0.0 ? x[r * U + u] / s : 1.0 / static_cast<double>(U);
        }
      }
      pop.push_back({std::move(x), 0.0});
    }
    evaluate(pop, carried, it);
    result.evaluations += pop.size() - carried;
    std::stable_sort(pop.begin(), pop.end(),
                     [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    elites.assign(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(opt.elites));
    double elite_mean = 0.0;
    std::vector<double> elite_x(rows * U, 0.0);
    for (const auto& e : elites) {
      elite_mean += e.value;
      for (std::size_t j = 0; j < elite_x.size(); ++j) elite_x[j] += e.x[j];
    }
    elite_mean /= static_cast<double>(opt.elites);
    result.elite_means.push_back(elite_mean);
    for (std::size_t j = 0; j < mean.size(); ++j) {
      mean[j] = opt.smoothing * elite_x[j] / static_cast<double>(opt.elites) +
                (1.0 - opt.smoothing) * mean[j];
    }
    concentration *= opt.concentration_growth;
  }
  const RelaxedKernel best = kernel_from_point(elites.front().x, T, Y, U);
  result.best_value = elites.front().value;
  result.best_policy = Mixture::iid(best, n);
  result.restarts = opt.iterations;
  return result;
}

}  // namespace exteam
