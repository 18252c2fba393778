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
#include "exteam/evaluation.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "exteam/error.hpp"
#include "exteam/kernels.hpp"
#include "exteam/rng.hpp"

namespace exteam {
namespace {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Welford accumulator; chunks are merged in index order.
struct RunningStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
  }
};

std::vector<double> atom_weights(const Mixture& mixture) {
  std::vector<double> w;
  w.reserve(mixture.atoms().size());
  for (const auto& a : mixture.atoms()) w.push_back(a.weight);
  return w;
}

template <class Draw>
CostEstimate run_mc(const McSettings& mc, Draw&& draw) {
  if (mc.samples == 0) throw std::invalid_argument("Monte Carlo needs at least one sample");
  const std::size_t chunk = std::max<std::size_t>(mc.chunk_size, 1);
  const std::uint64_t chunks = (mc.samples + chunk - 1) / chunk;
  auto parts = parallel_map<RunningStats>(static_cast<std::size_t>(chunks), [&](std::size_t c) {
    Rng rng = make_stream(mc.seed, c);
    RunningStats s;
    const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
    const std::uint64_t end = std::min<std::uint64_t>(mc.samples, begin + chunk);
    for (std::uint64_t i = begin; i < end; ++i) s.add(draw(rng));
    return s;
  });
  RunningStats all;
  for (const auto& p : parts) all.merge(p);
  if (!std::isfinite(all.mean) || !std::isfinite(all.m2)) {
    throw NonFiniteError("Monte Carlo estimate is not finite");
  }
  CostEstimate e;
  e.value = all.mean;
  e.std_error = all.n > 1 ? std::sqrt(std::max(0.0, all.m2) / static_cast<double>(all.n - 1) /
                                      static_cast<double>(all.n))
                          : 0.0;
  e.exact = false;
  e.samples = mc.samples;
  e.seed = mc.seed;
  return e;
}

CostEstimate exact_estimate(double value) {
  if (!std::isfinite(value)) throw NonFiniteError("exact expected cost is not finite");
  CostEstimate e;
  e.value = value;
  e.exact = true;
  return e;
}

// Shared rollout for direct and reduced Monte Carlo.
double dynamic_draw(const DynamicTeam& team, const Mixture& mixture,
                    std::span<const double> weights, const ReductionData* reduction, Rng& rng) {
  const std::size_t n = team.num_dms(), X = team.states().size(), U = team.actions().size(),
                    T = team.horizon();
  const auto& profile = mixture.atoms()[sample_index(weights, uniform01(rng))].profile;
  const std::size_t w = sample_index(team.prior(), uniform01(rng));
  std::vector<std::size_t> x(n), u(n), xc(X), uc(U);
  for (std::size_t i = 0; i < n; ++i) x[i] = sample_index(team.init_kernel().row(w), uniform01(rng));
  double weight = 1.0, cost = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(xc.begin(), xc.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++xc[x[i]];
    const double mean_x = mean_from_counts(team.states().values(), xc, n);
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (reduction) {
        y[i] = sample_index(reduction->reference(t), uniform01(rng));
        weight *= reduction->weight(t, y[i], w, x[i]);
      } else {
        y[i] = sample_index(team.obs_kernel(t).row(x[i]), uniform01(rng));
      }
    }
    for (std::size_t i = 0; i < n; ++i) u[i] = sample_index(profile[i].row(t, y[i]), uniform01(rng));
    std::fill(uc.begin(), uc.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++uc[u[i]];
    const double mean_u = mean_from_counts(team.actions().values(), uc, n);
    for (std::size_t i = 0; i < n; ++i) cost += team.stage_cost(w, x[i], u[i], mean_u, mean_x);
    if (t + 1 == T) break;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = sample_index(team.dyn_noise_probs(), uniform01(rng));
      x[i] = team.next_state(t, x[i], u[i], mean_x, mean_u, v);
    }
  }
  return weight * cost / static_cast<double>(n);
}

void check_mixture_dms(std::size_t team_dms, const Mixture& mixture) {
  if (mixture.num_dms() != team_dms) {
    throw ConfigError("policy has " + std::to_string(mixture.num_dms()) +
                      " DMs but the team has " + std::to_string(team_dms));
  }
}

CostEstimate dynamic_exact(const DynamicTeam& team, const Mixture& mixture, const ObsLawFn& obs) {
  double work = 0.0;
  for (const auto& atom : mixture.atoms()) work += kernels::dynamic_work(team, atom.profile);
  if (work > kExactWorkBudget) {
    throw BudgetError("exact dynamic evaluation needs ~" + format_real(std::ceil(work)) +
                      " terms (budget 1e8); use Monte Carlo (--mc)");
  }
  const auto parts = parallel_map<double>(mixture.atoms().size(), [&](std::size_t a) {
    return kernels::dynamic_cost(team, mixture.atoms()[a].profile, obs);
  });
  double total = 0.0;
  for (std::size_t a = 0; a < parts.size(); ++a) total += mixture.atoms()[a].weight * parts[a];
  return exact_estimate(total);
}

void check_reduction(const DynamicTeam& team, const ReductionData& reduction) {
  if (reduction.horizon() != team.horizon()) {
    throw ConfigError("reduction: reference measures must cover every stage");
  }
  for (std::size_t t = 0; t < team.horizon(); ++t) {
    if (reduction.reference(t).size() != team.observations().size()) {
      throw ConfigError("reduction: reference measure has the wrong number of observations");
    }
    for (std::size_t y = 0; y < team.observations().size(); ++y) {
      for (std::size_t w = 0; w < team.omega0().size(); ++w) {
        for (std::size_t x = 0; x < team.states().size(); ++x) {
          const double psi = reduction.weight(t, y, w, x);
          if (!std::isfinite(psi) || psi > kMaxReductionWeight) {
            throw ConfigError("reduction: weight psi_" + std::to_string(t) + " exceeds 1e6 at y=" +
                              team.observations().label(y) + "; refine the reference measure");
          }
        }
      }
    }
  }
}

}  // namespace

std::string cost_estimate_csv_header() { return "value,std_error,exact,samples,seed"; }

std::string to_csv_row(const CostEstimate& e) {
  return format_real(e.value) + "," + format_real(e.std_error) + "," + (e.exact ? "true" : "false") +
         "," + std::to_string(e.samples) + "," + std::to_string(e.seed);
}

CostEstimate expected_cost_static_exact(const StaticTeam& team, const Mixture& mixture) {
  check_mixture_dms(team.num_dms(), mixture);
  const double work = kernels::static_work(team) * static_cast<double>(mixture.atoms().size());
  if (work > kExactWorkBudget) {
    throw BudgetError("exact static evaluation needs ~" + format_real(std::ceil(work)) +
                      " terms (budget 1e8); use Monte Carlo (--mc)");
  }
  const auto parts = parallel_map<double>(mixture.atoms().size(), [&](std::size_t a) {
    return kernels::static_cost(team, mixture.atoms()[a].profile);
  });
  double total = 0.0;
  for (std::size_t a = 0; a < parts.size(); ++a) total += mixture.atoms()[a].weight * parts[a];
  return exact_estimate(total);
}

CostEstimate expected_cost_static_mc(const StaticTeam& team, const Mixture& mixture,
                                     const McSettings& mc) {
  check_mixture_dms(team.num_dms(), mixture);
  for (const auto& atom : mixture.atoms()) {
    for (const auto& k : atom.profile) {
      if (k.stages() != 1 || k.obs_count() != team.observations().size() ||
          k.action_count() != team.actions().size()) {
        throw ConfigError("policy kernel shape does not match the static team");
      }
    }
  }
  const std::vector<double> weights = atom_weights(mixture);
  const std::size_t n = team.num_dms(), U = team.actions().size();
  return run_mc(mc, [&](Rng& rng) {
    const auto& profile = mixture.atoms()[sample_index(weights, uniform01(rng))].profile;
    const std::size_t w = sample_index(team.prior(), uniform01(rng));
    std::vector<std::size_t> y(n), u(n), counts(U, 0);
    for (std::size_t i = 0; i < n; ++i) y[i] = sample_index(team.obs_kernel().row(w), uniform01(rng));
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = sample_index(profile[i].row(0, y[i]), uniform01(rng));
      ++counts[u[i]];
    }
    const double mean = mean_from_counts(team.actions().values(), counts, n);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += team.stage_cost(w, u[i], mean);
    return c / static_cast<double>(n);
  });
}

CostEstimate expected_cost_dynamic(const DynamicTeam& team, const Mixture& mixture, EvalMode mode,
                                   const McSettings& mc) {
  check_mixture_dms(team.num_dms(), mixture);
  if (mode == EvalMode::kExact) return dynamic_exact(team, mixture, direct_obs_law(team));
  const std::vector<double> weights = atom_weights(mixture);
  return run_mc(mc, [&](Rng& rng) { return dynamic_draw(team, mixture, weights, nullptr, rng); });
}

CostEstimate expected_cost_reduced(const DynamicTeam& team, const ReductionData& reduction,
                                   const Mixture& mixture, EvalMode mode, const McSettings& mc) {
  check_mixture_dms(team.num_dms(), mixture);
  check_reduction(team, reduction);
  if (mode == EvalMode::kExact) {
    const ObsLawFn obs = [&reduction](std::size_t t, std::size_t w, std::size_t x, std::size_t y) {
      return reduction.reference(t)[y] * reduction.weight(t, y, w, x);
    };
    return dynamic_exact(team, mixture, obs);
  }
  const std::vector<double> weights = atom_weights(mixture);
  return run_mc(mc, [&](Rng& rng) { return dynamic_draw(team, mixture, weights, &reduction, rng); });
}

std::vector<double> EmpiricalMeasure::law(const FiniteSpace& space) const {
  std::vector<double> out(space.size(), 0.0);
  for (const auto& [point, w] : atoms) {
    bool found = false;
    for (std::size_t k = 0; k < space.size(); ++k) {
      if (space.value(k) == point) {
        out[k] += w;
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("empirical measure: point outside the space");
  }
  return out;
}

EmpiricalMeasure empirical_action_measure(std::span<const std::size_t> actions,
                                          const FiniteSpace& space) {
  if (actions.empty()) throw std::invalid_argument("empirical_action_measure: no actions");
  if (!space.has_values()) throw std::invalid_argument("empirical_action_measure: space has no values");
  EmpiricalMeasure m;
  const double w = 1.0 / static_cast<double>(actions.size());
  std::vector<std::size_t> counts(space.size(), 0);
  for (std::size_t a : actions) {
    if (a >= space.size()) throw std::invalid_argument("empirical_action_measure: index out of range");
    m.atoms.emplace_back(space.value(a), w);
    ++counts[a];
  }
  m.mean = mean_from_counts(space.values(), counts, actions.size());
  return m;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.empty() || q.empty()) throw std::invalid_argument("tv_distance: empty law");
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: laws on different supports");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

}  // namespace exteam
