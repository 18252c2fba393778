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
#include "exteam/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "exteam/error.hpp"

namespace exteam {
namespace {

using Counts = std::vector<std::uint16_t>;

struct CountOutcome {
  Counts counts;
  double prob;
};

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t j = 1; j <= k; ++j) c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
  return std::round(c);
}

// Multinomial(n, p) over count vectors, restricted to the support of p.
std::vector<CountOutcome> multinomial(std::size_t n, std::span<const double> p) {
  std::vector<CountOutcome> out;
  const std::size_t k = p.size();
  Counts counts(k, 0);
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left, double prob) -> void {
    if (pos + 1 == k || left == 0) {
      if (left > 0 && p[pos] <= 0.0) return;
      counts[pos] = static_cast<std::uint16_t>(left);
      out.push_back({counts, prob * std::pow(p[pos], static_cast<double>(left))});
      counts[pos] = 0;
      return;
    }
    const std::size_t top = p[pos] > 0.0 ? left : 0;
    for (std::size_t c = 0; c <= top; ++c) {
      counts[pos] = static_cast<std::uint16_t>(c);
      self(self, pos + 1, left - c,
           prob * binomial(left, c) * std::pow(p[pos], static_cast<double>(c)));
    }
    counts[pos] = 0;
  };
  rec(rec, 0, n, 1.0);
  return out;
}

void check_static_profile(const StaticTeam& team, const PolicyProfile& profile) {
  if (profile.size() != team.num_dms()) {
    throw std::invalid_argument("profile has " + std::to_string(profile.size()) +
                                " kernels for a team of " + std::to_string(team.num_dms()));
  }
  for (const auto& k : profile) {
    if (k.stages() != 1 || k.obs_count() != team.observations().size() ||
        k.action_count() != team.actions().size()) {
      throw std::invalid_argument("profile kernel shape does not match the static team");
    }
  }
}

void check_dynamic_profile(const DynamicTeam& team, const PolicyProfile& profile) {
  if (profile.size() != team.num_dms()) {
    throw std::invalid_argument("profile has " + std::to_string(profile.size()) +
                                " kernels for a team of " + std::to_string(team.num_dms()));
  }
  for (const auto& k : profile) {
    if (k.stages() != team.horizon() || k.obs_count() != team.observations().size() ||
        k.action_count() != team.actions().size()) {
      throw std::invalid_argument("profile kernel shape does not match the dynamic team");
    }
  }
}

// Odometer over tuples in {0..base-1}^n; returns false after the last tuple.
bool advance(std::vector<std::size_t>& digits, std::size_t base) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < base) return true;
    digits[i] = 0;
  }
  return false;
}

std::vector<std::size_t> tally(std::span<const std::size_t> tuple, std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t v : tuple) ++counts[v];
  return counts;
}

}  // namespace

double mean_from_counts(std::span<const double> values, std::span<const std::size_t> counts,
                        std::size_t n) {
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    sum += static_cast<double>(counts[k]) * values[k];
  }
  return sum / static_cast<double>(n);
}

ObsLawFn direct_obs_law(const DynamicTeam& team) {
  return [&team](std::size_t t, std::size_t, std::size_t x, std::size_t y) {
    return team.obs_kernel(t)(x, y);
  };
}

// ---------------------------------------------------------------------------
namespace reference {

double static_work(const StaticTeam& team) {
  const double n = static_cast<double>(team.num_dms());
  return static_cast<double>(team.omega0().size()) *
         std::pow(static_cast<double>(team.observations().size()), n) *
         std::pow(static_cast<double>(team.actions().size()), n) * n;
}

double static_cost(const StaticTeam& team, const PolicyProfile& profile) {
  check_static_profile(team, profile);
  const std::size_t n = team.num_dms(), Y = team.observations().size(),
                    U = team.actions().size();
  const auto& values = team.actions().values();
  double total = 0.0;
  for (std::size_t w = 0; w < team.omega0().size(); ++w) {
    const double pw = team.prior()[w];
    if (pw == 0.0) continue;
    std::vector<std::size_t> y(n, 0);
    do {
      double py = pw;
      for (std::size_t i = 0; i < n; ++i) py *= team.obs_kernel()(w, y[i]);
      if (py == 0.0) continue;
      std::vector<std::size_t> u(n, 0);
      do {
        double pu = py;
        for (std::size_t i = 0; i < n; ++i) pu *= profile[i].prob(0, y[i], u[i]);
        if (pu == 0.0) continue;
        const double mean = mean_from_counts(values, tally(u, U), n);
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += team.stage_cost(w, u[i], mean);
        total += pu * c / static_cast<double>(n);
      } while (advance(u, U));
    } while (advance(y, Y));
  }
  return total;
}

double dynamic_work(const DynamicTeam& team) {
  const double n = static_cast<double>(team.num_dms());
  const double per_dm = static_cast<double>(team.states().size() * team.observations().size() *
                                            team.actions().size() *
                                            team.dyn_noise_probs().size());
  return static_cast<double>(team.omega0().size() * team.horizon()) *
         std::pow(static_cast<double>(team.states().size()), n) * std::pow(per_dm, n);
}

double dynamic_cost(const DynamicTeam& team, const PolicyProfile& profile, const ObsLawFn& obs) {
  check_dynamic_profile(team, profile);
  const std::size_t n = team.num_dms(), X = team.states().size(),
                    Y = team.observations().size(), U = team.actions().size(),
                    W = team.dyn_noise_probs().size(), T = team.horizon();
  const auto& xv = team.states().values();
  const auto& uv = team.actions().values();
  // Joint state tuples are indexed in base |X| with DM 0 most significant.
  std::size_t tuples = 1;
  for (std::size_t i = 0; i < n; ++i) tuples *= X;
  auto decode = [&](std::size_t code) {
    std::vector<std::size_t> x(n);
    for (std::size_t i = n; i-- > 0;) {
      x[i] = code % X;
      code /= X;
    }
    return x;
  };
  auto encode = [&](const std::vector<std::size_t>& x) {
    std::size_t code = 0;
    for (std::size_t v : x) code = code * X + v;
    return code;
  };

  double total = 0.0;
  for (std::size_t w = 0; w < team.omega0().size(); ++w) {
    const double pw = team.prior()[w];
    if (pw == 0.0) continue;
    std::vector<double> dist(tuples, 0.0);
    for (std::size_t code = 0; code < tuples; ++code) {
      const auto x = decode(code);
      double p = pw;
      for (std::size_t i = 0; i < n; ++i) p *= team.init_kernel()(w, x[i]);
      dist[code] = p;
    }
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> next(tuples, 0.0);
      for (std::size_t code = 0; code < tuples; ++code) {
        if (dist[code] == 0.0) continue;
        const auto x = decode(code);
        const double mean_x = mean_from_counts(xv, tally(x, X), n);
        std::vector<std::size_t> y(n, 0);
        do {
          double py = dist[code];
          for (std::size_t i = 0; i < n; ++i) py *= obs(t, w, x[i], y[i]);
          if (py == 0.0) continue;
          std::vector<std::size_t> u(n, 0);
          do {
            double pu = py;
            for (std::size_t i = 0; i < n; ++i) pu *= profile[i].prob(t, y[i], u[i]);
            if (pu == 0.0) continue;
            const double mean_u = mean_from_counts(uv, tally(u, U), n);
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i) c += team.stage_cost(w, x[i], u[i], mean_u, mean_x);
            total += pu * c / static_cast<double>(n);
            if (t + 1 == T) continue;
            std::vector<std::size_t> v(n, 0), x_next(n);
            do {
              double pv = pu;
              for (std::size_t i = 0; i < n; ++i) pv *= team.dyn_noise_probs()[v[i]];
              if (pv == 0.0) continue;
              for (std::size_t i = 0; i < n; ++i) {
                x_next[i] = team.next_state(t, x[i], u[i], mean_x, mean_u, v[i]);
              }
              next[encode(x_next)] += pv;
            } while (advance(v, W));
          } while (advance(u, U));
        } while (advance(y, Y));
      }
      dist = std::move(next);
    }
  }
  return total;
}

}  // namespace reference

// ---------------------------------------------------------------------------
namespace kernels {

double static_work(const StaticTeam& team) {
  const std::size_t n = team.num_dms(), k = team.actions().size();
  return static_cast<double>(team.omega0().size()) * static_cast<double>(n) *
         std::pow(static_cast<double>(n + 1), static_cast<double>(k - 1)) *
         static_cast<double>(k);
}
namespace {

// Count DP over DMs; law(i, omega0, out) fills DM i's action weights. The
// weights need not be normalized, which gives the polynomial extension of the
// cost used for finite differences.
template <class LawFn>
double static_count_dp(const StaticTeam& team, LawFn&& law_of) {
  const std::size_t n = team.num_dms(), K = team.actions().size();
  const auto& values = team.actions().values();
  // Dense table over the first K - 1 action counts (the last is implied).
  std::vector<std::size_t> stride(K, 0);
  std::size_t size = 1;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    stride[k] = size;
    size *= n + 1;
  }
  std::vector<double> dist(size), next(size);
  std::vector<double> law(K);
  std::vector<std::size_t> counts(K);
  double total = 0.0;
  for (std::size_t w = 0; w < team.omega0().size(); ++w) {
    const double pw = team.prior()[w];
    if (pw == 0.0) continue;
    std::fill(dist.begin(), dist.end(), 0.0);
    dist[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      law_of(i, w, law);
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t code = 0; code < size; ++code) {
        const double p = dist[code];
        if (p == 0.0) continue;
        for (std::size_t u = 0; u + 1 < K; ++u) {
          if (law[u] != 0.0) next[code + stride[u]] += p * law[u];
        }
        next[code] += p * law[K - 1];
      }
      std::swap(dist, next);
    }
    double sub = 0.0;
    for (std::size_t code = 0; code < size; ++code) {
      const double p = dist[code];
      if (p == 0.0) continue;
      std::size_t rest = code, used = 0;
      for (std::size_t k = 0; k + 1 < K; ++k) {
        counts[k] = rest % (n + 1);
        rest /= n + 1;
        used += counts[k];
      }
      if (used > n) continue;
      counts[K - 1] = n - used;
      const double mean = mean_from_counts(values, counts, n);
      double c = 0.0;
      for (std::size_t u = 0; u < K; ++u) {
        if (counts[u] > 0) c += static_cast<double>(counts[u]) * team.stage_cost(w, u, mean);
      }
      sub += p * c / static_cast<double>(n);
    }
    total += pw * sub;
  }
  return total;
}

}  // namespace

double static_cost(const StaticTeam& team, const PolicyProfile& profile) {
  check_static_profile(team, profile);
  const std::size_t Y = team.observations().size(), K = team.actions().size();
  return static_count_dp(team, [&](std::size_t i, std::size_t w, std::vector<double>& law) {
    for (std::size_t u = 0; u < K; ++u) {
      double a = 0.0;
      for (std::size_t y = 0; y < Y; ++y) a += team.obs_kernel()(w, y) * profile[i].prob(0, y, u);
      law[u] = a;
    }
  });
}

double static_cost_iid_raw(const StaticTeam& team, std::span<const double> kernel_probs) {
  const std::size_t Y = team.observations().size(), K = team.actions().size();
  if (kernel_probs.size() != Y * K) {
    throw std::invalid_argument("static_cost_iid_raw: expected |obs| x |actions| entries");
  }
  return static_count_dp(team, [&](std::size_t, std::size_t w, std::vector<double>& law) {
    for (std::size_t u = 0; u < K; ++u) {
      double a = 0.0;
      for (std::size_t y = 0; y < Y; ++y) a += team.obs_kernel()(w, y) * kernel_probs[y * K + u];
      law[u] = a;
    }
  });
}

namespace {

struct Grouping {
  std::vector<std::size_t> sizes;
  std::vector<const RelaxedKernel*> kernels;
};

Grouping group_profile(const PolicyProfile& profile) {
  KernelPool pool;
  Grouping g;
  for (const auto& k : profile) {
    const std::size_t id = pool.intern(k);
    if (id == g.sizes.size()) {
      g.sizes.push_back(0);
      g.kernels.push_back(&k);
    }
    ++g.sizes[id];
  }
  return g;
}

// Product over groups of the per-group outcome lists, concatenated.
std::map<Counts, double> product_over_groups(const std::vector<std::vector<CountOutcome>>& parts,
                                             double scale) {
  std::map<Counts, double> out;
  out[{}] = scale;
  for (const auto& part : parts) {
    std::map<Counts, double> next;
    for (const auto& [prefix, p] : out) {
      for (const auto& o : part) {
        Counts key = prefix;
        key.insert(key.end(), o.counts.begin(), o.counts.end());
        next[key] += p * o.prob;
      }
    }
    out = std::move(next);
  }
  return out;
}

// Convolution of count distributions of the same length.
std::vector<CountOutcome> convolve(const std::vector<CountOutcome>& a,
                                   const std::vector<CountOutcome>& b) {
  std::map<Counts, double> acc;
  for (const auto& x : a) {
    for (const auto& y : b) {
      Counts c = x.counts;
      for (std::size_t k = 0; k < c.size(); ++k) c[k] = static_cast<std::uint16_t>(c[k] + y.counts[k]);
      acc[c] += x.prob * y.prob;
    }
  }
  std::vector<CountOutcome> out;
  out.reserve(acc.size());
  for (auto& [c, p] : acc) out.push_back({c, p});
  return out;
}

}  // namespace

double dynamic_work(const DynamicTeam& team, const PolicyProfile& profile) {
  const Grouping g = group_profile(profile);
  const std::size_t X = team.states().size(), U = team.actions().size();
  double pairs = 1.0, states = 1.0;
  for (std::size_t n : g.sizes) {
    pairs *= binomial(n + X * U - 1, X * U - 1);
    states *= binomial(n + X - 1, X - 1);
  }
  return static_cast<double>(team.omega0().size() * team.horizon()) * pairs * (1.0 + states);
}

double dynamic_cost(const DynamicTeam& team, const PolicyProfile& profile, const ObsLawFn& obs) {
  check_dynamic_profile(team, profile);
  const std::size_t n = team.num_dms(), X = team.states().size(),
                    Y = team.observations().size(), U = team.actions().size(),
                    T = team.horizon();
  const auto& xv = team.states().values();
  const auto& uv = team.actions().values();
  const Grouping groups = group_profile(profile);
  const std::size_t G = groups.sizes.size();

  double total = 0.0;
  std::vector<std::size_t> state_counts(X), action_counts(U);
  std::vector<double> trans(X);
  for (std::size_t w = 0; w < team.omega0().size(); ++w) {
    const double pw = team.prior()[w];
    if (pw == 0.0) continue;
    std::vector<std::vector<CountOutcome>> init_parts;
    const auto init = team.init_kernel().row(w);
    for (std::size_t g = 0; g < G; ++g) init_parts.push_back(multinomial(groups.sizes[g], init));
    std::map<Counts, double> dist = product_over_groups(init_parts, pw);

    for (std::size_t t = 0; t < T; ++t) {
      // act[g][x] is the law of a group-g DM's action at state x.
      std::vector<std::vector<std::vector<double>>> act(G, std::vector<std::vector<double>>(X, std::vector<double>(U, 0.0)));
      for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t x = 0; x < X; ++x) {
          for (std::size_t y = 0; y < Y; ++y) {
            const double py = obs(t, w, x, y);
            if (py == 0.0) continue;
            for (std::size_t u = 0; u < U; ++u) act[g][x][u] += py * groups.kernels[g]->prob(t, y, u);
          }
        }
      }
      std::map<Counts, double> next;
      for (const auto& [state, p] : dist) {
        std::fill(state_counts.begin(), state_counts.end(), 0);
        for (std::size_t g = 0; g < G; ++g) {
          for (std::size_t x = 0; x < X; ++x) state_counts[x] += state[g * X + x];
        }
        const double mean_x = mean_from_counts(xv, state_counts, n);
        // One multinomial per occupied (group, state) cell.
        std::vector<std::pair<std::size_t, std::size_t>> cells;
        std::vector<std::vector<CountOutcome>> cell_laws;
        for (std::size_t g = 0; g < G; ++g) {
          for (std::size_t x = 0; x < X; ++x) {
            const std::size_t k = state[g * X + x];
            if (k == 0) continue;
            cells.emplace_back(g, x);
            cell_laws.push_back(multinomial(k, act[g][x]));
          }
        }
        std::vector<std::size_t> pick(cells.size(), 0);
        while (true) {
          double q = p;
          std::fill(action_counts.begin(), action_counts.end(), 0);
          for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& o = cell_laws[c][pick[c]];
            q *= o.prob;
            for (std::size_t u = 0; u < U; ++u) action_counts[u] += o.counts[u];
          }
          if (q != 0.0) {
            const double mean_u = mean_from_counts(uv, action_counts, n);
            double cost = 0.0;
            for (std::size_t c = 0; c < cells.size(); ++c) {
              const std::size_t x = cells[c].second;
              const auto& o = cell_laws[c][pick[c]];
              for (std::size_t u = 0; u < U; ++u) {
                if (o.counts[u] > 0) {
                  cost += o.counts[u] * team.stage_cost(w, x, u, mean_u, mean_x);
                }
              }
            }
            total += q * cost / static_cast<double>(n);
            if (t + 1 < T) {
              std::vector<std::vector<CountOutcome>> group_next(
                  G, std::vector<CountOutcome>{{Counts(X, 0), 1.0}});
              for (std::size_t c = 0; c < cells.size(); ++c) {
                const auto [g, x] = cells[c];
                const auto& o = cell_laws[c][pick[c]];
                for (std::size_t u = 0; u < U; ++u) {
                  if (o.counts[u] == 0) continue;
                  team.transition_law(t, x, u, mean_x, mean_u, trans);
                  group_next[g] = convolve(group_next[g], multinomial(o.counts[u], trans));
                }
              }
              for (const auto& [key, pn] : product_over_groups(group_next, q)) next[key] += pn;
            }
          }
          std::size_t c = cells.size();
          bool done = true;
          while (c > 0) {
            --c;
            if (++pick[c] < cell_laws[c].size()) {
              done = false;
              break;
            }
            pick[c] = 0;
          }
          if (done) break;
        }
      }
      dist = std::move(next);
    }
  }
  return total;
}

}  // namespace kernels
}  // namespace exteam
