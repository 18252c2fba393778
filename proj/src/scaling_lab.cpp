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
#include "exteam/scaling_lab.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "exteam/error.hpp"
#include "exteam/evaluation.hpp"
#include "exteam/parallel.hpp"

namespace exteam {
namespace {

std::string real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_n_list(std::span<const std::size_t> ns) {
  if (ns.empty()) throw std::invalid_argument("N list is empty");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] == 0) throw std::invalid_argument("N list: team sizes must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) throw std::invalid_argument("N list must be strictly increasing");
  }
}

template <class F>
GapRow timed_row(std::size_t n, F&& f) {
  const auto start = std::chrono::steady_clock::now();
  GapRow row = f();
  row.n = n;
  row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace

StaticFamily static_family(const StaticTeam& base) {
  return [base](std::size_t n) { return base.with_num_dms(n); };
}

DynamicFamily dynamic_family(const DynamicTeam& base) {
  return [base](std::size_t n) { return base.with_num_dms(n); };
}

GapCurve gap_curve(const StaticFamily& family, std::span<const std::size_t> ns,
                   const SymmetricOptions& options) {
  check_n_list(ns);
  GapCurve curve;
  curve.rows = parallel_map<GapRow>(ns.size(), [&](std::size_t i) {
    return timed_row(ns[i], [&] {
      const SymmetricGap g = symmetric_gap(family(ns[i]), options);
      return GapRow{0, g.j_sym, g.j_det, g.eps, 0.0};
    });
  });
  return curve;
}

GapCurve dynamic_gap_curve(const DynamicFamily& family, std::span<const std::size_t> ns,
                           const CrossEntropyOptions& options) {
  check_n_list(ns);
  GapCurve curve;
  curve.rows = parallel_map<GapRow>(ns.size(), [&](std::size_t i) {
    return timed_row(ns[i], [&] {
      const DynamicTeam team = family(ns[i]);
      const double j_sym = optimize_symmetric_dynamic(team, options).best_value;
      const double j_det = brute_force_dirac(team).best_value;
      const double eps = j_sym - j_det;
      if (eps < -1e-9) {
        throw Error("dynamic symmetric value " + real(j_sym) + " lies below the deterministic optimum " +
                    real(j_det) + " at N=" + std::to_string(ns[i]));
      }
      return GapRow{0, j_sym, j_det, std::max(0.0, eps), 0.0};
    });
  });
  return curve;
}

LimitEstimate limit_cost_estimate(const RelaxedKernel& recipe, const StaticFamily& family,
                                  std::span<const std::size_t> ns, std::size_t tail_window) {
  check_n_list(ns);
  if (tail_window == 0 || ns.size() <= tail_window) {
    throw std::invalid_argument("limit_cost_estimate: N list must be longer than the tail window");
  }
  LimitEstimate est;
  est.ns.assign(ns.begin(), ns.end());
  est.tail_window = tail_window;
  est.values = parallel_map<double>(ns.size(), [&](std::size_t i) {
    return expected_cost_static_exact(family(ns[i]), Mixture::iid(recipe, ns[i])).value;
  });
  est.limsup_proxy = *std::max_element(est.values.end() - static_cast<std::ptrdiff_t>(tail_window),
                                       est.values.end());
  bool up = true, down = true;
  for (std::size_t i = 1; i < est.values.size(); ++i) {
    up = up && est.values[i] >= est.values[i - 1];
    down = down && est.values[i] <= est.values[i - 1];
  }
  est.monotone = up || down;
  return est;
}

DfAudit df_bound_audit(const std::vector<Mixture>& instances, std::span<const std::size_t> m_list) {
  if (m_list.empty()) throw std::invalid_argument("df_bound_audit: m list is empty");
  struct Job {
    std::size_t instance, m;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    for (std::size_t m : m_list) {
      if (m >= 1 && m <= instances[k].num_dms()) jobs.push_back({k, m});
    }
  }
  DfAudit audit;
  audit.rows = parallel_map<DfAuditRow>(jobs.size(), [&](std::size_t j) {
    const Mixture& p = instances[jobs[j].instance];
    const std::size_t m = jobs[j].m, n = p.num_dms();
    DfAuditRow row;
    row.instance = jobs[j].instance;
    row.n = n;
    row.m = m;
    row.tv = profile_tv_distance(restrict(p, m), df_extend_marginal(p, m));
    row.bound = df_bound(n, m);
    row.slack = row.bound - row.tv;
    row.violation = row.tv > row.bound + kDfSlackTol;
    return row;
  });
  if (!audit.rows.empty()) {
    audit.min_slack = audit.max_slack = audit.rows.front().slack;
  }
  for (const auto& r : audit.rows) {
    audit.violations += r.violation ? 1 : 0;
    audit.min_slack = std::min(audit.min_slack, r.slack);
    audit.max_slack = std::max(audit.max_slack, r.slack);
  }
  return audit;
}

Mixture random_exchangeable_mixture(std::size_t n, std::size_t max_atoms, std::size_t stages,
                                    std::size_t obs_count, std::size_t action_count, Rng& rng) {
  const std::uint64_t policies = DeterministicPolicy::count(stages, obs_count, action_count);
  const std::size_t atoms = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(max_atoms));
  std::vector<MixtureAtom> out;
  double total = 0.0;
  for (std::size_t a = 0; a < std::min(atoms, max_atoms); ++a) {
    PolicyProfile profile;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = std::min<std::uint64_t>(
          policies - 1, static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(policies)));
      profile.push_back(DeterministicPolicy::from_index(id, stages, obs_count, action_count).to_kernel());
    }
    const double w = -std::log1p(-uniform01(rng));
    total += w;
    out.push_back({w, std::move(profile)});
  }
  for (auto& a : out) a.weight /= total;
  return symmetrize(Mixture(merge_atoms(out)));
}

std::vector<RestrictionRow> restriction_suboptimality(const RelaxedKernel& recipe,
                                                      const StaticFamily& family,
                                                      std::span<const std::size_t> ns) {
  check_n_list(ns);
  return parallel_map<RestrictionRow>(ns.size(), [&](std::size_t i) {
    const StaticTeam team = family(ns[i]);
    RestrictionRow row;
    row.n = ns[i];
    row.j_restricted = expected_cost_static_exact(team, Mixture::iid(recipe, ns[i])).value;
    row.j_det = brute_force_dirac(team).best_value;
    row.excess = row.j_restricted - row.j_det;
    return row;
  });
}

std::string to_csv(const GapCurve& curve, bool include_runtime) {
  std::string out = "N,J_sym,J_det,eps,runtime_s\n";
  for (const auto& r : curve.rows) {
    out += std::to_string(r.n) + "," + real(r.j_sym) + "," + real(r.j_det) + "," + real(r.eps) +
           "," + real(include_runtime ? r.runtime_s : 0.0) + "\n";
  }
  return out;
}

std::string to_csv(const LimitEstimate& e) {
  std::string out = "N,J_N,tail,limsup_proxy,monotone\n";
  const std::size_t tail_start = e.values.size() - e.tail_window;
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    out += std::to_string(e.ns[i]) + "," + real(e.values[i]) + "," + (i >= tail_start ? "1" : "0") +
           "," + real(e.limsup_proxy) + "," + (e.monotone ? "true" : "false") + "\n";
  }
  return out;
}

std::string to_csv(const DfAudit& audit) {
  std::string out = "instance,N,m,tv,bound,slack,violation\n";
  for (const auto& r : audit.rows) {
    out += std::to_string(r.instance) + "," + std::to_string(r.n) + "," + std::to_string(r.m) + "," +
           real(r.tv) + "," + real(r.bound) + "," + real(r.slack) + "," +
           (r.violation ? "true" : "false") + "\n";
  }
  return out;
}

std::string to_csv(const std::vector<RestrictionRow>& rows) {
  std::string out = "N,J_restricted,J_det,excess\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + real(r.j_restricted) + "," + real(r.j_det) + "," +
           real(r.excess) + "\n";
  }
  return out;
}

}  // namespace exteam
