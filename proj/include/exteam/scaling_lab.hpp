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
#ifndef EXTEAM_SCALING_LAB_HPP_
#define EXTEAM_SCALING_LAB_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "exteam/optimization.hpp"
#include "exteam/policy.hpp"
#include "exteam/rng.hpp"
#include "exteam/team_model.hpp"

namespace exteam {

using StaticFamily = std::function<StaticTeam(std::size_t n)>;
using DynamicFamily = std::function<DynamicTeam(std::size_t n)>;

StaticFamily static_family(const StaticTeam& base);
DynamicFamily dynamic_family(const DynamicTeam& base);

struct GapRow {
  std::size_t n = 0;
  double j_sym = 0.0;
  double j_det = 0.0;
  double eps = 0.0;
  double runtime_s = 0.0;
};

struct GapCurve {
  std::vector<GapRow> rows;
  std::size_t tail_window = 3;
};

// N list must be nonempty and strictly increasing.
GapCurve gap_curve(const StaticFamily& family, std::span<const std::size_t> ns,
                   const SymmetricOptions& options = {});
// J_sym from the cross-entropy solver, J_det from brute force.
GapCurve dynamic_gap_curve(const DynamicFamily& family, std::span<const std::size_t> ns,
                           const CrossEntropyOptions& options = {});

struct LimitEstimate {
  std::vector<std::size_t> ns;
  std::vector<double> values;
  std::size_t tail_window = 3;
  // Max over the last tail_window values; a proxy for the limsup, not the
  // limsup itself.
  double limsup_proxy = 0.0;
  // The whole sequence is monotone (either direction).
  bool monotone = false;
};

// J_N of recipe^{(x) N} for each N in the list.
LimitEstimate limit_cost_estimate(const RelaxedKernel& recipe, const StaticFamily& family,
                                  std::span<const std::size_t> ns, std::size_t tail_window);

struct DfAuditRow {
  std::size_t instance = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  double tv = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool violation = false;
};

struct DfAudit {
  std::vector<DfAuditRow> rows;
  std::size_t violations = 0;
  double min_slack = 0.0;
  double max_slack = 0.0;
};

// Slack tolerance for the Diaconis-Freedman bound.
inline constexpr double kDfSlackTol = 1e-12;

// Every (instance, m) with m <= N; m values above an instance's N are skipped.
DfAudit df_bound_audit(const std::vector<Mixture>& instances, std::span<const std::size_t> m_list);

// Symmetrization of a random mixture of up to max_atoms random deterministic
// profiles with Dirichlet(1) weights.
Mixture random_exchangeable_mixture(std::size_t n, std::size_t max_atoms, std::size_t stages,
                                    std::size_t obs_count, std::size_t action_count, Rng& rng);

struct RestrictionRow {
  std::size_t n = 0;
  double j_restricted = 0.0;
  double j_det = 0.0;
  double excess = 0.0;
};

// Excess of recipe^{(x) N} over the N-DM deterministic optimum.
std::vector<RestrictionRow> restriction_suboptimality(const RelaxedKernel& recipe,
                                                      const StaticFamily& family,
                                                      std::span<const std::size_t> ns);

// CSV renderings. Runtimes are written only when include_runtime is set so
// that repeated runs produce identical files.
std::string to_csv(const GapCurve& curve, bool include_runtime);
std::string to_csv(const LimitEstimate& estimate);
std::string to_csv(const DfAudit& audit);
std::string to_csv(const std::vector<RestrictionRow>& rows);

}  // namespace exteam

#endif  // EXTEAM_SCALING_LAB_HPP_
