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
#ifndef EXTEAM_POLICY_HPP_
#define EXTEAM_POLICY_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "exteam/team_model.hpp"

namespace exteam {

// Stochastic kernel from observations to actions, one table per stage.
// Entry (t, y, u) is the probability of action u after observation y at t.
class RelaxedKernel {
 public:
  RelaxedKernel(std::size_t stages, std::size_t obs_count, std::size_t action_count,
                std::vector<double> probs);

  static RelaxedKernel from_rows(const std::vector<std::vector<double>>& rows);
  static RelaxedKernel from_stages(const std::vector<std::vector<std::vector<double>>>& stages);
  static RelaxedKernel uniform(std::size_t stages, std::size_t obs_count, std::size_t action_count);
  // Every row puts mass 1 on `action`.
  static RelaxedKernel constant(std::size_t stages, std::size_t obs_count,
                                std::size_t action_count, std::size_t action);
  // One observation, Bernoulli(p) over actions {0, 1}.
  static RelaxedKernel bernoulli(double p);

  std::size_t stages() const { return stages_; }
  std::size_t obs_count() const { return obs_count_; }
  std::size_t action_count() const { return action_count_; }
  double prob(std::size_t t, std::size_t y, std::size_t u) const {
    return probs_[(t * obs_count_ + y) * action_count_ + u];
  }
  std::span<const double> row(std::size_t t, std::size_t y) const {
    return {probs_.data() + (t * obs_count_ + y) * action_count_, action_count_};
  }
  const std::vector<double>& data() const { return probs_; }
  bool same_shape(const RelaxedKernel& other) const {
    return stages_ == other.stages_ && obs_count_ == other.obs_count_ &&
           action_count_ == other.action_count_;
  }

  bool is_deterministic(double tol = kExactTol) const;
  bool approx_equal(const RelaxedKernel& other, double tol = kExactTol) const;

  friend bool operator==(const RelaxedKernel&, const RelaxedKernel&) = default;

 private:
  std::size_t stages_;
  std::size_t obs_count_;
  std::size_t action_count_;
  std::vector<double> probs_;
};

// Observation -> action table per stage.
//
// Policies are numbered lexicographically: the table is read as a base-|U|
// number whose most significant digit is the entry for (t = 0, y = 0),
// followed by (0, 1), ..., (T - 1, |Y| - 1). Profiles are ordered
// lexicographically by their tuple of policy numbers.
class DeterministicPolicy {
 public:
  DeterministicPolicy(std::size_t stages, std::size_t obs_count, std::size_t action_count,
                      std::vector<std::size_t> table);

  static DeterministicPolicy from_index(std::uint64_t index, std::size_t stages,
                                        std::size_t obs_count, std::size_t action_count);
  static std::optional<DeterministicPolicy> from_kernel(const RelaxedKernel& kernel,
                                                        double tol = kExactTol);
  // |U|^(|Y| T); throws BudgetError when it overflows 64 bits.
  static std::uint64_t count(std::size_t stages, std::size_t obs_count, std::size_t action_count);

  std::uint64_t index() const;
  std::size_t action(std::size_t t, std::size_t y) const { return table_[t * obs_count_ + y]; }
  const std::vector<std::size_t>& table() const { return table_; }
  std::size_t stages() const { return stages_; }
  std::size_t obs_count() const { return obs_count_; }
  std::size_t action_count() const { return action_count_; }
  RelaxedKernel to_kernel() const;

  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;

 private:
  std::size_t stages_;
  std::size_t obs_count_;
  std::size_t action_count_;
  std::vector<std::size_t> table_;
};

using PolicyProfile = std::vector<RelaxedKernel>;

enum class MixtureClass {
  kGeneral,
  kExchangeable,
  kCommon,
  kCommonSymmetric,
  kPrivate,
  kPrivateSymmetric,
  kDirac,
};

std::string_view to_string(MixtureClass tag);
MixtureClass mixture_class_from_string(std::string_view name);

struct WeightedKernel {
  double weight;
  RelaxedKernel kernel;
};
// A single DM's randomization over policies.
using PolicyLottery = std::vector<WeightedKernel>;

// Common randomness z ~ eta; given z, DM i draws its policy from factors[z][i]
// independently of the others.
struct CommonRandomness {
  std::vector<double> eta;
  std::vector<std::vector<PolicyLottery>> factors;
};

struct MixtureAtom {
  double weight;
  PolicyProfile profile;
};

// Finitely supported probability measure over policy profiles, tagged with
// the narrowest policy class it was constructed in.
class Mixture {
 public:
  Mixture(std::vector<MixtureAtom> atoms, MixtureClass tag = MixtureClass::kGeneral,
          std::optional<CommonRandomness> layout = std::nullopt);

  // Dirac on one profile: DIRAC if every kernel is deterministic, PR_SYM if
  // all kernels coincide, PR otherwise.
  static Mixture single(PolicyProfile profile);
  static Mixture deterministic(const std::vector<DeterministicPolicy>& profile);
  static Mixture iid(const RelaxedKernel& kernel, std::size_t n);
  static Mixture iid(const PolicyLottery& lottery, std::size_t n);
  static Mixture product(const std::vector<PolicyLottery>& per_dm);
  static Mixture common_randomness(CommonRandomness layout);
  // alpha a + (1 - alpha) b; GENERAL unless both operands are EX.
  static Mixture convex(double alpha, const Mixture& a, const Mixture& b);

  std::size_t num_dms() const { return atoms_.front().profile.size(); }
  const std::vector<MixtureAtom>& atoms() const { return atoms_; }
  MixtureClass tag() const { return tag_; }
  const std::optional<CommonRandomness>& layout() const { return layout_; }
  const RelaxedKernel& shape() const { return atoms_.front().profile.front(); }

  bool tag_is_sound(double tol = kSumTol) const;

 private:
  std::vector<MixtureAtom> atoms_;
  MixtureClass tag_;
  std::optional<CommonRandomness> layout_;
};

// Interns kernels up to entrywise closeness so profiles can be compared as id
// tuples. Ids follow first-appearance order.
class KernelPool {
 public:
  explicit KernelPool(double tol = kExactTol) : tol_(tol) {}
  std::size_t intern(const RelaxedKernel& kernel);
  const RelaxedKernel& at(std::size_t id) const { return kernels_.at(id); }
  std::size_t size() const { return kernels_.size(); }

 private:
  double tol_;
  std::vector<RelaxedKernel> kernels_;
};

// Law of a mixture on profiles, keyed by interned id tuples.
struct ProfileLaw {
  KernelPool pool;
  std::map<std::vector<std::size_t>, double> weights;
};

ProfileLaw profile_law(const Mixture& mixture);
void add_to_law(ProfileLaw& law, const Mixture& mixture, double scale = 1.0);
std::vector<MixtureAtom> law_atoms(const ProfileLaw& law);
// Total variation between the laws of two mixtures on profiles.
double profile_tv_distance(const Mixture& a, const Mixture& b);
// Merges atoms whose profiles coincide and drops zero-weight atoms.
std::vector<MixtureAtom> merge_atoms(const std::vector<MixtureAtom>& atoms);

// Averaged kernel sum_atoms w gamma^dm, the one-DM action law given y.
RelaxedKernel mixed_kernel(const Mixture& mixture, std::size_t dm);

// P^sigma with gamma^i distributed as gamma^{sigma(i)} under P. sigma is
// 0-based and must be a bijection on {0, ..., N-1}.
Mixture permute_mixture(const Mixture& mixture, std::span<const std::size_t> sigma);

inline constexpr std::size_t kMaxExactSymmetrizeDms = 8;

// Uniform average of P^sigma over all sigma in S_N (N <= 8). Tagged EX.
Mixture symmetrize(const Mixture& mixture);
// Average of P^sigma over `draws` uniformly sampled sigma. Tagged GENERAL.
Mixture symmetrize_sampled(const Mixture& mixture, std::size_t draws, std::uint64_t seed);

// TV distance between the profile law and its permutation average; the
// largest TV(P, P^sigma) lies within a factor two of it.
double exchangeability_defect(const Mixture& mixture);
bool is_exchangeable(const Mixture& mixture, double tol = kExactTol);

// Marginal on the first m DMs.
Mixture restrict(const Mixture& mixture, std::size_t m);

inline constexpr std::uint64_t kDfEnumerationBudget = 1'000'000;

// m-marginal of the infinitely exchangeable extension that samples DM
// indices i.i.d. uniformly from {1..N}. Enumerates the N^m index tuples per
// distinct profile multiset. Tagged CO_SYM with its common-randomness layout.
Mixture df_extend_marginal(const Mixture& mixture, std::size_t m);

// Bound m(m - 1) / (2N) on TV(restrict(P, m), df_extend_marginal(P, m)).
double df_bound(std::size_t n, std::size_t m);

struct DeFinettiFit {
  std::vector<RelaxedKernel> candidates;
  std::vector<double> weights;
  double residual_l2 = 0.0;
  double residual_tv = 0.0;
  std::size_t iterations = 0;

  // sum_z weight_z kernel_z^{(x) m} over positive weights, tagged CO_SYM.
  Mixture as_mixture(std::size_t m) const;
};

// Kernels whose rows lie on the simplex grid of the given pitch.
std::vector<RelaxedKernel> kernel_grid(std::size_t stages, std::size_t obs_count,
                                       std::size_t action_count, double pitch = 1.0 / 16);

// Fits the induced joint action law of an exchangeable mixture by mixtures of
// i.i.d. products of candidate kernels (least squares over the simplex).
DeFinettiFit definetti_extract(const Mixture& mixture,
                               const std::vector<RelaxedKernel>& candidates,
                               double tol = 1e-14);

inline constexpr std::uint64_t kDecompositionBudget = 1'000'000;

// Splits a kernel into a convex combination of deterministic maps with
// weight prod_{t,y} k(g(t, y) | t, y). Atoms follow policy numbering.
Mixture kernel_to_deterministic_mixture(const RelaxedKernel& kernel);

}  // namespace exteam

#endif  // EXTEAM_POLICY_HPP_
