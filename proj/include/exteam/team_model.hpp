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
#ifndef EXTEAM_TEAM_MODEL_HPP_
#define EXTEAM_TEAM_MODEL_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace exteam {

// Tolerance for checks that should hold in exact arithmetic.
inline constexpr double kExactTol = 1e-12;
// Tolerance for accumulated floating-point sums.
inline constexpr double kSumTol = 1e-9;

using ProbabilityVector = std::vector<double>;

// Throws ConfigError naming `what` unless p is a probability vector.
void check_probability_vector(std::span<const double> p, double tol,
                              const std::string& what);

// Ordered set of distinct labels, optionally embedded in the reals.
class FiniteSpace {
 public:
  FiniteSpace() = default;
  explicit FiniteSpace(std::vector<std::string> labels,
                       std::optional<std::vector<double>> values = std::nullopt);

  // Labels are the shortest round-trip text of each value.
  static FiniteSpace numeric(std::vector<double> values);
  // Labels "prefix0", "prefix1", ... without an embedding.
  static FiniteSpace indexed(std::size_t n, std::string_view prefix);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> find(std::string_view label) const;
  std::size_t index_of(std::string_view label) const;

  bool has_values() const { return !values_.empty(); }
  double value(std::size_t i) const { return values_.at(i); }
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FiniteSpace&, const FiniteSpace&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<double> values_;
};

// Dense row-stochastic matrix.
class StochasticMatrix {
 public:
  StochasticMatrix() = default;
  StochasticMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static StochasticMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static StochasticMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<std::vector<double>> to_rows() const;

  // Throws ConfigError if any row is not a probability vector.
  void validate(double tol, const std::string& what) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Static teams
// ---------------------------------------------------------------------------

// c(w, u, m) = offset + mean_weight (m - t_w)^2 + private_weight (u - t_w)^2
//              + spread_weight (u - m)^2, with m the mean action.
// `target` holds one entry per omega0 or a single broadcast entry.
struct QuadraticStageCost {
  std::vector<double> target{0.5};
  double mean_weight = 1.0;
  double private_weight = 0.0;
  double spread_weight = 0.0;
  double offset = 0.0;
};

// c(w, u, m) = sum_k coeffs[w][u][k] m^k  (dense, label order).
struct PolynomialStageCost {
  std::vector<std::vector<std::vector<double>>> coeffs;
};

using StageCostFn = std::function<double(std::size_t omega0, std::size_t action,
                                         double mean_action)>;
using StaticCostModel =
    std::variant<QuadraticStageCost, PolynomialStageCost, StageCostFn>;

// Static mean-field team: N DMs with conditionally i.i.d. observations drawn
// from one shared channel, and expected cost
//   E[(1/N) sum_i c(w, u^i, (1/N) sum_p u^p)].
class StaticTeam {
 public:
  StaticTeam(FiniteSpace omega0, ProbabilityVector prior, FiniteSpace observations,
             FiniteSpace actions, StochasticMatrix obs_kernel, StaticCostModel cost,
             std::size_t num_dms);

  const FiniteSpace& omega0() const { return omega0_; }
  const ProbabilityVector& prior() const { return prior_; }
  const FiniteSpace& observations() const { return observations_; }
  const FiniteSpace& actions() const { return actions_; }
  const StochasticMatrix& obs_kernel() const { return obs_kernel_; }
  const StaticCostModel& cost_model() const { return cost_model_; }
  std::size_t num_dms() const { return num_dms_; }

  double stage_cost(std::size_t omega0, std::size_t action, double mean_action) const {
    return cost_(omega0, action, mean_action);
  }
  double mean_action(std::span<const std::size_t> actions) const;

  StaticTeam with_num_dms(std::size_t n) const;

 private:
  void validate();

  FiniteSpace omega0_;
  ProbabilityVector prior_;
  FiniteSpace observations_;
  FiniteSpace actions_;
  StochasticMatrix obs_kernel_;
  StaticCostModel cost_model_;
  StageCostFn cost_;
  std::size_t num_dms_;
};

// (1/N) sum_i c(w, u^i, mean). Throws std::invalid_argument on a length
// mismatch or an out-of-range action index.
double mean_field_cost(const StaticTeam& team, std::size_t omega0,
                       std::span<const std::size_t> actions);

// Averages (1/N) sum_i v_{u^i} reachable by N DMs; falls back to a uniform
// grid on [min v, max v] when the multiset count is large.
std::vector<double> attainable_means(std::span<const double> values, std::size_t n);

// Joint cost c(w, u^1..u^n) over action indices.
using JointCostFn =
    std::function<double(std::size_t omega0, std::span<const std::size_t> actions)>;

// True iff the joint cost is invariant under every permutation of n_check
// DMs for every omega0 and action tuple. n_check must be at most 6.
bool validate_exchangeable_cost(const JointCostFn& cost, std::size_t omega0_count,
                                std::size_t action_count, std::size_t n_check);
bool validate_exchangeable_cost(const StaticTeam& team, std::size_t n_check);

// Reference instance: no measurement, actions {0, 1}, cost (mean - 1/2)^2.
StaticTeam half_split_team(std::size_t n);
// Every action costs c0.
StaticTeam constant_cost_team(std::size_t n, double c0, std::size_t action_count = 2);

// ---------------------------------------------------------------------------
// Dynamic teams
// ---------------------------------------------------------------------------

// c(w, x, u, mu, mx) = offset + mean_action_weight (mu - action_target)^2
//   + mean_state_weight (mx - state_target)^2 + private_action_weight (u - mu)^2
//   + private_state_weight (x - mx)^2 + state_weight (x - state_target)^2
//   + action_weight u^2.
struct QuadraticDynamicCost {
  double action_target = 0.5;
  double state_target = 0.5;
  double mean_action_weight = 1.0;
  double mean_state_weight = 0.0;
  double private_action_weight = 0.0;
  double private_state_weight = 0.0;
  double state_weight = 0.0;
  double action_weight = 0.0;
  double offset = 0.0;
};

// c(w, x, u, mu, mx) = sum_k coeffs[w][x][u][k] mu^k.
struct PolynomialDynamicCost {
  std::vector<std::vector<std::vector<std::vector<double>>>> coeffs;
};

using DynamicCostFn =
    std::function<double(std::size_t omega0, std::size_t state, std::size_t action,
                         double mean_action, double mean_state)>;
using DynamicCostModel =
    std::variant<QuadraticDynamicCost, PolynomialDynamicCost, DynamicCostFn>;

// next[t][x][u][w] as a flat array. When `threshold` is set, the coupling
// signal (mean action or mean state) strictly above it selects next_above.
struct TransitionTable {
  enum class Signal { kMeanAction, kMeanState };
  std::vector<std::size_t> next;
  std::optional<double> threshold;
  Signal signal = Signal::kMeanAction;
  std::vector<std::size_t> next_above;
};

using TransitionFn = std::function<std::size_t(
    std::size_t t, std::size_t state, std::size_t action, double mean_state,
    double mean_action, std::size_t noise)>;
using TransitionModel = std::variant<TransitionTable, TransitionFn>;

// y_t = map[t][x][v] with v drawn from the observation noise.
struct ObservationTable {
  std::vector<std::size_t> map;
};
// Direct per-stage observation kernels nu_t(y | x).
struct ObservationKernels {
  std::vector<StochasticMatrix> kernels;
};
// y_t = kappa[t][x] + v_t with v_t ~ N(0, sigma^2), restricted to the grid of
// observation values and renormalized.
struct GaussianGridObservation {
  double sigma = 1.0;
  std::vector<std::vector<double>> kappa;
};
using ObservationModel =
    std::variant<ObservationTable, ObservationKernels, GaussianGridObservation>;

struct DynamicTeamData {
  std::size_t horizon = 1;
  FiniteSpace omega0;
  ProbabilityVector prior;
  FiniteSpace states;
  FiniteSpace observations;
  FiniteSpace actions;
  StochasticMatrix init_kernel;  // omega0 -> initial state, i.i.d. across DMs
  FiniteSpace dyn_noise;
  ProbabilityVector dyn_noise_probs;
  FiniteSpace obs_noise;
  ProbabilityVector obs_noise_probs;
  TransitionModel dynamics;
  ObservationModel observation;
  DynamicCostModel cost;
  std::size_t num_dms = 1;
};

// Horizon-T mean-field team. One transition map and one observation map are
// shared by all DMs, so the information structure is symmetric by construction.
// Observations depend on the current private state and fresh noise.
class DynamicTeam {
 public:
  explicit DynamicTeam(DynamicTeamData data);

  const DynamicTeamData& data() const { return data_; }
  std::size_t horizon() const { return data_.horizon; }
  std::size_t num_dms() const { return data_.num_dms; }
  const FiniteSpace& omega0() const { return data_.omega0; }
  const ProbabilityVector& prior() const { return data_.prior; }
  const FiniteSpace& states() const { return data_.states; }
  const FiniteSpace& observations() const { return data_.observations; }
  const FiniteSpace& actions() const { return data_.actions; }
  const StochasticMatrix& init_kernel() const { return data_.init_kernel; }
  const ProbabilityVector& dyn_noise_probs() const { return data_.dyn_noise_probs; }

  // Induced observation law nu_t(y | x).
  const StochasticMatrix& obs_kernel(std::size_t t) const { return obs_kernels_.at(t); }

  std::size_t next_state(std::size_t t, std::size_t state, std::size_t action,
                         double mean_state, double mean_action, std::size_t noise) const;
  // Law of x_{t+1} given (x, u, mean state, mean action); `out` has |X| slots.
  void transition_law(std::size_t t, std::size_t state, std::size_t action,
                      double mean_state, double mean_action, std::span<double> out) const;

  double stage_cost(std::size_t omega0, std::size_t state, std::size_t action,
                    double mean_action, double mean_state) const {
    return cost_(omega0, state, action, mean_action, mean_state);
  }

  DynamicTeam with_num_dms(std::size_t n) const;

  // Horizon-1 wrapper: state = observation drawn from the static channel,
  // observed perfectly; the stage cost ignores the state.
  static DynamicTeam from_static(const StaticTeam& team);

 private:
  void validate();

  DynamicTeamData data_;
  std::vector<StochasticMatrix> obs_kernels_;
  DynamicCostFn cost_;
};

// ---------------------------------------------------------------------------
// Static reduction data
// ---------------------------------------------------------------------------

// Q(m_p) = 2^-p for p < k and 2^-(k-1) for the last label, so the vector is
// strictly positive and sums to one.
ProbabilityVector countable_reference_measure(std::size_t k);

struct AdditiveGaussianNoise {
  double sigma = 1.0;
  double density(double v) const;
};

// theta(y - kappa) / theta(y). Throws ConfigError when theta(y) underflows.
double reduction_weight(const AdditiveGaussianNoise& noise, double y, double kappa);

using ReductionWeightFn = std::function<double(std::size_t t, std::size_t y,
                                               std::size_t omega0, std::size_t state)>;

// Policy-independent reference measures tau_t over observations and the
// likelihood ratios psi_t with nu_t(y | x) = psi_t(y, w, x) tau_t(y).
class ReductionData {
 public:
  ReductionData(std::vector<ProbabilityVector> reference, ReductionWeightFn weight);

  // psi = nu / tau; tau must be positive wherever nu is.
  static ReductionData from_reference(const DynamicTeam& team,
                                      std::vector<ProbabilityVector> reference);
  static ReductionData countable(const DynamicTeam& team);
  // tau proportional to theta on the grid; requires a GaussianGridObservation.
  static ReductionData gaussian(const DynamicTeam& team);

  const ProbabilityVector& reference(std::size_t t) const { return reference_.at(t); }
  double weight(std::size_t t, std::size_t y, std::size_t omega0, std::size_t state) const {
    return weight_(t, y, omega0, state);
  }
  std::size_t horizon() const { return reference_.size(); }

  // Checks sum_y psi tau = 1 and psi tau = nu for every conditioning argument.
  void validate(const DynamicTeam& team, double tol = kSumTol) const;

 private:
  std::vector<ProbabilityVector> reference_;
  ReductionWeightFn weight_;
};

}  // namespace exteam

#endif  // EXTEAM_TEAM_MODEL_HPP_
