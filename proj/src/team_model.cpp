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
#include "exteam/team_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "exteam/error.hpp"

namespace exteam {
namespace {

std::string format_value(double v) {
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double broadcast(const std::vector<double>& v, std::size_t i) {
  return v.size() == 1 ? v[0] : v.at(i);
}

double eval_polynomial(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

StageCostFn resolve_static_cost(const StaticCostModel& model, const FiniteSpace& actions,
                                std::size_t omega0_count) {
  if (const auto* q = std::get_if<QuadraticStageCost>(&model)) {
    if (q->target.size() != 1 && q->target.size() != omega0_count) {
      throw ConfigError("cost.params.target: expected 1 or |omega0| entries");
    }
    if (q->mean_weight < 0 || q->private_weight < 0 || q->spread_weight < 0 ||
        q->offset < 0) {
      throw ConfigError("cost.params: weights and offset must be nonnegative");
    }
    return [c = *q, values = actions.values()](std::size_t w, std::size_t a, double m) {
      const double t = broadcast(c.target, w);
      const double u = values[a];
      return c.offset + c.mean_weight * (m - t) * (m - t) +
             c.private_weight * (u - t) * (u - t) + c.spread_weight * (u - m) * (u - m);
    };
  }
  if (const auto* p = std::get_if<PolynomialStageCost>(&model)) {
    if (p->coeffs.size() != omega0_count) {
      throw ConfigError("cost.params.coeffs: expected one block per omega0 label");
    }
    for (const auto& block : p->coeffs) {
      if (block.size() != actions.size()) {
        throw ConfigError("cost.params.coeffs: expected one row per action label");
      }
    }
    return [c = *p](std::size_t w, std::size_t a, double m) {
      return eval_polynomial(c.coeffs[w][a], m);
    };
  }
  return std::get<StageCostFn>(model);
}

DynamicCostFn resolve_dynamic_cost(const DynamicCostModel& model, const FiniteSpace& states,
                                   const FiniteSpace& actions, std::size_t omega0_count) {
  if (const auto* q = std::get_if<QuadraticDynamicCost>(&model)) {
    const double weights[] = {q->mean_action_weight,    q->mean_state_weight,
                              q->private_action_weight, q->private_state_weight,
                              q->state_weight,          q->action_weight,
                              q->offset};
    for (double w : weights) {
      if (w < 0) throw ConfigError("cost.params: weights and offset must be nonnegative");
    }
    return [c = *q, xv = states.values(), uv = actions.values()](
               std::size_t, std::size_t x, std::size_t a, double mu, double mx) {
      const double u = uv[a];
      const double s = xv[x];
      return c.offset + c.mean_action_weight * (mu - c.action_target) * (mu - c.action_target) +
             c.mean_state_weight * (mx - c.state_target) * (mx - c.state_target) +
             c.private_action_weight * (u - mu) * (u - mu) +
             c.private_state_weight * (s - mx) * (s - mx) +
             c.state_weight * (s - c.state_target) * (s - c.state_target) +
             c.action_weight * u * u;
    };
  }
  if (const auto* p = std::get_if<PolynomialDynamicCost>(&model)) {
    if (p->coeffs.size() != omega0_count) {
      throw ConfigError("cost.params.coeffs: expected one block per omega0 label");
    }
    for (const auto& block : p->coeffs) {
      if (block.size() != states.size()) {
        throw ConfigError("cost.params.coeffs: expected one block per state label");
      }
      for (const auto& row : block) {
        if (row.size() != actions.size()) {
          throw ConfigError("cost.params.coeffs: expected one row per action label");
        }
      }
    }
    return [c = *p](std::size_t w, std::size_t x, std::size_t a, double mu, double) {
      return eval_polynomial(c.coeffs[w][x][a], mu);
    };
  }
  return std::get<DynamicCostFn>(model);
}

}  // namespace

void check_probability_vector(std::span<const double> p, double tol, const std::string& what) {
  if (p.empty()) throw ConfigError(what + ": empty probability vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0) {
      throw ConfigError(what + "[" + std::to_string(i) + "]: entry must be finite and >= 0");
    }
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > tol) {
    throw ConfigError(what + ": entries sum to " + format_value(sum) + ", expected 1");
  }
}

// ---------------------------------------------------------------------------

FiniteSpace::FiniteSpace(std::vector<std::string> labels,
                         std::optional<std::vector<double>> values)
    : labels_(std::move(labels)) {
  if (labels_.empty()) throw ConfigError("labels: space must be nonempty");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw ConfigError("labels: duplicate label '" + l + "'");
  }
  if (values) {
    if (values->size() != labels_.size()) {
      throw ConfigError("values: expected one value per label");
    }
    for (double v : *values) {
      if (!std::isfinite(v)) throw ConfigError("values: embedding must be finite");
    }
    values_ = std::move(*values);
  }
}

FiniteSpace FiniteSpace::numeric(std::vector<double> values) {
  std::vector<std::string> labels;
  labels.reserve(values.size());
  for (double v : values) labels.push_back(format_value(v));
  return FiniteSpace(std::move(labels), std::move(values));
}

FiniteSpace FiniteSpace::indexed(std::size_t n, std::string_view prefix) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::string(prefix) + std::to_string(i));
  return FiniteSpace(std::move(labels));
}

std::optional<std::size_t> FiniteSpace::find(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t FiniteSpace::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw ConfigError("unknown label '" + std::string(label) + "'");
}

// ---------------------------------------------------------------------------

StochasticMatrix::StochasticMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw ConfigError("matrix: data size mismatch");
}

StochasticMatrix StochasticMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ConfigError("matrix: no rows");
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw ConfigError("matrix: row " + std::to_string(r) + " has wrong length");
    }
    data.insert(data.end(), rows[r].begin(), rows[r].end());
  }
  return StochasticMatrix(rows.size(), cols, std::move(data));
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  std::vector<double> data(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) data[i * n + i] = 1.0;
  return StochasticMatrix(n, n, std::move(data));
}

std::vector<std::vector<double>> StochasticMatrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r].assign(row(r).begin(), row(r).end());
  return out;
}

void StochasticMatrix::validate(double tol, const std::string& what) const {
  for (std::size_t r = 0; r < rows_; ++r) {
    check_probability_vector(row(r), tol, what + "[" + std::to_string(r) + "]");
  }
}

// ---------------------------------------------------------------------------

StaticTeam::StaticTeam(FiniteSpace omega0, ProbabilityVector prior, FiniteSpace observations,
                       FiniteSpace actions, StochasticMatrix obs_kernel, StaticCostModel cost,
                       std::size_t num_dms)
    : omega0_(std::move(omega0)),
      prior_(std::move(prior)),
      observations_(std::move(observations)),
      actions_(std::move(actions)),
      obs_kernel_(std::move(obs_kernel)),
      cost_model_(std::move(cost)),
      num_dms_(num_dms) {
  validate();
}

void StaticTeam::validate() {
  if (num_dms_ == 0) throw ConfigError("N: must be a positive integer");
  if (prior_.size() != omega0_.size()) {
    throw ConfigError("omega0.prior: expected one entry per omega0 label");
  }
  check_probability_vector(prior_, kExactTol, "omega0.prior");
  if (!actions_.has_values()) throw ConfigError("actions.values: numeric embedding required");
  if (obs_kernel_.rows() != omega0_.size() || obs_kernel_.cols() != observations_.size()) {
    throw ConfigError("obs_kernel: expected |omega0| rows of |obs| entries");
  }
  obs_kernel_.validate(kExactTol, "obs_kernel");
  cost_ = resolve_static_cost(cost_model_, actions_, omega0_.size());
  const auto means = attainable_means(actions_.values(), num_dms_);
  for (std::size_t w = 0; w < omega0_.size(); ++w) {
    for (std::size_t a = 0; a < actions_.size(); ++a) {
      for (double m : means) {
        const double c = cost_(w, a, m);
        if (!std::isfinite(c) || c < 0.0) {
          throw ConfigError("cost: stage cost must be finite and nonnegative (omega0=" +
                            omega0_.label(w) + ", action=" + actions_.label(a) +
                            ", mean=" + format_value(m) + ")");
        }
      }
    }
  }
}

double StaticTeam::mean_action(std::span<const std::size_t> actions) const {
  double sum = 0.0;
  for (std::size_t a : actions) sum += actions_.value(a);
  return sum / static_cast<double>(actions.size());
}

StaticTeam StaticTeam::with_num_dms(std::size_t n) const {
  return StaticTeam(omega0_, prior_, observations_, actions_, obs_kernel_, cost_model_, n);
}

double mean_field_cost(const StaticTeam& team, std::size_t omega0,
                       std::span<const std::size_t> actions) {
  if (actions.size() != team.num_dms()) {
    throw std::invalid_argument("mean_field_cost: expected " +
                                std::to_string(team.num_dms()) + " actions, got " +
                                std::to_string(actions.size()));
  }
  if (omega0 >= team.omega0().size()) {
    throw std::invalid_argument("mean_field_cost: omega0 index out of range");
  }
  for (std::size_t a : actions) {
    if (a >= team.actions().size()) {
      throw std::invalid_argument("mean_field_cost: action index out of range");
    }
  }
  const double m = team.mean_action(actions);
  double sum = 0.0;
  for (std::size_t a : actions) sum += team.stage_cost(omega0, a, m);
  return sum / static_cast<double>(actions.size());
}

std::vector<double> attainable_means(std::span<const double> values, std::size_t n) {
  constexpr std::size_t kMaxMultisets = 200000;
  const std::size_t k = values.size();
  // C(n + k - 1, k - 1) with early exit.
  double count = 1.0;
  for (std::size_t i = 1; i < k; ++i) {
    count = count * static_cast<double>(n + i) / static_cast<double>(i);
  }
  std::vector<double> out;
  if (count > static_cast<double>(kMaxMultisets)) {
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    constexpr int kGrid = 4096;
    for (int i = 0; i <= kGrid; ++i) out.push_back(lo + (hi - lo) * i / kGrid);
    return out;
  }
  std::vector<std::size_t> counts(k, 0);
  std::function<void(std::size_t, std::size_t, double)> rec = [&](std::size_t pos,
                                                                   std::size_t left,
                                                                   double sum) {
    if (pos + 1 == k) {
      out.push_back((sum + left * values[pos]) / static_cast<double>(n));
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) rec(pos + 1, left - c, sum + c * values[pos]);
  };
  rec(0, n, 0.0);
  return out;
}

bool validate_exchangeable_cost(const JointCostFn& cost, std::size_t omega0_count,
                                std::size_t action_count, std::size_t n_check) {
  if (n_check > 6) {
    throw BudgetError("validate_exchangeable_cost: n_check > 6 exceeds the enumeration budget");
  }
  if (n_check == 0 || action_count == 0) return true;
  std::size_t tuples = 1;
  for (std::size_t i = 0; i < n_check; ++i) tuples *= action_count;
  std::vector<std::size_t> actions(n_check), permuted(n_check), sigma(n_check);
  for (std::size_t w = 0; w < omega0_count; ++w) {
    for (std::size_t code = 0; code < tuples; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n_check; ++i) {
        actions[i] = c % action_count;
        c /= action_count;
      }
      const double base = cost(w, actions);
      std::iota(sigma.begin(), sigma.end(), 0);
      while (std::next_permutation(sigma.begin(), sigma.end())) {
        for (std::size_t i = 0; i < n_check; ++i) permuted[i] = actions[sigma[i]];
        if (std::abs(cost(w, permuted) - base) > kExactTol) return false;
      }
    }
  }
  return true;
}

bool validate_exchangeable_cost(const StaticTeam& team, std::size_t n_check) {
  if (n_check > 6) {
    throw BudgetError("validate_exchangeable_cost: n_check > 6 exceeds the enumeration budget");
  }
  if (n_check == 0) return true;
  const StaticTeam sized = team.with_num_dms(n_check);
  return validate_exchangeable_cost(
      [&](std::size_t w, std::span<const std::size_t> a) { return mean_field_cost(sized, w, a); },
      team.omega0().size(), team.actions().size(), n_check);
}

StaticTeam half_split_team(std::size_t n) {
  QuadraticStageCost cost;
  cost.target = {0.5};
  cost.mean_weight = 1.0;
  return StaticTeam(FiniteSpace({"w"}), {1.0}, FiniteSpace({"none"}),
                    FiniteSpace({"0", "1"}, std::vector<double>{0.0, 1.0}),
                    StochasticMatrix::from_rows({{1.0}}), cost, n);
}

StaticTeam constant_cost_team(std::size_t n, double c0, std::size_t action_count) {
  QuadraticStageCost cost;
  cost.mean_weight = 0.0;
  cost.offset = c0;
  std::vector<double> values(action_count);
  std::iota(values.begin(), values.end(), 0.0);
  return StaticTeam(FiniteSpace({"w"}), {1.0}, FiniteSpace({"none"}),
                    FiniteSpace::numeric(std::move(values)), StochasticMatrix::from_rows({{1.0}}),
                    cost, n);
}

// ---------------------------------------------------------------------------

DynamicTeam::DynamicTeam(DynamicTeamData data) : data_(std::move(data)) { validate(); }

void DynamicTeam::validate() {
  const auto& d = data_;
  if (d.horizon == 0) throw ConfigError("horizon: must be a positive integer");
  if (d.num_dms == 0) throw ConfigError("N: must be a positive integer");
  if (d.prior.size() != d.omega0.size()) {
    throw ConfigError("omega0.prior: expected one entry per omega0 label");
  }
  check_probability_vector(d.prior, kExactTol, "omega0.prior");
  if (!d.states.has_values()) throw ConfigError("states.values: numeric embedding required");
  if (!d.actions.has_values()) throw ConfigError("actions.values: numeric embedding required");
  if (d.init_kernel.rows() != d.omega0.size() || d.init_kernel.cols() != d.states.size()) {
    throw ConfigError("init_kernel: expected |omega0| rows of |states| entries");
  }
  d.init_kernel.validate(kExactTol, "init_kernel");
  if (d.dyn_noise_probs.size() != d.dyn_noise.size()) {
    throw ConfigError("dyn_noise.probs: expected one entry per noise label");
  }
  check_probability_vector(d.dyn_noise_probs, kExactTol, "dyn_noise.probs");

  const std::size_t T = d.horizon, X = d.states.size(), U = d.actions.size(),
                    W = d.dyn_noise.size(), Y = d.observations.size();
  if (const auto* table = std::get_if<TransitionTable>(&d.dynamics)) {
    auto check_table = [&](const std::vector<std::size_t>& next, const std::string& what) {
      if (next.size() != T * X * U * W) {
        throw ConfigError(what + ": expected horizon x |states| x |actions| x |dyn_noise| entries");
      }
      for (std::size_t v : next) {
        if (v >= X) throw ConfigError(what + ": next state out of range");
      }
    };
    check_table(table->next, "dynamics_table.next");
    if (table->threshold) check_table(table->next_above, "dynamics_table.coupling.next_above");
  }

  obs_kernels_.clear();
  if (const auto* table = std::get_if<ObservationTable>(&d.observation)) {
    const std::size_t V = d.obs_noise.size();
    if (d.obs_noise_probs.size() != V) {
      throw ConfigError("obs_noise.probs: expected one entry per noise label");
    }
    check_probability_vector(d.obs_noise_probs, kExactTol, "obs_noise.probs");
    if (table->map.size() != T * X * V) {
      throw ConfigError("obs_table: expected horizon x |states| x |obs_noise| entries");
    }
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> nu(X * Y, 0.0);
      for (std::size_t x = 0; x < X; ++x) {
        for (std::size_t v = 0; v < V; ++v) {
          const std::size_t y = table->map[(t * X + x) * V + v];
          if (y >= Y) throw ConfigError("obs_table: observation index out of range");
          nu[x * Y + y] += d.obs_noise_probs[v];
        }
      }
      obs_kernels_.emplace_back(X, Y, std::move(nu));
    }
  } else if (const auto* kernels = std::get_if<ObservationKernels>(&d.observation)) {
    if (kernels->kernels.size() != T) throw ConfigError("obs_kernel: expected one kernel per stage");
    for (std::size_t t = 0; t < T; ++t) {
      const auto& k = kernels->kernels[t];
      if (k.rows() != X || k.cols() != Y) {
        throw ConfigError("obs_kernel[" + std::to_string(t) + "]: expected |states| x |obs|");
      }
      k.validate(kExactTol, "obs_kernel[" + std::to_string(t) + "]");
      obs_kernels_.push_back(k);
    }
  } else {
    const auto& g = std::get<GaussianGridObservation>(d.observation);
    if (!d.observations.has_values()) {
      throw ConfigError("obs.values: gaussian_grid observations need a numeric grid");
    }
    if (!(g.sigma > 0.0)) throw ConfigError("obs_model.sigma: must be positive");
    if (g.kappa.size() != T) throw ConfigError("obs_model.kappa: expected one row per stage");
    const AdditiveGaussianNoise noise{g.sigma};
    for (std::size_t t = 0; t < T; ++t) {
      if (g.kappa[t].size() != X) {
        throw ConfigError("obs_model.kappa[" + std::to_string(t) + "]: expected |states| entries");
      }
      std::vector<double> nu(X * Y);
      for (std::size_t x = 0; x < X; ++x) {
        double z = 0.0;
        for (std::size_t y = 0; y < Y; ++y) {
          nu[x * Y + y] = noise.density(d.observations.value(y) - g.kappa[t][x]);
          z += nu[x * Y + y];
        }
        if (!(z > 0.0)) throw ConfigError("obs_model: grid carries no probability mass");
        for (std::size_t y = 0; y < Y; ++y) nu[x * Y + y] /= z;
      }
      obs_kernels_.emplace_back(X, Y, std::move(nu));
    }
  }

  cost_ = resolve_dynamic_cost(d.cost, d.states, d.actions, d.omega0.size());
  const auto mean_u = attainable_means(d.actions.values(), d.num_dms);
  const auto mean_x = attainable_means(d.states.values(), d.num_dms);
  for (std::size_t w = 0; w < d.omega0.size(); ++w) {
    for (std::size_t x = 0; x < X; ++x) {
      for (std::size_t a = 0; a < U; ++a) {
        for (double mu : mean_u) {
          for (double mx : {mean_x.front(), mean_x.back(), mean_x[mean_x.size() / 2]}) {
            const double c = cost_(w, x, a, mu, mx);
            if (!std::isfinite(c) || c < 0.0) {
              throw ConfigError("cost: stage cost must be finite and nonnegative");
            }
          }
        }
      }
    }
  }
}

std::size_t DynamicTeam::next_state(std::size_t t, std::size_t state, std::size_t action,
                                    double mean_state, double mean_action,
                                    std::size_t noise) const {
  if (const auto* table = std::get_if<TransitionTable>(&data_.dynamics)) {
    const std::size_t X = data_.states.size(), U = data_.actions.size(),
                      W = data_.dyn_noise.size();
    const std::size_t idx = ((t * X + state) * U + action) * W + noise;
    if (table->threshold) {
      const double signal =
          table->signal == TransitionTable::Signal::kMeanAction ? mean_action : mean_state;
      if (signal > *table->threshold) return table->next_above[idx];
    }
    return table->next[idx];
  }
  const std::size_t next =
      std::get<TransitionFn>(data_.dynamics)(t, state, action, mean_state, mean_action, noise);
  if (next >= data_.states.size()) throw ConfigError("dynamics: next state out of range");
  return next;
}

void DynamicTeam::transition_law(std::size_t t, std::size_t state, std::size_t action,
                                 double mean_state, double mean_action,
                                 std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t w = 0; w < data_.dyn_noise_probs.size(); ++w) {
    const double p = data_.dyn_noise_probs[w];
    if (p == 0.0) continue;
    out[next_state(t, state, action, mean_state, mean_action, w)] += p;
  }
}

DynamicTeam DynamicTeam::with_num_dms(std::size_t n) const {
  DynamicTeamData d = data_;
  d.num_dms = n;
  return DynamicTeam(std::move(d));
}

DynamicTeam DynamicTeam::from_static(const StaticTeam& team) {
  DynamicTeamData d;
  d.horizon = 1;
  d.omega0 = team.omega0();
  d.prior = team.prior();
  std::vector<double> state_values(team.observations().size());
  std::iota(state_values.begin(), state_values.end(), 0.0);
  d.states = FiniteSpace(team.observations().labels(), state_values);
  d.observations = team.observations();
  d.actions = team.actions();
  d.init_kernel = team.obs_kernel();
  d.dyn_noise = FiniteSpace({"none"});
  d.dyn_noise_probs = {1.0};
  const std::size_t X = d.states.size(), U = d.actions.size();
  TransitionTable table;
  table.next.resize(X * U);
  for (std::size_t x = 0; x < X; ++x) {
    for (std::size_t u = 0; u < U; ++u) table.next[x * U + u] = x;
  }
  d.dynamics = table;
  d.observation = ObservationKernels{{StochasticMatrix::identity(X)}};
  d.cost = DynamicCostFn([team](std::size_t w, std::size_t, std::size_t a, double mu, double) {
    return team.stage_cost(w, a, mu);
  });
  d.num_dms = team.num_dms();
  return DynamicTeam(std::move(d));
}

// ---------------------------------------------------------------------------

ProbabilityVector countable_reference_measure(std::size_t k) {
  if (k == 0) throw std::invalid_argument("countable_reference_measure: empty space");
  ProbabilityVector q(k);
  for (std::size_t p = 1; p < k; ++p) q[p - 1] = std::ldexp(1.0, -static_cast<int>(p));
  q[k - 1] = std::ldexp(1.0, -static_cast<int>(k - 1));
  return q;
}

double AdditiveGaussianNoise::density(double v) const {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  const double z = v / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

double reduction_weight(const AdditiveGaussianNoise& noise, double y, double kappa) {
  const double base = noise.density(y);
  if (!(base > 0.0)) {
    throw ConfigError("reduction_weight: reference density vanishes at y=" + format_value(y) +
                      "; drop this grid point");
  }
  return noise.density(y - kappa) / base;
}

ReductionData::ReductionData(std::vector<ProbabilityVector> reference, ReductionWeightFn weight)
    : reference_(std::move(reference)), weight_(std::move(weight)) {
  if (reference_.empty()) throw ConfigError("reduction: no reference measures");
  for (std::size_t t = 0; t < reference_.size(); ++t) {
    check_probability_vector(reference_[t], kSumTol, "reduction.tau[" + std::to_string(t) + "]");
  }
  if (!weight_) throw ConfigError("reduction: missing weight function");
}

ReductionData ReductionData::from_reference(const DynamicTeam& team,
                                            std::vector<ProbabilityVector> reference) {
  if (reference.size() == 1 && team.horizon() > 1) {
    reference.resize(team.horizon(), reference.front());
  }
  if (reference.size() != team.horizon()) {
    throw ConfigError("reduction.tau: expected one reference measure per stage");
  }
  for (std::size_t t = 0; t < team.horizon(); ++t) {
    const auto& nu = team.obs_kernel(t);
    if (reference[t].size() != nu.cols()) {
      throw ConfigError("reduction.tau[" + std::to_string(t) + "]: expected |obs| entries");
    }
    for (std::size_t x = 0; x < nu.rows(); ++x) {
      for (std::size_t y = 0; y < nu.cols(); ++y) {
        if (nu(x, y) > 0.0 && !(reference[t][y] > 0.0)) {
          throw ConfigError("reduction.tau[" + std::to_string(t) +
                            "]: observation law is not absolutely continuous w.r.t. tau");
        }
      }
    }
  }
  const std::vector<StochasticMatrix> kernels = [&] {
    std::vector<StochasticMatrix> k;
    for (std::size_t t = 0; t < team.horizon(); ++t) k.push_back(team.obs_kernel(t));
    return k;
  }();
  auto tau = reference;
  return ReductionData(std::move(reference),
                       [kernels, tau](std::size_t t, std::size_t y, std::size_t, std::size_t x) {
                         const double base = tau[t][y];
                         return base > 0.0 ? kernels[t](x, y) / base : 0.0;
                       });
}

ReductionData ReductionData::countable(const DynamicTeam& team) {
  return from_reference(team, {countable_reference_measure(team.observations().size())});
}

ReductionData ReductionData::gaussian(const DynamicTeam& team) {
  const auto* g = std::get_if<GaussianGridObservation>(&team.data().observation);
  if (!g) throw ConfigError("reduction: gaussian reduction needs a gaussian_grid observation model");
  const AdditiveGaussianNoise noise{g->sigma};
  const auto& grid = team.observations().values();
  const std::size_t Y = grid.size(), X = team.states().size();
  ProbabilityVector tau(Y);
  double z_ref = 0.0;
  for (std::size_t y = 0; y < Y; ++y) {
    tau[y] = noise.density(grid[y]);
    if (!(tau[y] > 0.0)) {
      throw ConfigError("reduction: reference density vanishes on grid point " +
                        team.observations().label(y));
    }
    z_ref += tau[y];
  }
  for (double& v : tau) v /= z_ref;
  // Per-(t, x) normalizer ratio turns the raw density ratio into a density
  // with respect to the renormalized grid reference.
  std::vector<std::vector<double>> scale(team.horizon(), std::vector<double>(X));
  for (std::size_t t = 0; t < team.horizon(); ++t) {
    for (std::size_t x = 0; x < X; ++x) {
      double z = 0.0;
      for (std::size_t y = 0; y < Y; ++y) z += noise.density(grid[y] - g->kappa[t][x]);
      scale[t][x] = z_ref / z;
    }
  }
  return ReductionData(
      std::vector<ProbabilityVector>(team.horizon(), tau),
      [noise, grid, kappa = g->kappa, scale](std::size_t t, std::size_t y, std::size_t,
                                             std::size_t x) {
        return reduction_weight(noise, grid[y], kappa[t][x]) * scale[t][x];
      });
}

void ReductionData::validate(const DynamicTeam& team, double tol) const {
  if (reference_.size() != team.horizon()) {
    throw ConfigError("reduction: expected one reference measure per stage");
  }
  for (std::size_t t = 0; t < team.horizon(); ++t) {
    const auto& nu = team.obs_kernel(t);
    if (reference_[t].size() != nu.cols()) {
      throw ConfigError("reduction.tau[" + std::to_string(t) + "]: expected |obs| entries");
    }
    for (std::size_t w = 0; w < team.omega0().size(); ++w) {
      for (std::size_t x = 0; x < nu.rows(); ++x) {
        double total = 0.0;
        for (std::size_t y = 0; y < nu.cols(); ++y) {
          const double psi = weight(t, y, w, x);
          if (!std::isfinite(psi) || psi < 0.0) {
            throw ConfigError("reduction: weight must be finite and nonnegative");
          }
          const double mass = psi * reference_[t][y];
          if (std::abs(mass - nu(x, y)) > tol) {
            throw ConfigError("reduction: psi * tau does not reproduce the observation law at t=" +
                              std::to_string(t) + ", state=" + team.states().label(x));
          }
          total += mass;
        }
        if (std::abs(total - 1.0) > tol) {
          throw ConfigError("reduction: psi is not a density w.r.t. tau at t=" +
                            std::to_string(t));
        }
      }
    }
  }
}

}  // namespace exteam
