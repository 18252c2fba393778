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
#include "exteam/policy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "exteam/error.hpp"
#include "exteam/rng.hpp"

namespace exteam {
namespace {

std::vector<std::size_t> intern_profile(KernelPool& pool, const PolicyProfile& profile) {
  std::vector<std::size_t> ids(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) ids[i] = pool.intern(profile[i]);
  return ids;
}

PolicyProfile profile_from_ids(const KernelPool& pool, std::span<const std::size_t> ids) {
  PolicyProfile p;
  p.reserve(ids.size());
  for (std::size_t id : ids) p.push_back(pool.at(id));
  return p;
}

// Number of distinct permutations of a multiset of ids.
double orbit_size(std::vector<std::size_t> ids) {
  std::sort(ids.begin(), ids.end());
  double size = 1.0;
  std::size_t run = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    run = (i > 0 && ids[i] == ids[i - 1]) ? run + 1 : 1;
    size = size * static_cast<double>(i + 1) / static_cast<double>(run);
  }
  return size;
}

bool all_identical(const PolicyProfile& p) {
  for (const auto& k : p) {
    if (!k.approx_equal(p.front())) return false;
  }
  return true;
}

bool lottery_equal(const PolicyLottery& a, const PolicyLottery& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].weight - b[i].weight) > kExactTol || !a[i].kernel.approx_equal(b[i].kernel)) {
      return false;
    }
  }
  return true;
}

// Enumerates the product of per-DM lotteries, scaled by `scale`.
void expand_product(const std::vector<PolicyLottery>& per_dm, double scale,
                    std::vector<MixtureAtom>& out) {
  const std::size_t n = per_dm.size();
  std::vector<std::size_t> pick(n, 0);
  while (true) {
    double w = scale;
    PolicyProfile profile;
    profile.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      w *= per_dm[i][pick[i]].weight;
      profile.push_back(per_dm[i][pick[i]].kernel);
    }
    if (w > 0.0) out.push_back({w, std::move(profile)});
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++pick[i] < per_dm[i].size()) break;
      pick[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

void check_lottery(const PolicyLottery& lottery, const std::string& what) {
  if (lottery.empty()) throw std::invalid_argument(what + ": empty lottery");
  double sum = 0.0;
  for (const auto& wk : lottery) {
    if (!(wk.weight >= 0.0)) throw std::invalid_argument(what + ": negative weight");
    sum += wk.weight;
  }
  if (std::abs(sum - 1.0) > kExactTol) throw std::invalid_argument(what + ": weights must sum to 1");
}

// Per-DM marginal lotteries of a law (interned).
std::vector<std::map<std::size_t, double>> marginals(const ProfileLaw& law, std::size_t n) {
  std::vector<std::map<std::size_t, double>> m(n);
  for (const auto& [ids, w] : law.weights) {
    for (std::size_t i = 0; i < n; ++i) m[i][ids[i]] += w;
  }
  return m;
}

double law_tv(const std::map<std::vector<std::size_t>, double>& a,
              const std::map<std::vector<std::size_t>, double>& b) {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      sum += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      sum += std::abs(ib->second);
      ++ib;
    } else {
      sum += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * sum;
}

// Law of the product of per-DM marginals.
std::map<std::vector<std::size_t>, double> product_law(
    const std::vector<std::map<std::size_t, double>>& marg) {
  std::map<std::vector<std::size_t>, double> out;
  out[{}] = 1.0;
  for (const auto& mi : marg) {
    std::map<std::vector<std::size_t>, double> next;
    for (const auto& [prefix, w] : out) {
      for (const auto& [id, p] : mi) {
        auto key = prefix;
        key.push_back(id);
        next[key] += w * p;
      }
    }
    out = std::move(next);
  }
  return out;
}

MixtureClass restricted_tag(MixtureClass tag) {
  switch (tag) {
    case MixtureClass::kExchangeable:
    case MixtureClass::kPrivateSymmetric:
    case MixtureClass::kDirac:
    case MixtureClass::kCommon:
    case MixtureClass::kCommonSymmetric:
    case MixtureClass::kPrivate:
      return tag;
    case MixtureClass::kGeneral:
      break;
  }
  return MixtureClass::kGeneral;
}

// Joint law of actions given observations for the first m DMs: entry
// (r_1..r_m, c_1..c_m) with r a flattened observation sequence and c a
// flattened action sequence over all stages.
struct InducedLaw {
  std::size_t rows = 0;  // |Y|^T
  std::size_t cols = 0;  // |U|^T
  std::size_t m = 0;
  std::vector<double> values;
};

std::vector<double> flattened_kernel(const RelaxedKernel& k, std::size_t rows, std::size_t cols) {
  std::vector<double> flat(rows * cols);
  const std::size_t Y = k.obs_count(), U = k.action_count(), T = k.stages();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double p = 1.0;
      std::size_t rr = r, cc = c;
      for (std::size_t t = T; t-- > 0;) {
        p *= k.prob(t, rr % Y, cc % U);
        rr /= Y;
        cc /= U;
      }
      flat[r * cols + c] = p;
    }
  }
  return flat;
}

std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t limit,
                          const char* what) {
  std::size_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && v > limit / base) throw BudgetError(what);
    v *= base;
  }
  return v;
}

// Cell index layout: (r_1, ..., r_m, c_1, ..., c_m) in base (rows, cols).
void accumulate_product(const std::vector<const std::vector<double>*>& flats, double weight,
                        InducedLaw& law) {
  const std::size_t m = law.m, R = law.rows, C = law.cols;
  const std::size_t total = law.values.size();
  std::vector<std::size_t> c(m), r(m);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    double p = weight;
    for (std::size_t i = m; i-- > 0;) {
      c[i] = rest % C;
      rest /= C;
    }
    for (std::size_t i = m; i-- > 0;) {
      r[i] = rest % R;
      rest /= R;
    }
    for (std::size_t i = 0; i < m && p != 0.0; ++i) p *= (*flats[i])[r[i] * C + c[i]];
    law.values[idx] += p;
  }
}

InducedLaw induced_law(const std::vector<std::pair<double, std::vector<const std::vector<double>*>>>&
                           terms,
                       std::size_t rows, std::size_t cols, std::size_t m) {
  InducedLaw law;
  law.rows = rows;
  law.cols = cols;
  law.m = m;
  const std::size_t cells = checked_power(rows * cols, m, 1'000'000,
                                          "definetti_extract: induced law exceeds 10^6 cells");
  law.values.assign(cells, 0.0);
  for (const auto& [w, flats] : terms) accumulate_product(flats, w, law);
  return law;
}

// min ||A x - b||^2 subject to x >= 0, sum x = 1 by a primal active-set method.
std::vector<double> simplex_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                          double tol, std::size_t& iterations) {
  const Eigen::Index k = A.cols();
  const Eigen::MatrixXd G = A.transpose() * A;
  const Eigen::VectorXd c = A.transpose() * b;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  Eigen::Index start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double r = (A.col(j) - b).squaredNorm();
    if (r < best) {
      best = r;
      start = j;
    }
  }
  x(start) = 1.0;
  std::vector<bool> free(static_cast<std::size_t>(k), false);
  free[static_cast<std::size_t>(start)] = true;
  const double kkt_tol = std::max(tol, 1e-15 * (1.0 + G.diagonal().maxCoeff()));
  iterations = 0;
  constexpr std::size_t kMaxIterations = 20000;

  auto solve_free = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (free[static_cast<std::size_t>(j)]) idx.push_back(j);
    }
    const Eigen::Index f = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(f + 1, f + 1);
    Eigen::VectorXd rhs(f + 1);
    for (Eigen::Index a = 0; a < f; ++a) {
      for (Eigen::Index bb = 0; bb < f; ++bb) kkt(a, bb) = G(idx[a], idx[bb]);
      kkt(a, f) = 1.0;
      kkt(f, a) = 1.0;
      rhs(a) = c(idx[a]);
    }
    rhs(f) = 1.0;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    z = Eigen::VectorXd::Zero(k);
    for (Eigen::Index a = 0; a < f; ++a) z(idx[a]) = sol(a);
  };

  while (iterations++ < kMaxIterations) {
    // Inner loop: move to the minimizer on the current face.
    while (iterations++ < kMaxIterations) {
      Eigen::VectorXd z;
      solve_free(z);
      bool interior = true;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (free[static_cast<std::size_t>(j)] && z(j) <= 0.0) interior = false;
      }
      if (interior) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (free[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          alpha = std::min(alpha, x(j) / (x(j) - z(j)));
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < k; ++j) {
        if (free[static_cast<std::size_t>(j)] && x(j) <= 1e-15) {
          free[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
      const double s = x.sum();
      if (s > 0.0) x /= s;
    }
    const Eigen::VectorXd g = G * x - c;
    double lambda = 0.0;
    std::size_t nfree = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (free[static_cast<std::size_t>(j)]) {
        lambda += g(j);
        ++nfree;
      }
    }
    lambda /= static_cast<double>(std::max<std::size_t>(nfree, 1));
    Eigen::Index enter = -1;
    double most_negative = -kkt_tol;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (free[static_cast<std::size_t>(j)]) continue;
      const double reduced = g(j) - lambda;
      if (reduced < most_negative) {
        most_negative = reduced;
        enter = j;
      }
    }
    if (enter < 0) break;
    free[static_cast<std::size_t>(enter)] = true;
  }
  std::vector<double> out(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) out[static_cast<std::size_t>(j)] = std::max(0.0, x(j));
  const double s = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= s;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

RelaxedKernel::RelaxedKernel(std::size_t stages, std::size_t obs_count, std::size_t action_count,
                             std::vector<double> probs)
    : stages_(stages), obs_count_(obs_count), action_count_(action_count), probs_(std::move(probs)) {
  if (stages_ == 0 || obs_count_ == 0 || action_count_ == 0) {
    throw ConfigError("kernel: stages, observations and actions must be nonempty");
  }
  if (probs_.size() != stages_ * obs_count_ * action_count_) {
    throw ConfigError("kernel: expected stages x |obs| x |actions| entries");
  }
  for (std::size_t t = 0; t < stages_; ++t) {
    for (std::size_t y = 0; y < obs_count_; ++y) {
      check_probability_vector(row(t, y), kExactTol,
                               "kernel row (t=" + std::to_string(t) + ", y=" + std::to_string(y) + ")");
    }
  }
}

RelaxedKernel RelaxedKernel::from_rows(const std::vector<std::vector<double>>& rows) {
  return from_stages({rows});
}

RelaxedKernel RelaxedKernel::from_stages(
    const std::vector<std::vector<std::vector<double>>>& stages) {
  if (stages.empty() || stages.front().empty()) throw ConfigError("kernel: no rows");
  const std::size_t Y = stages.front().size(), U = stages.front().front().size();
  std::vector<double> probs;
  for (const auto& rows : stages) {
    if (rows.size() != Y) throw ConfigError("kernel: every stage needs |obs| rows");
    for (const auto& r : rows) {
      if (r.size() != U) throw ConfigError("kernel: every row needs |actions| entries");
      probs.insert(probs.end(), r.begin(), r.end());
    }
  }
  return RelaxedKernel(stages.size(), Y, U, std::move(probs));
}

RelaxedKernel RelaxedKernel::uniform(std::size_t stages, std::size_t obs_count,
                                     std::size_t action_count) {
  return RelaxedKernel(stages, obs_count, action_count,
                       std::vector<double>(stages * obs_count * action_count,
                                           1.0 / static_cast<double>(action_count)));
}

RelaxedKernel RelaxedKernel::constant(std::size_t stages, std::size_t obs_count,
                                      std::size_t action_count, std::size_t action) {
  std::vector<double> probs(stages * obs_count * action_count, 0.0);
  for (std::size_t r = 0; r < stages * obs_count; ++r) probs[r * action_count + action] = 1.0;
  return RelaxedKernel(stages, obs_count, action_count, std::move(probs));
}

RelaxedKernel RelaxedKernel::bernoulli(double p) {
  return RelaxedKernel(1, 1, 2, {1.0 - p, p});
}

bool RelaxedKernel::is_deterministic(double tol) const {
  for (double p : probs_) {
    if (p > tol && p < 1.0 - tol) return false;
  }
  return true;
}

bool RelaxedKernel::approx_equal(const RelaxedKernel& other, double tol) const {
  if (!same_shape(other)) return false;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (std::abs(probs_[i] - other.probs_[i]) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

DeterministicPolicy::DeterministicPolicy(std::size_t stages, std::size_t obs_count,
                                         std::size_t action_count, std::vector<std::size_t> table)
    : stages_(stages), obs_count_(obs_count), action_count_(action_count), table_(std::move(table)) {
  if (table_.size() != stages_ * obs_count_) {
    throw ConfigError("policy: expected one action per (stage, observation)");
  }
  for (std::size_t a : table_) {
    if (a >= action_count_) throw ConfigError("policy: action index out of range");
  }
}

std::uint64_t DeterministicPolicy::count(std::size_t stages, std::size_t obs_count,
                                         std::size_t action_count) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < stages * obs_count; ++i) {
    if (v > std::numeric_limits<std::uint64_t>::max() / action_count) {
      throw BudgetError("deterministic policy count overflows");
    }
    v *= action_count;
  }
  return v;
}

DeterministicPolicy DeterministicPolicy::from_index(std::uint64_t index, std::size_t stages,
                                                    std::size_t obs_count,
                                                    std::size_t action_count) {
  std::vector<std::size_t> table(stages * obs_count);
  for (std::size_t i = table.size(); i-- > 0;) {
    table[i] = static_cast<std::size_t>(index % action_count);
    index /= action_count;
  }
  return DeterministicPolicy(stages, obs_count, action_count, std::move(table));
}

std::optional<DeterministicPolicy> DeterministicPolicy::from_kernel(const RelaxedKernel& kernel,
                                                                    double tol) {
  std::vector<std::size_t> table;
  for (std::size_t t = 0; t < kernel.stages(); ++t) {
    for (std::size_t y = 0; y < kernel.obs_count(); ++y) {
      const auto row = kernel.row(t, y);
      auto it = std::find_if(row.begin(), row.end(), [&](double p) { return p >= 1.0 - tol; });
      if (it == row.end()) return std::nullopt;
      table.push_back(static_cast<std::size_t>(it - row.begin()));
    }
  }
  return DeterministicPolicy(kernel.stages(), kernel.obs_count(), kernel.action_count(),
                             std::move(table));
}

std::uint64_t DeterministicPolicy::index() const {
  std::uint64_t idx = 0;
  for (std::size_t a : table_) idx = idx * action_count_ + a;
  return idx;
}

RelaxedKernel DeterministicPolicy::to_kernel() const {
  std::vector<double> probs(table_.size() * action_count_, 0.0);
  for (std::size_t r = 0; r < table_.size(); ++r) probs[r * action_count_ + table_[r]] = 1.0;
  return RelaxedKernel(stages_, obs_count_, action_count_, std::move(probs));
}

// ---------------------------------------------------------------------------

std::string_view to_string(MixtureClass tag) {
  switch (tag) {
    case MixtureClass::kGeneral: return "GENERAL";
    case MixtureClass::kExchangeable: return "EX";
    case MixtureClass::kCommon: return "CO";
    case MixtureClass::kCommonSymmetric: return "CO_SYM";
    case MixtureClass::kPrivate: return "PR";
    case MixtureClass::kPrivateSymmetric: return "PR_SYM";
    case MixtureClass::kDirac: return "DIRAC";
  }
  return "GENERAL";
}

MixtureClass mixture_class_from_string(std::string_view name) {
  for (auto tag : {MixtureClass::kGeneral, MixtureClass::kExchangeable, MixtureClass::kCommon,
                   MixtureClass::kCommonSymmetric, MixtureClass::kPrivate,
                   MixtureClass::kPrivateSymmetric, MixtureClass::kDirac}) {
    if (to_string(tag) == name) return tag;
  }
  throw ConfigError("tag: unknown mixture class '" + std::string(name) + "'");
}

Mixture::Mixture(std::vector<MixtureAtom> atoms, MixtureClass tag,
                 std::optional<CommonRandomness> layout)
    : atoms_(std::move(atoms)), tag_(tag), layout_(std::move(layout)) {
  if (atoms_.empty()) throw ConfigError("mixture: no atoms");
  const std::size_t n = atoms_.front().profile.size();
  if (n == 0) throw ConfigError("mixture: profiles must cover at least one DM");
  const RelaxedKernel& ref = atoms_.front().profile.front();
  double sum = 0.0;
  for (const auto& atom : atoms_) {
    if (!(atom.weight >= 0.0) || !std::isfinite(atom.weight)) {
      throw ConfigError("mixture: atom weights must be finite and nonnegative");
    }
    if (atom.profile.size() != n) throw ConfigError("mixture: profiles differ in length");
    for (const auto& k : atom.profile) {
      if (!k.same_shape(ref)) throw ConfigError("mixture: kernels differ in shape");
    }
    sum += atom.weight;
  }
  if (std::abs(sum - 1.0) > kExactTol * std::max<double>(1.0, std::sqrt(atoms_.size()))) {
    throw ConfigError("mixture: atom weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

Mixture Mixture::single(PolicyProfile profile) {
  bool deterministic = true;
  for (const auto& k : profile) deterministic = deterministic && k.is_deterministic();
  MixtureClass tag = deterministic             ? MixtureClass::kDirac
                     : all_identical(profile) ? MixtureClass::kPrivateSymmetric
                                              : MixtureClass::kPrivate;
  return Mixture({{1.0, std::move(profile)}}, tag);
}

Mixture Mixture::deterministic(const std::vector<DeterministicPolicy>& profile) {
  PolicyProfile p;
  for (const auto& d : profile) p.push_back(d.to_kernel());
  return Mixture({{1.0, std::move(p)}}, MixtureClass::kDirac);
}

Mixture Mixture::iid(const RelaxedKernel& kernel, std::size_t n) {
  if (n == 0) throw std::invalid_argument("iid: n must be positive");
  return Mixture({{1.0, PolicyProfile(n, kernel)}}, kernel.is_deterministic()
                                                         ? MixtureClass::kDirac
                                                         : MixtureClass::kPrivateSymmetric);
}

Mixture Mixture::iid(const PolicyLottery& lottery, std::size_t n) {
  if (n == 0) throw std::invalid_argument("iid: n must be positive");
  check_lottery(lottery, "iid");
  std::vector<MixtureAtom> atoms;
  expand_product(std::vector<PolicyLottery>(n, lottery), 1.0, atoms);
  return Mixture(merge_atoms(atoms), MixtureClass::kPrivateSymmetric);
}

Mixture Mixture::product(const std::vector<PolicyLottery>& per_dm) {
  if (per_dm.empty()) throw std::invalid_argument("product: no DMs");
  for (const auto& l : per_dm) check_lottery(l, "product");
  std::vector<MixtureAtom> atoms;
  expand_product(per_dm, 1.0, atoms);
  bool symmetric = true;
  for (const auto& l : per_dm) symmetric = symmetric && lottery_equal(l, per_dm.front());
  return Mixture(merge_atoms(atoms),
                 symmetric ? MixtureClass::kPrivateSymmetric : MixtureClass::kPrivate);
}

Mixture Mixture::common_randomness(CommonRandomness layout) {
  if (layout.eta.size() != layout.factors.size() || layout.eta.empty()) {
    throw std::invalid_argument("common_randomness: eta and factors must match and be nonempty");
  }
  check_probability_vector(layout.eta, kExactTol, "common_randomness.eta");
  const std::size_t n = layout.factors.front().size();
  bool symmetric = true;
  std::vector<MixtureAtom> atoms;
  for (std::size_t z = 0; z < layout.eta.size(); ++z) {
    const auto& per_dm = layout.factors[z];
    if (per_dm.size() != n) throw std::invalid_argument("common_randomness: DM count differs across z");
    for (const auto& l : per_dm) {
      check_lottery(l, "common_randomness");
      symmetric = symmetric && lottery_equal(l, per_dm.front());
    }
    if (layout.eta[z] > 0.0) expand_product(per_dm, layout.eta[z], atoms);
  }
  return Mixture(merge_atoms(atoms),
                 symmetric ? MixtureClass::kCommonSymmetric : MixtureClass::kCommon,
                 std::move(layout));
}

Mixture Mixture::convex(double alpha, const Mixture& a, const Mixture& b) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("convex: alpha outside [0, 1]");
  if (a.num_dms() != b.num_dms()) throw std::invalid_argument("convex: DM counts differ");
  std::vector<MixtureAtom> atoms;
  for (const auto& at : a.atoms()) atoms.push_back({alpha * at.weight, at.profile});
  for (const auto& at : b.atoms()) atoms.push_back({(1.0 - alpha) * at.weight, at.profile});
  const bool ex = a.tag() == MixtureClass::kExchangeable && b.tag() == MixtureClass::kExchangeable;
  return Mixture(merge_atoms(atoms), ex ? MixtureClass::kExchangeable : MixtureClass::kGeneral);
}

bool Mixture::tag_is_sound(double tol) const {
  const std::size_t n = num_dms();
  switch (tag_) {
    case MixtureClass::kGeneral:
      return true;
    case MixtureClass::kExchangeable:
      return exchangeability_defect(*this) <= tol;
    case MixtureClass::kDirac: {
      if (merge_atoms(atoms_).size() != 1) return false;
      for (const auto& k : atoms_.front().profile) {
        if (!k.is_deterministic()) return false;
      }
      return true;
    }
    case MixtureClass::kPrivate:
    case MixtureClass::kPrivateSymmetric: {
      const ProfileLaw law = profile_law(*this);
      const auto marg = marginals(law, n);
      if (law_tv(law.weights, product_law(marg)) > tol) return false;
      if (tag_ == MixtureClass::kPrivate) return true;
      for (const auto& mi : marg) {
        if (mi.size() != marg.front().size()) return false;
        for (const auto& [id, p] : mi) {
          auto it = marg.front().find(id);
          if (it == marg.front().end() || std::abs(it->second - p) > tol) return false;
        }
      }
      return true;
    }
    case MixtureClass::kCommon:
    case MixtureClass::kCommonSymmetric: {
      if (!layout_) return false;
      const Mixture expanded = Mixture::common_randomness(*layout_);
      if (tag_ == MixtureClass::kCommonSymmetric &&
          expanded.tag() != MixtureClass::kCommonSymmetric) {
        return false;
      }
      return profile_tv_distance(expanded, *this) <= tol;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

std::size_t KernelPool::intern(const RelaxedKernel& kernel) {
  for (std::size_t i = 0; i < kernels_.size(); ++i) {
    if (kernels_[i].approx_equal(kernel, tol_)) return i;
  }
  kernels_.push_back(kernel);
  return kernels_.size() - 1;
}

void add_to_law(ProfileLaw& law, const Mixture& mixture, double scale) {
  for (const auto& atom : mixture.atoms()) {
    law.weights[intern_profile(law.pool, atom.profile)] += scale * atom.weight;
  }
}

ProfileLaw profile_law(const Mixture& mixture) {
  ProfileLaw law;
  add_to_law(law, mixture);
  return law;
}

std::vector<MixtureAtom> law_atoms(const ProfileLaw& law) {
  std::vector<MixtureAtom> atoms;
  for (const auto& [ids, w] : law.weights) {
    if (w > 0.0) atoms.push_back({w, profile_from_ids(law.pool, ids)});
  }
  return atoms;
}

double profile_tv_distance(const Mixture& a, const Mixture& b) {
  if (a.num_dms() != b.num_dms()) throw std::invalid_argument("profile_tv_distance: DM counts differ");
  ProfileLaw la;
  add_to_law(la, a);
  ProfileLaw lb{la.pool, {}};
  add_to_law(lb, b);
  return law_tv(la.weights, lb.weights);
}

std::vector<MixtureAtom> merge_atoms(const std::vector<MixtureAtom>& atoms) {
  ProfileLaw law;
  for (const auto& atom : atoms) {
    if (atom.weight == 0.0) continue;
    law.weights[intern_profile(law.pool, atom.profile)] += atom.weight;
  }
  return law_atoms(law);
}

RelaxedKernel mixed_kernel(const Mixture& mixture, std::size_t dm) {
  if (dm >= mixture.num_dms()) throw std::invalid_argument("mixed_kernel: DM index out of range");
  const RelaxedKernel& shape = mixture.shape();
  std::vector<double> acc(shape.data().size(), 0.0);
  for (const auto& atom : mixture.atoms()) {
    const auto& d = atom.profile[dm].data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += atom.weight * d[i];
  }
  return RelaxedKernel(shape.stages(), shape.obs_count(), shape.action_count(), std::move(acc));
}

// ---------------------------------------------------------------------------

Mixture permute_mixture(const Mixture& mixture, std::span<const std::size_t> sigma) {
  const std::size_t n = mixture.num_dms();
  if (sigma.size() != n) throw std::invalid_argument("permute_mixture: sigma has wrong length");
  std::vector<bool> seen(n, false);
  for (std::size_t s : sigma) {
    if (s >= n || seen[s]) throw std::invalid_argument("permute_mixture: sigma is not a bijection");
    seen[s] = true;
  }
  std::vector<MixtureAtom> atoms;
  atoms.reserve(mixture.atoms().size());
  for (const auto& atom : mixture.atoms()) {
    PolicyProfile p;
    p.reserve(n);
    for (std::size_t i = 0; i < n; ++i) p.push_back(atom.profile[sigma[i]]);
    atoms.push_back({atom.weight, std::move(p)});
  }
  // Permutations preserve exchangeability and all symmetric classes.
  std::optional<CommonRandomness> layout;
  if (mixture.layout()) {
    layout = *mixture.layout();
    for (auto& per_dm : layout->factors) {
      std::vector<PolicyLottery> permuted;
      for (std::size_t i = 0; i < n; ++i) permuted.push_back(per_dm[sigma[i]]);
      per_dm = std::move(permuted);
    }
  }
  return Mixture(std::move(atoms), mixture.tag(), std::move(layout));
}

Mixture symmetrize(const Mixture& mixture) {
  const std::size_t n = mixture.num_dms();
  if (n > kMaxExactSymmetrizeDms) {
    throw BudgetError("symmetrize: exact averaging over S_N is limited to N <= 8; use "
                      "symmetrize_sampled");
  }
  // Averaging P^sigma over S_N spreads each atom uniformly over the distinct
  // rearrangements of its profile.
  ProfileLaw law;
  for (const auto& atom : mixture.atoms()) {
    auto ids = intern_profile(law.pool, atom.profile);
    std::sort(ids.begin(), ids.end());
    const double share = atom.weight / orbit_size(ids);
    do {
      law.weights[ids] += share;
    } while (std::next_permutation(ids.begin(), ids.end()));
  }
  return Mixture(law_atoms(law), MixtureClass::kExchangeable);
}

Mixture symmetrize_sampled(const Mixture& mixture, std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("symmetrize_sampled: draws must be positive");
  const std::size_t n = mixture.num_dms();
  Rng rng = make_stream(seed, 0);
  ProfileLaw law;
  std::vector<std::vector<std::size_t>> base;
  for (const auto& atom : mixture.atoms()) base.push_back(intern_profile(law.pool, atom.profile));
  std::vector<std::size_t> sigma(n), permuted(n);
  for (std::size_t d = 0; d < draws; ++d) {
    std::iota(sigma.begin(), sigma.end(), 0);
    for (std::size_t i = n; i-- > 1;) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
      std::swap(sigma[i], sigma[std::min(j, i)]);
    }
    for (std::size_t a = 0; a < base.size(); ++a) {
      for (std::size_t i = 0; i < n; ++i) permuted[i] = base[a][sigma[i]];
      law.weights[permuted] += mixture.atoms()[a].weight / static_cast<double>(draws);
    }
  }
  return Mixture(law_atoms(law), MixtureClass::kGeneral);
}

double exchangeability_defect(const Mixture& mixture) {
  const ProfileLaw law = profile_law(mixture);
  std::map<std::vector<std::size_t>, std::pair<double, double>> orbits;  // mass, present
  for (const auto& [ids, w] : law.weights) {
    auto key = ids;
    std::sort(key.begin(), key.end());
    auto& o = orbits[key];
    o.first += w;
    o.second += 1.0;
  }
  double sum = 0.0;
  for (const auto& [ids, w] : law.weights) {
    auto key = ids;
    std::sort(key.begin(), key.end());
    const auto& o = orbits[key];
    sum += std::abs(w - o.first / orbit_size(key));
  }
  for (const auto& [key, o] : orbits) {
    const double size = orbit_size(key);
    sum += (size - o.second) * o.first / size;
  }
  return 0.5 * sum;
}

bool is_exchangeable(const Mixture& mixture, double tol) {
  return exchangeability_defect(mixture) <= tol;
}

Mixture restrict(const Mixture& mixture, std::size_t m) {
  const std::size_t n = mixture.num_dms();
  if (m < 1 || m > n) throw std::invalid_argument("restrict: m must lie in [1, N]");
  if (m == n) return mixture;
  std::vector<MixtureAtom> atoms;
  for (const auto& atom : mixture.atoms()) {
    atoms.push_back({atom.weight, PolicyProfile(atom.profile.begin(), atom.profile.begin() + m)});
  }
  std::optional<CommonRandomness> layout;
  if (mixture.layout()) {
    layout = *mixture.layout();
    for (auto& per_dm : layout->factors) per_dm.resize(m);
  }
  return Mixture(merge_atoms(atoms), restricted_tag(mixture.tag()), std::move(layout));
}

double df_bound(std::size_t n, std::size_t m) {
  return static_cast<double>(m) * static_cast<double>(m - 1) / (2.0 * static_cast<double>(n));
}

Mixture df_extend_marginal(const Mixture& mixture, std::size_t m) {
  const std::size_t n = mixture.num_dms();
  if (m < 1) throw std::invalid_argument("df_extend_marginal: m must be positive");
  if (!is_exchangeable(mixture, kSumTol)) {
    throw std::invalid_argument("df_extend_marginal: mixture is not exchangeable");
  }
  const std::size_t tuples = checked_power(n, m, kDfEnumerationBudget,
                                           "df_extend_marginal: N^m exceeds 10^6 index tuples");
  // The extension of an atom depends only on the multiset of its policies.
  ProfileLaw groups;
  for (const auto& atom : mixture.atoms()) {
    auto ids = intern_profile(groups.pool, atom.profile);
    std::sort(ids.begin(), ids.end());
    groups.weights[ids] += atom.weight;
  }
  ProfileLaw law{groups.pool, {}};
  CommonRandomness layout;
  std::vector<std::size_t> index(m), drawn(m);
  for (const auto& [ids, w] : groups.weights) {
    const double share = w / static_cast<double>(tuples);
    std::fill(index.begin(), index.end(), 0);
    for (std::size_t code = 0; code < tuples; ++code) {
      for (std::size_t j = 0; j < m; ++j) drawn[j] = ids[index[j]];
      law.weights[drawn] += share;
      for (std::size_t j = m; j-- > 0;) {
        if (++index[j] < n) break;
        index[j] = 0;
      }
    }
    PolicyLottery empirical;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && ids[j] == ids[i]) ++j;
      empirical.push_back({static_cast<double>(j - i) / static_cast<double>(n), groups.pool.at(ids[i])});
      i = j;
    }
    layout.eta.push_back(w);
    layout.factors.push_back(std::vector<PolicyLottery>(m, empirical));
  }
  const double eta_sum = std::accumulate(layout.eta.begin(), layout.eta.end(), 0.0);
  for (double& e : layout.eta) e /= eta_sum;
  return Mixture(law_atoms(law), MixtureClass::kCommonSymmetric, std::move(layout));
}

// ---------------------------------------------------------------------------

Mixture DeFinettiFit::as_mixture(std::size_t m) const {
  CommonRandomness layout;
  for (std::size_t z = 0; z < candidates.size(); ++z) {
    if (weights[z] <= 0.0) continue;
    layout.eta.push_back(weights[z]);
    layout.factors.push_back(std::vector<PolicyLottery>(m, PolicyLottery{{1.0, candidates[z]}}));
  }
  const double s = std::accumulate(layout.eta.begin(), layout.eta.end(), 0.0);
  for (double& e : layout.eta) e /= s;
  return Mixture::common_randomness(std::move(layout));
}

std::vector<RelaxedKernel> kernel_grid(std::size_t stages, std::size_t obs_count,
                                       std::size_t action_count, double pitch) {
  if (!(pitch > 0.0 && pitch <= 1.0)) throw std::invalid_argument("kernel_grid: pitch in (0, 1]");
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / pitch));
  if (std::abs(static_cast<double>(steps) * pitch - 1.0) > 1e-9) {
    throw std::invalid_argument("kernel_grid: 1 / pitch must be an integer");
  }
  // Simplex grid points for one row.
  std::vector<std::vector<double>> points;
  std::vector<std::size_t> counts(action_count, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == action_count) {
      counts[pos] = left;
      std::vector<double> p(action_count);
      for (std::size_t i = 0; i < action_count; ++i) {
        p[i] = static_cast<double>(counts[i]) / static_cast<double>(steps);
      }
      points.push_back(std::move(p));
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, steps);
  const std::size_t rows = stages * obs_count;
  const std::size_t total = checked_power(points.size(), rows, 100'000,
                                          "kernel_grid: more than 10^5 candidate kernels");
  std::vector<RelaxedKernel> out;
  out.reserve(total);
  std::vector<std::size_t> pick(rows, 0);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    std::vector<double> probs;
    probs.reserve(rows * action_count);
    for (std::size_t r = rows; r-- > 0;) {
      pick[r] = c % points.size();
      c /= points.size();
    }
    for (std::size_t r = 0; r < rows; ++r) {
      probs.insert(probs.end(), points[pick[r]].begin(), points[pick[r]].end());
    }
    out.emplace_back(stages, obs_count, action_count, std::move(probs));
  }
  return out;
}

DeFinettiFit definetti_extract(const Mixture& mixture, const std::vector<RelaxedKernel>& candidates,
                               double tol) {
  if (candidates.empty()) throw std::invalid_argument("definetti_extract: empty candidate set");
  if (!is_exchangeable(mixture, kSumTol)) {
    throw std::invalid_argument("definetti_extract: mixture is not exchangeable");
  }
  const RelaxedKernel& shape = mixture.shape();
  for (const auto& k : candidates) {
    if (!k.same_shape(shape)) throw std::invalid_argument("definetti_extract: candidate shape differs");
  }
  const std::size_t m = mixture.num_dms();
  const std::size_t rows = checked_power(shape.obs_count(), shape.stages(), 1'000'000,
                                         "definetti_extract: observation sequences overflow");
  const std::size_t cols = checked_power(shape.action_count(), shape.stages(), 1'000'000,
                                         "definetti_extract: action sequences overflow");

  // Target law from the mixture.
  KernelPool pool;
  std::vector<std::vector<double>> flats;
  auto flat_of = [&](const RelaxedKernel& k) {
    const std::size_t before = pool.size();
    const std::size_t id = pool.intern(k);
    if (id == before) flats.push_back(flattened_kernel(k, rows, cols));
    return id;
  };
  std::vector<std::pair<double, std::vector<std::size_t>>> target_terms;
  for (const auto& atom : mixture.atoms()) {
    std::vector<std::size_t> ids;
    for (const auto& k : atom.profile) ids.push_back(flat_of(k));
    target_terms.push_back({atom.weight, std::move(ids)});
  }
  std::vector<std::size_t> cand_ids;
  for (const auto& k : candidates) cand_ids.push_back(flat_of(k));

  std::vector<std::pair<double, std::vector<const std::vector<double>*>>> terms;
  for (const auto& [w, ids] : target_terms) {
    std::vector<const std::vector<double>*> ptrs;
    for (std::size_t id : ids) ptrs.push_back(&flats[id]);
    terms.push_back({w, std::move(ptrs)});
  }
  const InducedLaw target = induced_law(terms, rows, cols, m);
  const auto cells = static_cast<Eigen::Index>(target.values.size());
  const auto k = static_cast<Eigen::Index>(candidates.size());
  if (static_cast<double>(cells) * static_cast<double>(k) > 1e8) {
    throw BudgetError("definetti_extract: design matrix exceeds 10^8 entries");
  }
  Eigen::MatrixXd A(cells, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const std::vector<const std::vector<double>*> ptrs(m, &flats[cand_ids[static_cast<std::size_t>(j)]]);
    const InducedLaw col = induced_law({{1.0, ptrs}}, rows, cols, m);
    for (Eigen::Index i = 0; i < cells; ++i) A(i, j) = col.values[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd b(cells);
  for (Eigen::Index i = 0; i < cells; ++i) b(i) = target.values[static_cast<std::size_t>(i)];

  DeFinettiFit fit;
  fit.candidates = candidates;
  fit.weights = simplex_least_squares(A, b, tol, fit.iterations);
  Eigen::VectorXd x(k);
  for (Eigen::Index j = 0; j < k; ++j) x(j) = fit.weights[static_cast<std::size_t>(j)];
  const Eigen::VectorXd r = A * x - b;
  fit.residual_l2 = r.norm();
  // Each conditioning tuple carries one unit of mass; average TV over them.
  const double conditioning = static_cast<double>(checked_power(rows, m, 1'000'000, "overflow"));
  fit.residual_tv = 0.5 * r.cwiseAbs().sum() / conditioning;
  return fit;
}

// ---------------------------------------------------------------------------

Mixture kernel_to_deterministic_mixture(const RelaxedKernel& kernel) {
  const std::size_t rows = kernel.stages() * kernel.obs_count();
  std::vector<std::vector<std::size_t>> support(rows);
  double count = 1.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = kernel.row(r / kernel.obs_count(), r % kernel.obs_count());
    for (std::size_t u = 0; u < row.size(); ++u) {
      if (row[u] > 0.0) support[r].push_back(u);
    }
    count *= static_cast<double>(support[r].size());
  }
  if (count > static_cast<double>(kDecompositionBudget)) {
    throw BudgetError("kernel_to_deterministic_mixture: more than 10^6 deterministic maps");
  }
  std::vector<MixtureAtom> atoms;
  std::vector<std::size_t> pick(rows, 0), table(rows);
  while (true) {
    double w = 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
      table[r] = support[r][pick[r]];
      w *= kernel.row(r / kernel.obs_count(), r % kernel.obs_count())[table[r]];
    }
    atoms.push_back({w, {DeterministicPolicy(kernel.stages(), kernel.obs_count(),
                                             kernel.action_count(), table)
                             .to_kernel()}});
    std::size_t r = rows;
    while (r > 0) {
      --r;
      if (++pick[r] < support[r].size()) break;
      pick[r] = 0;
      if (r == 0) {
        return Mixture(std::move(atoms), MixtureClass::kPrivateSymmetric);
      }
    }
  }
}

}  // namespace exteam
