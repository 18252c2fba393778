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
#include "exteam/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "exteam/error.hpp"

namespace exteam::io {
namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at_index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError((path.empty() ? "document" : path) + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key) + ": missing field");
  return *it;
}

const Json* optional_field(const Json& j, const std::string& key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path + ": expected a finite number");
  return v;
}

double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  const Json* f = optional_field(j, key);
  return f ? number(*f, join(path, key)) : fallback;
}

std::size_t count(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    if (j.is_number_float()) {
      const double v = j.get<double>();
      if (v >= 0 && std::floor(v) == v && v < 1e15) return static_cast<std::size_t>(v);
    }
    throw ConfigError(path + ": expected a nonnegative integer");
  }
  const auto v = j.get<long long>();
  if (v < 0) throw ConfigError(path + ": expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  return j;
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  std::vector<double> out;
  const Json& a = array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(number(a[i], at_index(path, i)));
  return out;
}

std::vector<std::vector<double>> rows(const Json& j, const std::string& path) {
  std::vector<std::vector<double>> out;
  const Json& a = array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(numbers(a[i], at_index(path, i)));
  return out;
}

StochasticMatrix matrix(const Json& j, std::size_t r, std::size_t c, const std::string& path) {
  const auto m = rows(j, path);
  if (m.size() != r) {
    throw ConfigError(path + ": expected " + std::to_string(r) + " rows, got " + std::to_string(m.size()));
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != c) {
      throw ConfigError(at_index(path, i) + ": expected " + std::to_string(c) + " entries");
    }
  }
  return StochasticMatrix::from_rows(m);
}

FiniteSpace space(const Json& j, const std::string& path) {
  const Json* labels = optional_field(j, "labels");
  const Json* values = optional_field(j, "values");
  if (!labels && !values) throw ConfigError(path + ": needs labels and/or values");
  std::optional<std::vector<double>> v;
  if (values) v = numbers(*values, join(path, "values"));
  if (!labels) return FiniteSpace::numeric(*v);
  std::vector<std::string> names;
  const Json& a = array(*labels, join(path, "labels"));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_string()) {
      names.push_back(a[i].get<std::string>());
    } else if (a[i].is_number()) {
      names.push_back(a[i].dump());
    } else {
      throw ConfigError(at_index(join(path, "labels"), i) + ": expected a string label");
    }
  }
  if (v && v->size() != names.size()) {
    throw ConfigError(join(path, "values") + ": expected one value per label");
  }
  return FiniteSpace(std::move(names), std::move(v));
}

std::size_t resolve(const Json& j, const FiniteSpace& s, const std::string& path) {
  if (j.is_string()) {
    const auto idx = s.find(j.get<std::string>());
    if (!idx) throw ConfigError(path + ": unknown label '" + j.get<std::string>() + "'");
    return *idx;
  }
  const std::size_t i = count(j, path);
  if (i >= s.size()) throw ConfigError(path + ": index " + std::to_string(i) + " out of range");
  return i;
}

// Nested array with the given extents, flattened row-major; leaves resolve
// against `leaf`.
void flatten(const Json& j, std::span<const std::size_t> dims, const FiniteSpace& leaf,
             const std::string& path, std::vector<std::size_t>& out) {
  if (dims.empty()) {
    out.push_back(resolve(j, leaf, path));
    return;
  }
  const Json& a = array(j, path);
  if (a.size() != dims[0]) {
    throw ConfigError(path + ": expected " + std::to_string(dims[0]) + " entries, got " +
                      std::to_string(a.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) flatten(a[i], dims.subspan(1), leaf, at_index(path, i), out);
}

std::vector<std::size_t> flat_table(const Json& j, std::vector<std::size_t> dims,
                                    const FiniteSpace& leaf, const std::string& path) {
  std::vector<std::size_t> out;
  flatten(j, dims, leaf, path, out);
  return out;
}

std::pair<FiniteSpace, ProbabilityVector> noise_block(const Json& doc, const std::string& key) {
  const Json* f = optional_field(doc, key);
  if (!f) return {FiniteSpace({"none"}), {1.0}};
  FiniteSpace s = space(*f, key);
  ProbabilityVector p = numbers(field(*f, "probs", key), join(key, "probs"));
  return {std::move(s), std::move(p)};
}

std::string cost_kind(const Json& cost) {
  const Json& k = field(cost, "kind", "cost");
  if (!k.is_string()) throw ConfigError("cost.kind: expected a string");
  return k.get<std::string>();
}

StaticCostModel static_cost(const Json& doc) {
  const Json& cost = field(doc, "cost", "");
  const std::string kind = cost_kind(cost);
  const Json empty = Json::object();
  const Json* params = optional_field(cost, "params");
  const Json& p = params ? *params : empty;
  if (kind == "mean_field_quadratic") {
    QuadraticStageCost q;
    if (const Json* t = optional_field(p, "target")) {
      q.target = t->is_array() ? numbers(*t, "cost.params.target")
                               : std::vector<double>{number(*t, "cost.params.target")};
    }
    q.mean_weight = number_or(p, "mean_weight", q.mean_weight, "cost.params");
    q.private_weight = number_or(p, "private_weight", q.private_weight, "cost.params");
    q.spread_weight = number_or(p, "spread_weight", q.spread_weight, "cost.params");
    q.offset = number_or(p, "offset", q.offset, "cost.params");
    return q;
  }
  if (kind == "table") {
    PolynomialStageCost poly;
    const Json& c = array(field(p, "coeffs", "cost.params"), "cost.params.coeffs");
    for (std::size_t w = 0; w < c.size(); ++w) poly.coeffs.push_back(rows(c[w], at_index("cost.params.coeffs", w)));
    return poly;
  }
  throw ConfigError("cost.kind: unknown kind '" + kind + "' (expected mean_field_quadratic or table)");
}

DynamicCostModel dynamic_cost(const Json& doc) {
  const Json& cost = field(doc, "cost", "");
  const std::string kind = cost_kind(cost);
  const Json empty = Json::object();
  const Json* params = optional_field(cost, "params");
  const Json& p = params ? *params : empty;
  if (kind == "mean_field_quadratic") {
    QuadraticDynamicCost q;
    q.action_target = number_or(p, "action_target", q.action_target, "cost.params");
    q.state_target = number_or(p, "state_target", q.state_target, "cost.params");
    q.mean_action_weight = number_or(p, "mean_action_weight", q.mean_action_weight, "cost.params");
    q.mean_state_weight = number_or(p, "mean_state_weight", q.mean_state_weight, "cost.params");
    q.private_action_weight =
        number_or(p, "private_action_weight", q.private_action_weight, "cost.params");
    q.private_state_weight =
        number_or(p, "private_state_weight", q.private_state_weight, "cost.params");
    q.state_weight = number_or(p, "state_weight", q.state_weight, "cost.params");
    q.action_weight = number_or(p, "action_weight", q.action_weight, "cost.params");
    q.offset = number_or(p, "offset", q.offset, "cost.params");
    return q;
  }
  if (kind == "table") {
    PolynomialDynamicCost poly;
    const Json& c = array(field(p, "coeffs", "cost.params"), "cost.params.coeffs");
    for (std::size_t w = 0; w < c.size(); ++w) {
      const std::string pw = at_index("cost.params.coeffs", w);
      std::vector<std::vector<std::vector<double>>> block;
      const Json& b = array(c[w], pw);
      for (std::size_t x = 0; x < b.size(); ++x) block.push_back(rows(b[x], at_index(pw, x)));
      poly.coeffs.push_back(std::move(block));
    }
    return poly;
  }
  throw ConfigError("cost.kind: unknown kind '" + kind + "' (expected mean_field_quadratic or table)");
}

std::size_t team_size(const Json& doc) {
  const std::size_t n = count(field(doc, "N", ""), "N");
  if (n == 0) throw ConfigError("N: must be a positive integer");
  return n;
}

PolicyLottery lottery_from_json(const Json& j, const PolicyShape& shape, const std::string& path) {
  PolicyLottery out;
  const Json& a = array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string p = at_index(path, i);
    out.push_back({number(field(a[i], "weight", p), join(p, "weight")),
                   kernel_from_json(field(a[i], "kernel", p), shape, join(p, "kernel"))});
  }
  return out;
}

Json lottery_to_json(const PolicyLottery& lottery, const PolicyShape& shape) {
  Json out = Json::array();
  for (const auto& wk : lottery) out.push_back({{"weight", wk.weight}, {"kernel", kernel_to_json(wk.kernel, shape)}});
  return out;
}

PolicyProfile profile_from_json(const Json& j, const PolicyShape& shape, const std::string& path) {
  PolicyProfile out;
  const Json& a = array(j, path);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(kernel_from_json(a[i], shape, at_index(path, i)));
  return out;
}

CommonRandomness layout_from_json(const Json& j, const PolicyShape& shape, const std::string& path) {
  CommonRandomness layout;
  layout.eta = numbers(field(j, "eta", path), join(path, "eta"));
  const Json& f = array(field(j, "factors", path), join(path, "factors"));
  for (std::size_t z = 0; z < f.size(); ++z) {
    const std::string pz = at_index(join(path, "factors"), z);
    std::vector<PolicyLottery> per_dm;
    const Json& a = array(f[z], pz);
    for (std::size_t i = 0; i < a.size(); ++i) per_dm.push_back(lottery_from_json(a[i], shape, at_index(pz, i)));
    layout.factors.push_back(std::move(per_dm));
  }
  return layout;
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1;
  column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return line;
}

}  // namespace

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    std::size_t column = 0;
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const std::size_t line = line_of(text, byte, column);
    std::string what = e.what();
    const auto pos = what.find("parse error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what);
  }
}

Json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

std::size_t Problem::num_dms() const {
  return dynamic_team ? dynamic_team->num_dms() : static_team->num_dms();
}

StaticTeam static_team_from_json(const Json& doc) {
  const Json& om = field(doc, "omega0", "");
  FiniteSpace omega0 = space(om, "omega0");
  ProbabilityVector prior = numbers(field(om, "prior", "omega0"), "omega0.prior");
  FiniteSpace obs = space(field(doc, "obs", ""), "obs");
  FiniteSpace actions = space(field(doc, "actions", ""), "actions");
  StochasticMatrix kernel = matrix(field(doc, "obs_kernel", ""), omega0.size(), obs.size(), "obs_kernel");
  return StaticTeam(std::move(omega0), std::move(prior), std::move(obs), std::move(actions),
                    std::move(kernel), static_cost(doc), team_size(doc));
}

DynamicTeam dynamic_team_from_json(const Json& doc) {
  DynamicTeamData d;
  d.horizon = count(field(doc, "horizon", ""), "horizon");
  if (d.horizon == 0) throw ConfigError("horizon: must be a positive integer");
  d.num_dms = team_size(doc);
  const Json& om = field(doc, "omega0", "");
  d.omega0 = space(om, "omega0");
  d.prior = numbers(field(om, "prior", "omega0"), "omega0.prior");
  d.states = space(field(doc, "states", ""), "states");
  d.observations = space(field(doc, "obs", ""), "obs");
  d.actions = space(field(doc, "actions", ""), "actions");
  d.init_kernel = matrix(field(doc, "init_kernel", ""), d.omega0.size(), d.states.size(), "init_kernel");
  std::tie(d.dyn_noise, d.dyn_noise_probs) = noise_block(doc, "dyn_noise");
  std::tie(d.obs_noise, d.obs_noise_probs) = noise_block(doc, "obs_noise");
  const std::size_t T = d.horizon, X = d.states.size(), U = d.actions.size(),
                    W = d.dyn_noise.size();

  const Json& dyn = field(doc, "dynamics_table", "");
  TransitionTable table;
  table.next = flat_table(field(dyn, "next", "dynamics_table"), {T, X, U, W}, d.states,
                          "dynamics_table.next");
  if (const Json* c = optional_field(dyn, "coupling")) {
    const std::string p = "dynamics_table.coupling";
    const Json& sig = field(*c, "signal", p);
    const std::string s = sig.is_string() ? sig.get<std::string>() : "";
    if (s == "mean_action") {
      table.signal = TransitionTable::Signal::kMeanAction;
    } else if (s == "mean_state") {
      table.signal = TransitionTable::Signal::kMeanState;
    } else {
      throw ConfigError(p + ".signal: expected mean_action or mean_state");
    }
    table.threshold = number(field(*c, "threshold", p), p + ".threshold");
    table.next_above = flat_table(field(*c, "next_above", p), {T, X, U, W}, d.states, p + ".next_above");
  }
  d.dynamics = std::move(table);

  const Json* obs_table = optional_field(doc, "obs_table");
  const Json* obs_kernel = optional_field(doc, "obs_kernel");
  const Json* obs_model = optional_field(doc, "obs_model");
  if ((obs_table != nullptr) + (obs_kernel != nullptr) + (obs_model != nullptr) != 1) {
    throw ConfigError("obs_table: give exactly one of obs_table, obs_kernel or obs_model");
  }
  if (obs_table) {
    d.observation = ObservationTable{
        flat_table(*obs_table, {T, X, d.obs_noise.size()}, d.observations, "obs_table")};
  } else if (obs_kernel) {
    ObservationKernels k;
    const Json& a = array(*obs_kernel, "obs_kernel");
    const bool single = !a.empty() && a[0].is_array() && !a[0].empty() && a[0][0].is_number();
    // A single matrix applies to every stage.
    if (!single && a.size() != T) throw ConfigError("obs_kernel: expected one matrix per stage");
    for (std::size_t t = 0; t < T; ++t) {
      const Json& m = single ? a : a[t];
      k.kernels.push_back(
          matrix(m, X, d.observations.size(), single ? "obs_kernel" : at_index("obs_kernel", t)));
    }
    d.observation = std::move(k);
  } else {
    const Json& kind = field(*obs_model, "kind", "obs_model");
    if (!kind.is_string() || kind.get<std::string>() != "gaussian_grid") {
      throw ConfigError("obs_model.kind: expected gaussian_grid");
    }
    GaussianGridObservation g;
    g.sigma = number(field(*obs_model, "sigma", "obs_model"), "obs_model.sigma");
    g.kappa = rows(field(*obs_model, "kappa", "obs_model"), "obs_model.kappa");
    d.observation = std::move(g);
  }
  d.cost = dynamic_cost(doc);
  return DynamicTeam(std::move(d));
}

std::optional<ReductionData> reduction_from_json(const Json& doc, const DynamicTeam& team) {
  const Json* r = optional_field(doc, "reduction");
  if (!r) return std::nullopt;
  const Json& kind = field(*r, "kind", "reduction");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "countable") return ReductionData::countable(team);
  if (k == "gaussian") return ReductionData::gaussian(team);
  if (k == "reference") {
    const Json& tau = array(field(*r, "tau", "reduction"), "reduction.tau");
    std::vector<ProbabilityVector> refs;
    if (!tau.empty() && tau[0].is_number()) {
      refs.push_back(numbers(tau, "reduction.tau"));
    } else {
      refs = rows(tau, "reduction.tau");
    }
    auto data = ReductionData::from_reference(team, std::move(refs));
    data.validate(team);
    return data;
  }
  throw ConfigError("reduction.kind: expected countable, gaussian or reference");
}

Problem problem_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("document: expected an object");
  Problem p;
  if (doc.contains("horizon")) {
    p.dynamic_team = dynamic_team_from_json(doc);
    p.reduction = reduction_from_json(doc, *p.dynamic_team);
  } else {
    p.static_team = static_team_from_json(doc);
  }
  return p;
}

PolicyShape policy_shape(const Problem& problem) {
  PolicyShape s;
  if (problem.dynamic_team) {
    s.stages = problem.dynamic_team->horizon();
    s.observations = problem.dynamic_team->observations();
    s.actions = problem.dynamic_team->actions();
    s.num_dms = problem.dynamic_team->num_dms();
  } else {
    s.observations = problem.static_team->observations();
    s.actions = problem.static_team->actions();
    s.num_dms = problem.static_team->num_dms();
  }
  return s;
}

RelaxedKernel kernel_from_json(const Json& j, const PolicyShape& shape, const std::string& path) {
  const std::size_t Y = shape.observations.size(), U = shape.actions.size();
  auto stage_rows = [&](const Json& m, const std::string& p) {
    const StochasticMatrix sm = matrix(m, Y, U, p);
    return sm.to_rows();
  };
  auto stage_map = [&](const Json& m, const std::string& p) {
    if (!m.is_object()) throw ConfigError(p + ": expected an observation -> action map");
    std::vector<std::vector<double>> r(Y, std::vector<double>(U, 0.0));
    std::vector<bool> seen(Y, false);
    for (const auto& [key, value] : m.items()) {
      const auto y = shape.observations.find(key);
      if (!y) throw ConfigError(p + ": unknown observation label '" + key + "'");
      r[*y][resolve(value, shape.actions, join(p, key))] = 1.0;
      seen[*y] = true;
    }
    for (std::size_t y = 0; y < Y; ++y) {
      if (!seen[y]) throw ConfigError(p + ": no action for observation '" + shape.observations.label(y) + "'");
    }
    return r;
  };
  std::vector<std::vector<std::vector<double>>> stages;
  if (j.is_array()) {
    if (shape.stages != 1) throw ConfigError(path + ": multi-stage kernels need {\"stages\": [...]}");
    stages.push_back(stage_rows(j, path));
  } else if (const Json* s = optional_field(j, "stages")) {
    const Json& a = array(*s, join(path, "stages"));
    for (std::size_t t = 0; t < a.size(); ++t) stages.push_back(stage_rows(a[t], at_index(join(path, "stages"), t)));
  } else if (const Json* m = optional_field(j, "map")) {
    if (shape.stages != 1) throw ConfigError(path + ": multi-stage policies need {\"maps\": [...]}");
    stages.push_back(stage_map(*m, join(path, "map")));
  } else if (const Json* ms = optional_field(j, "maps")) {
    const Json& a = array(*ms, join(path, "maps"));
    for (std::size_t t = 0; t < a.size(); ++t) stages.push_back(stage_map(a[t], at_index(join(path, "maps"), t)));
  } else {
    throw ConfigError(path + ": expected kernel rows, {stages}, {map} or {maps}");
  }
  if (stages.size() != shape.stages) {
    throw ConfigError(path + ": expected " + std::to_string(shape.stages) + " stages");
  }
  try {
    return RelaxedKernel::from_stages(stages);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Json kernel_to_json(const RelaxedKernel& kernel, const PolicyShape& shape) {
  if (auto det = DeterministicPolicy::from_kernel(kernel)) {
    Json maps = Json::array();
    for (std::size_t t = 0; t < kernel.stages(); ++t) {
      Json m = Json::object();
      for (std::size_t y = 0; y < kernel.obs_count(); ++y) {
        m[shape.observations.label(y)] = shape.actions.label(det->action(t, y));
      }
      maps.push_back(std::move(m));
    }
    if (kernel.stages() == 1) return Json{{"map", maps[0]}};
    return Json{{"maps", maps}};
  }
  Json stages = Json::array();
  for (std::size_t t = 0; t < kernel.stages(); ++t) {
    Json rs = Json::array();
    for (std::size_t y = 0; y < kernel.obs_count(); ++y) {
      const auto r = kernel.row(t, y);
      rs.push_back(std::vector<double>(r.begin(), r.end()));
    }
    stages.push_back(std::move(rs));
  }
  if (kernel.stages() == 1) return stages[0];
  return Json{{"stages", stages}};
}

Mixture mixture_from_json(const Json& doc, const PolicyShape& shape) {
  if (!doc.is_object()) throw ConfigError("policy: expected an object");
  std::size_t n = shape.num_dms;
  if (const Json* f = optional_field(doc, "num_dms")) n = count(*f, "policy.num_dms");
  std::optional<MixtureClass> tag;
  if (const Json* t = optional_field(doc, "tag")) {
    if (!t->is_string()) throw ConfigError("policy.tag: expected a string");
    tag = mixture_class_from_string(t->get<std::string>());
  }
  auto finish = [&](Mixture m) {
    if (const Json* s = optional_field(doc, "symmetrize"); s && s->is_boolean() && s->get<bool>()) {
      m = symmetrize(m);
    }
    return m;
  };
  try {
    if (const Json* k = optional_field(doc, "iid")) {
      return finish(Mixture::iid(kernel_from_json(*k, shape, "policy.iid"), n));
    }
    if (const Json* l = optional_field(doc, "iid_lottery")) {
      return finish(Mixture::iid(lottery_from_json(*l, shape, "policy.iid_lottery"), n));
    }
    if (const Json* d = optional_field(doc, "deterministic")) {
      PolicyProfile p = profile_from_json(*d, shape, "policy.deterministic");
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].is_deterministic()) {
          throw ConfigError(at_index("policy.deterministic", i) + ": kernel is not deterministic");
        }
      }
      return finish(Mixture::single(std::move(p)));
    }
    if (const Json* cr = optional_field(doc, "common_randomness")) {
      Mixture m = Mixture::common_randomness(layout_from_json(*cr, shape, "policy.common_randomness"));
      if (tag && *tag != m.tag() && !(*tag == MixtureClass::kCommon && m.tag() == MixtureClass::kCommonSymmetric)) {
        Mixture retagged(m.atoms(), *tag, m.layout());
        if (!retagged.tag_is_sound()) throw ConfigError("policy.tag: not sound for this mixture");
        return finish(retagged);
      }
      return finish(m);
    }
    const Json& atoms = array(field(doc, "atoms", "policy"), "policy.atoms");
    std::vector<MixtureAtom> out;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      const std::string p = at_index("policy.atoms", a);
      out.push_back({number(field(atoms[a], "weight", p), join(p, "weight")),
                     profile_from_json(field(atoms[a], "profile", p), shape, join(p, "profile"))});
    }
    std::optional<CommonRandomness> layout;
    if (const Json* l = optional_field(doc, "layout")) layout = layout_from_json(*l, shape, "policy.layout");
    Mixture m(std::move(out), tag.value_or(MixtureClass::kGeneral), std::move(layout));
    if (!m.tag_is_sound()) {
      throw ConfigError("policy.tag: " + std::string(to_string(m.tag())) + " is not sound for these atoms");
    }
    return finish(m);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  }
}

std::vector<Mixture> mixtures_from_json(const Json& doc, const PolicyShape& shape) {
  std::vector<Mixture> out;
  if (doc.is_array()) {
    for (const auto& m : doc) out.push_back(mixture_from_json(m, shape));
  } else {
    out.push_back(mixture_from_json(doc, shape));
  }
  return out;
}

Json mixture_to_json(const Mixture& mixture, const PolicyShape& shape) {
  Json out;
  out["tag"] = std::string(to_string(mixture.tag()));
  out["num_dms"] = mixture.num_dms();
  Json atoms = Json::array();
  for (const auto& a : mixture.atoms()) {
    Json profile = Json::array();
    for (const auto& k : a.profile) profile.push_back(kernel_to_json(k, shape));
    atoms.push_back({{"weight", a.weight}, {"profile", std::move(profile)}});
  }
  out["atoms"] = std::move(atoms);
  if (const auto& layout = mixture.layout()) {
    Json factors = Json::array();
    for (const auto& per_dm : layout->factors) {
      Json dms = Json::array();
      for (const auto& l : per_dm) dms.push_back(lottery_to_json(l, shape));
      factors.push_back(std::move(dms));
    }
    out["layout"] = {{"eta", layout->eta}, {"factors", std::move(factors)}};
  }
  return out;
}

Json opt_result_to_json(const OptResult& r, const PolicyShape& shape) {
  Json out;
  out["method"] = std::string(to_string(r.method));
  out["best_value"] = r.best_value;
  out["evaluations"] = r.evaluations;
  out["restarts"] = r.restarts;
  out["converged"] = r.converged;
  if (!r.elite_means.empty()) out["elite_means"] = r.elite_means;
  out["best_policy"] = mixture_to_json(r.best_policy, shape);
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const Json& doc) { return fnv1a_hex(doc.dump()); }

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot read output for hashing");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  Json out;
  out["command"] = m.command;
  out["config_hash"] = m.config_hash;
  out["seed"] = m.seed;
  out["version"] = m.version;
  out["started"] = m.started;
  out["finished"] = m.finished;
  out["settings"] = m.settings;
  Json files = Json::array();
  for (const auto& p : m.outputs) {
    files.push_back({{"path", p.filename().string()}, {"fnv1a64", file_hash(p)}});
  }
  files.push_back({{"path", "manifest.json"}, {"fnv1a64", nullptr}});
  out["outputs"] = std::move(files);
  const auto path = dir / "manifest.json";
  write_text_file(path, out.dump(2) + "\n");
  return path;
}

}  // namespace exteam::io
