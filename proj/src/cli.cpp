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
#include "exteam/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "exteam/error.hpp"
#include "exteam/evaluation.hpp"
#include "exteam/io.hpp"
#include "exteam/optimization.hpp"
#include "exteam/parallel.hpp"
#include "exteam/scaling_lab.hpp"
#include "exteam/version.hpp"

namespace exteam {
namespace {

namespace fs = std::filesystem;
using io::Json;

struct CommonFlags {
  int threads = 0;
  std::size_t chunk_size = kDefaultChunkSize;
  std::uint64_t seed = 0;
  std::string out = "out";
  bool timing = false;
};

struct EvaluateFlags {
  std::string config;
  std::string policy;
  bool exact = false;
  bool mc = false;
  bool reduced = false;
  double samples = 100000;
};

struct OptimizeFlags {
  std::string config;
  std::string policy_class = "dirac";
  std::string method = "auto";
  double pitch = 0.0;
  std::size_t restarts = 8;
  double tol = 1e-7;
  double fd_step = 1e-5;
  std::size_t population = 48;
  std::size_t elites = 8;
  std::size_t iterations = 40;
  double smoothing = 0.7;
  double mc_samples = 20000;
};

struct ScalingFlags {
  std::string variant;
  std::string config;
  std::vector<std::size_t> n_list;
  std::size_t tail_window = 3;
  std::string recipe;
  std::string policy;
  std::size_t seeds = 1;
  std::size_t instances = 1000;
  std::size_t max_n = 6;
  std::size_t max_atoms = 3;
  std::size_t obs = 2;
  std::size_t actions = 2;
  std::vector<std::size_t> m_list;
  std::string method = "auto";
};

struct Run {
  fs::path dir;
  io::RunManifest manifest;

  void emit(const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    io::write_text_file(p, text);
    manifest.outputs.push_back(p);
  }
  void finish() {
    manifest.finished = io::utc_timestamp();
    io::write_manifest(dir, manifest);
  }
};

Run start_run(const CommonFlags& common, const std::string& command, const Json& config) {
  Run run;
  run.dir = common.out;
  fs::create_directories(run.dir);
  run.manifest.command = command;
  run.manifest.config_hash = io::config_hash(config);
  run.manifest.seed = common.seed;
  run.manifest.version = kVersion;
  run.manifest.started = io::utc_timestamp();
  run.manifest.settings["threads"] = num_threads();
  run.manifest.settings["chunk_size"] = common.chunk_size;
  run.manifest.settings["timing"] = common.timing;
  return run;
}

void configure_threads(const CommonFlags& common) {
  int threads = common.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("EXTEAM_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw ConfigError(std::string("EXTEAM_THREADS: expected a positive integer, got '") + env + "'");
      }
      if (threads <= 0) throw ConfigError("EXTEAM_THREADS: expected a positive integer");
    }
  }
  if (threads > 0) set_num_threads(threads);
}

std::uint64_t as_samples(double v, const char* flag) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e15) {
    throw ConfigError(std::string(flag) + ": expected a positive integer");
  }
  return static_cast<std::uint64_t>(v);
}

std::string csv_file(const CostEstimate& e) {
  return cost_estimate_csv_header() + "\n" + to_csv_row(e) + "\n";
}

int cmd_evaluate(const CommonFlags& common, const EvaluateFlags& f, const std::string& command) {
  const Json config = io::parse_json_file(f.config);
  const io::Problem problem = io::problem_from_json(config);
  const io::PolicyShape shape = io::policy_shape(problem);
  const Mixture mixture = io::mixture_from_json(io::parse_json_file(f.policy), shape);
  if (f.exact && f.mc) throw ConfigError("--exact and --mc are mutually exclusive");
  const EvalMode mode = f.mc ? EvalMode::kMonteCarlo : EvalMode::kExact;
  const McSettings mc{as_samples(f.samples, "--samples"), common.seed, common.chunk_size};

  Run run = start_run(common, command, config);
  run.manifest.settings["mode"] = f.mc ? "mc" : "exact";
  run.manifest.settings["reduced"] = f.reduced;
  run.manifest.settings["samples"] = mc.samples;
  run.manifest.settings["policy_hash"] = io::file_hash(f.policy);

  CostEstimate est;
  if (problem.is_dynamic()) {
    if (f.reduced) {
      if (!problem.reduction) throw ConfigError("reduction: --reduced needs a reduction block in the config");
      est = expected_cost_reduced(*problem.dynamic_team, *problem.reduction, mixture, mode, mc);
    } else {
      est = expected_cost_dynamic(*problem.dynamic_team, mixture, mode, mc);
    }
  } else {
    if (f.reduced) throw ConfigError("--reduced applies to dynamic problems only");
    est = mode == EvalMode::kExact ? expected_cost_static_exact(*problem.static_team, mixture)
                                   : expected_cost_static_mc(*problem.static_team, mixture, mc);
  }
  if (mode == EvalMode::kMonteCarlo) est.seed = common.seed;
  run.emit("estimate.csv", csv_file(est));
  run.finish();
  std::cout << cost_estimate_csv_header() << "\n" << to_csv_row(est) << "\n";
  return kExitOk;
}

SymmetricOptions symmetric_options(const CommonFlags& common, const OptimizeFlags& f) {
  SymmetricOptions o;
  if (f.method == "grid") {
    o.method = SymmetricOptions::Method::kGrid;
  } else if (f.method == "gradient") {
    o.method = SymmetricOptions::Method::kProjectedGradient;
  }
  if (f.pitch > 0.0) o.pitch = f.pitch;
  o.restarts = f.restarts;
  o.tol = f.tol;
  o.fd_step = f.fd_step;
  o.seed = common.seed;
  return o;
}

CrossEntropyOptions ce_options(const CommonFlags& common, const OptimizeFlags& f) {
  CrossEntropyOptions o;
  o.population = f.population;
  o.elites = f.elites;
  o.iterations = f.iterations;
  o.smoothing = f.smoothing;
  o.seed = common.seed;
  o.mc_samples = as_samples(f.mc_samples, "--mc-samples");
  o.chunk_size = common.chunk_size;
  return o;
}

std::string opt_csv(const OptResult& r) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", r.best_value);
  return "method,best_value,evaluations,restarts,converged\n" + std::string(to_string(r.method)) +
         "," + buf + "," + std::to_string(r.evaluations) + "," + std::to_string(r.restarts) + "," +
         (r.converged ? "true" : "false") + "\n";
}

int cmd_optimize(const CommonFlags& common, const OptimizeFlags& f, const std::string& command) {
  const Json config = io::parse_json_file(f.config);
  const io::Problem problem = io::problem_from_json(config);
  const io::PolicyShape shape = io::policy_shape(problem);
  Run run = start_run(common, command, config);
  run.manifest.settings["class"] = f.policy_class;

  auto need_static = [&]() -> const StaticTeam& {
    if (!problem.static_team) {
      throw ConfigError("--class " + f.policy_class + " needs a static problem; use --class dynamic");
    }
    return *problem.static_team;
  };
  std::optional<OptResult> result;
  if (f.policy_class == "dirac") {
    result = problem.is_dynamic() ? brute_force_dirac(*problem.dynamic_team)
                                  : brute_force_dirac(*problem.static_team);
  } else if (f.policy_class == "prsym") {
    const auto o = symmetric_options(common, f);
    run.manifest.settings["method"] = f.method;
    run.manifest.settings["pitch"] = o.pitch;
    run.manifest.settings["restarts"] = o.restarts;
    run.manifest.settings["tol"] = o.tol;
    result = optimize_symmetric_kernel(need_static(), o);
  } else if (f.policy_class == "product") {
    const double pitch = f.pitch > 0.0 ? f.pitch : 0.25;
    run.manifest.settings["pitch"] = pitch;
    result = optimize_product_grid(need_static(), pitch);
  } else if (f.policy_class == "exchangeable") {
    const double pitch = f.pitch > 0.0 ? f.pitch : 0.125;
    run.manifest.settings["pitch"] = pitch;
    result = optimize_exchangeable_grid(need_static(), pitch);
  } else if (f.policy_class == "dynamic") {
    const DynamicTeam team =
        problem.is_dynamic() ? *problem.dynamic_team : DynamicTeam::from_static(*problem.static_team);
    const auto o = ce_options(common, f);
    run.manifest.settings["population"] = o.population;
    run.manifest.settings["elites"] = o.elites;
    run.manifest.settings["iterations"] = o.iterations;
    run.manifest.settings["smoothing"] = o.smoothing;
    io::PolicyShape dshape{team.horizon(), team.observations(), team.actions(), team.num_dms()};
    result = optimize_symmetric_dynamic(team, o);
    run.emit("opt_result.json", io::opt_result_to_json(*result, dshape).dump(2) + "\n");
    run.emit("opt_result.csv", opt_csv(*result));
    run.finish();
    std::cout << opt_csv(*result);
    return kExitOk;
  } else {
    throw ConfigError("--class: expected dirac, prsym, product, exchangeable or dynamic");
  }
  run.emit("opt_result.json", io::opt_result_to_json(*result, shape).dump(2) + "\n");
  run.emit("opt_result.csv", opt_csv(*result));
  run.finish();
  std::cout << opt_csv(*result);
  return kExitOk;
}

RelaxedKernel recipe_kernel(const std::string& path, const io::PolicyShape& shape) {
  io::PolicyShape one = shape;
  one.num_dms = 1;
  const Mixture m = io::mixture_from_json(io::parse_json_file(path), one);
  if (m.atoms().size() != 1 || m.num_dms() != 1) {
    throw ConfigError("--recipe: expected a single i.i.d. kernel ({\"iid\": kernel})");
  }
  return m.atoms().front().profile.front();
}

int cmd_scaling(const CommonFlags& common, const ScalingFlags& f, const std::string& command) {
  if (f.variant == "df-audit") {
    Json config = Json::object();
    std::vector<Mixture> instances;
    if (!f.policy.empty()) {
      config = io::parse_json_file(f.policy);
      io::PolicyShape shape{1, FiniteSpace::indexed(f.obs, "y"), FiniteSpace::indexed(f.actions, "a"), 1};
      if (!f.config.empty()) shape = io::policy_shape(io::problem_from_json(io::parse_json_file(f.config)));
      instances = io::mixtures_from_json(config, shape);
    } else {
      config = {{"instances", f.instances}, {"max_n", f.max_n}, {"max_atoms", f.max_atoms},
                {"obs", f.obs}, {"actions", f.actions}};
      for (std::size_t k = 0; k < f.instances; ++k) {
        Rng rng = make_stream(common.seed, k);
        const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(f.max_n));
        instances.push_back(random_exchangeable_mixture(std::min(n, f.max_n), f.max_atoms, 1, f.obs,
                                                        f.actions, rng));
      }
    }
    std::vector<std::size_t> ms = f.m_list;
    if (ms.empty()) {
      for (std::size_t m = 1; m <= 8; ++m) ms.push_back(m);
    }
    Run run = start_run(common, command, config);
    run.manifest.settings["variant"] = f.variant;
    run.manifest.settings["m_list"] = ms;
    const DfAudit audit = df_bound_audit(instances, ms);
    run.emit("df_audit.csv", to_csv(audit));
    run.finish();
    std::cout << "rows " << audit.rows.size() << ", violations " << audit.violations
              << ", min slack " << audit.min_slack << "\n";
    return audit.violations == 0 ? kExitOk : kExitNonFinite;
  }

  if (f.config.empty()) throw CLI::RequiredError("--config");
  if (f.n_list.empty()) throw CLI::ValidationError("--n-list", "expected a nonempty list of team sizes");
  const Json config = io::parse_json_file(f.config);
  const io::Problem problem = io::problem_from_json(config);
  const io::PolicyShape shape = io::policy_shape(problem);
  Run run = start_run(common, command, config);
  run.manifest.settings["variant"] = f.variant;
  run.manifest.settings["n_list"] = f.n_list;

  if (f.variant == "dynamic-gap") {
    const DynamicTeam base =
        problem.is_dynamic() ? *problem.dynamic_team : DynamicTeam::from_static(*problem.static_team);
    std::vector<GapCurve> curves;
    for (std::size_t s = 0; s < std::max<std::size_t>(f.seeds, 1); ++s) {
      CrossEntropyOptions o;
      o.seed = mix_seed(common.seed, s);
      o.chunk_size = common.chunk_size;
      curves.push_back(dynamic_gap_curve(dynamic_family(base), f.n_list, o));
    }
    // The best symmetric value across seeds is kept per N.
    GapCurve curve = curves.front();
    for (const auto& c : curves) {
      for (std::size_t i = 0; i < c.rows.size(); ++i) {
        if (c.rows[i].j_sym < curve.rows[i].j_sym) curve.rows[i] = c.rows[i];
      }
    }
    run.manifest.settings["seeds"] = f.seeds;
    run.emit("gap_curve.csv", to_csv(curve, common.timing));
    if (common.timing) {
      Json t = Json::array();
      for (const auto& r : curve.rows) t.push_back({{"N", r.n}, {"runtime_s", r.runtime_s}});
      run.manifest.settings["runtimes"] = t;
    }
    run.finish();
    std::cout << to_csv(curve, common.timing);
    return kExitOk;
  }
  if (!problem.static_team) throw ConfigError("scaling " + f.variant + " needs a static problem");
  const StaticFamily family = static_family(*problem.static_team);
  if (f.variant == "gap") {
    OptimizeFlags of;
    of.method = f.method;
    const GapCurve curve = gap_curve(family, f.n_list, symmetric_options(common, of));
    run.emit("gap_curve.csv", to_csv(curve, common.timing));
    run.finish();
    std::cout << to_csv(curve, common.timing);
    return kExitOk;
  }
  if (f.recipe.empty()) throw CLI::RequiredError("--recipe");
  const RelaxedKernel recipe = recipe_kernel(f.recipe, shape);
  run.manifest.settings["recipe_hash"] = io::file_hash(f.recipe);
  if (f.variant == "limit") {
    run.manifest.settings["tail_window"] = f.tail_window;
    const LimitEstimate est = limit_cost_estimate(recipe, family, f.n_list, f.tail_window);
    run.emit("limit.csv", to_csv(est));
    run.finish();
    std::cout << to_csv(est);
    return kExitOk;
  }
  if (f.variant == "restriction") {
    const auto rows = restriction_suboptimality(recipe, family, f.n_list);
    run.emit("restriction.csv", to_csv(rows));
    run.finish();
    std::cout << to_csv(rows);
    return kExitOk;
  }
  throw CLI::ValidationError("variant", "expected gap, dynamic-gap, limit, df-audit or restriction");
}

std::string joined_command(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"exteam: exchangeable mean-field team solver"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  CommonFlags common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--threads", common.threads, "worker threads (fallback: EXTEAM_THREADS)");
    sub->add_option("--chunk-size", common.chunk_size, "Monte Carlo samples per RNG stream")
        ->capture_default_str();
    sub->add_option("--seed", common.seed, "root seed for all randomness")->capture_default_str();
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
    sub->add_flag("--timing", common.timing, "record wall-clock runtimes in CSV outputs");
  };

  EvaluateFlags ef;
  auto* evaluate = app.add_subcommand("evaluate", "expected cost of a policy");
  add_common(evaluate);
  evaluate->add_option("--config", ef.config, "problem document (JSON)")->required();
  evaluate->add_option("--policy", ef.policy, "policy document (JSON)")->required();
  evaluate->add_flag("--exact", ef.exact, "exact enumeration (default)");
  evaluate->add_flag("--mc", ef.mc, "Monte Carlo estimate");
  evaluate->add_flag("--reduced", ef.reduced, "change-of-measure evaluator (dynamic problems)");
  evaluate->add_option("--samples", ef.samples, "Monte Carlo sample count")->capture_default_str();

  OptimizeFlags of;
  auto* optimize = app.add_subcommand("optimize", "optimize over a policy class");
  add_common(optimize);
  optimize->add_option("--config", of.config, "problem document (JSON)")->required();
  optimize->add_option("--class", of.policy_class, "dirac | prsym | product | exchangeable | dynamic")
      ->capture_default_str();
  optimize->add_option("--method", of.method, "prsym solver: auto | grid | gradient")->capture_default_str();
  optimize->add_option("--pitch", of.pitch, "grid pitch (prsym 1/64, product 1/4, exchangeable 1/8)");
  optimize->add_option("--restarts", of.restarts, "projected-gradient restarts")->capture_default_str();
  optimize->add_option("--tol", of.tol, "projected-gradient stopping tolerance")->capture_default_str();
  optimize->add_option("--fd-step", of.fd_step, "central-difference step")->capture_default_str();
  optimize->add_option("--population", of.population, "cross-entropy population")->capture_default_str();
  optimize->add_option("--elites", of.elites, "cross-entropy elites")->capture_default_str();
  optimize->add_option("--iterations", of.iterations, "cross-entropy iterations")->capture_default_str();
  optimize->add_option("--smoothing", of.smoothing, "cross-entropy smoothing")->capture_default_str();
  optimize->add_option("--mc-samples", of.mc_samples, "samples per candidate when exact is too costly")
      ->capture_default_str();

  ScalingFlags sf;
  auto* scaling = app.add_subcommand("scaling", "N-scaling experiments");
  add_common(scaling);
  scaling->add_option("variant", sf.variant, "gap | dynamic-gap | limit | df-audit | restriction")
      ->required()
      ->check(CLI::IsMember({"gap", "dynamic-gap", "limit", "df-audit", "restriction"}));
  scaling->add_option("--config", sf.config, "problem document (JSON)");
  scaling->add_option("--n-list", sf.n_list, "team sizes, e.g. 2,4,6")
      ->delimiter(',')
      ->check(CLI::Validator(
          [](std::string& s) { return s.empty() ? std::string("empty team size") : std::string(); },
          "N"));
  scaling->add_option("--tail-window", sf.tail_window, "values covered by the limsup proxy")
      ->capture_default_str();
  scaling->add_option("--recipe", sf.recipe, "i.i.d. kernel document for limit / restriction");
  scaling->add_option("--policy", sf.policy, "df-audit: mixture document (object or array)");
  scaling->add_option("--seeds", sf.seeds, "dynamic-gap: cross-entropy seeds")->capture_default_str();
  scaling->add_option("--instances", sf.instances, "df-audit: random instances")->capture_default_str();
  scaling->add_option("--max-n", sf.max_n, "df-audit: largest random team size")->capture_default_str();
  scaling->add_option("--max-atoms", sf.max_atoms, "df-audit: atoms before symmetrization")
      ->capture_default_str();
  scaling->add_option("--obs", sf.obs, "df-audit: observation count")->capture_default_str();
  scaling->add_option("--actions", sf.actions, "df-audit: action count")->capture_default_str();
  scaling->add_option("--m-list", sf.m_list, "df-audit: marginal sizes (default 1..8)")->delimiter(',');
  scaling->add_option("--method", sf.method, "gap: prsym solver auto | grid | gradient")
      ->capture_default_str();

  const std::string command = joined_command(argc, argv);
  try {
    app.parse(argc, argv);
    configure_threads(common);
    if (*evaluate) return cmd_evaluate(common, ef, command);
    if (*optimize) return cmd_optimize(common, of, command);
    return cmd_scaling(common, sf, command);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const NonFiniteError& e) {
    std::cerr << "non-finite result: " << e.what() << "\n";
    return kExitNonFinite;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace exteam
