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

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "exteam/cli.hpp"
#include "exteam/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = EXTEAM_CLI_PATH;
const std::string kConfigs = EXTEAM_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("exteam_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the CLI with stdout and stderr captured under dir; returns the exit code.
int run(const std::string& args, const fs::path& dir) {
  const std::string cmd = kCli + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Second line of a CSV file, split on commas.
std::vector<std::string> first_row(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::vector<std::string> cells;
  std::stringstream ls(line);
  for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
  return cells;
}

}  // namespace

TEST_CASE("evaluate Bernoulli one half exactly") {
  const auto dir = scratch("eval_exact");
  REQUIRE(run("evaluate --config " + kConfigs + "/half_split.json --policy " + kConfigs +
                  "/bernoulli_half.json --exact --out " + dir.string(),
              dir) == exteam::kExitOk);
  const auto row = first_row(dir / "estimate.csv");
  REQUIRE(row.size() == 5);
  CHECK(std::stod(row[0]) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(row[2] == "true");
  const auto manifest = exteam::io::parse_json_file(dir / "manifest.json");
  CHECK(manifest["command"].get<std::string>().find("evaluate") != std::string::npos);
  CHECK(manifest["outputs"][0]["fnv1a64"] == exteam::io::file_hash(dir / "estimate.csv"));
  CHECK(manifest["config_hash"] ==
        exteam::io::config_hash(exteam::io::parse_json_file(kConfigs + "/half_split.json")));
}

TEST_CASE("evaluate Bernoulli one half by Monte Carlo") {
  const auto dir = scratch("eval_mc");
  REQUIRE(run("evaluate --config " + kConfigs + "/half_split.json --policy " + kConfigs +
                  "/bernoulli_half.json --mc --samples 1e6 --seed 7 --out " + dir.string(),
              dir) == exteam::kExitOk);
  const auto row = first_row(dir / "estimate.csv");
  const double value = std::stod(row[0]), se = std::stod(row[1]);
  CHECK(se > 0.0);
  CHECK(std::abs(value - 0.125) <= 3.0 * se);
  CHECK(row[3] == "1000000");
  CHECK(row[4] == "7");
}

TEST_CASE("malformed configs exit with a diagnostic naming the field") {
  const auto dir = scratch("bad_config");
  auto doc = exteam::io::parse_json_file(kConfigs + "/half_split.json");
  doc["actions"].erase("labels");
  doc["actions"]["values"] = "zero";
  exteam::io::write_text_file(dir / "bad.json", doc.dump());
  CHECK(run("evaluate --config " + (dir / "bad.json").string() + " --policy " + kConfigs +
                "/bernoulli_half.json --out " + dir.string(),
            dir) == exteam::kExitConfig);
  CHECK(slurp(dir / "stderr.txt").find("actions.values") != std::string::npos);

  exteam::io::write_text_file(dir / "syntax.json", "{\n  \"N\": 2,\n  oops\n}\n");
  CHECK(run("evaluate --config " + (dir / "syntax.json").string() + " --policy " + kConfigs +
                "/bernoulli_half.json --out " + dir.string(),
            dir) == exteam::kExitConfig);
  CHECK(slurp(dir / "stderr.txt").find("syntax.json:3:") != std::string::npos);
}

TEST_CASE("usage and budget errors have their own exit codes") {
  const auto dir = scratch("codes");
  CHECK(run("", dir) == exteam::kExitUsage);
  CHECK(run("evaluate --config " + kConfigs + "/half_split.json", dir) == exteam::kExitUsage);
  CHECK(run("scaling gap --config " + kConfigs + "/half_split.json --n-list 4,2 --out " +
                dir.string(),
            dir) == exteam::kExitConfig);
  auto doc = exteam::io::parse_json_file(kConfigs + "/half_split.json");
  doc["N"] = 400;
  doc["actions"] = exteam::io::Json::parse(R"({"values": [0, 1, 2, 3, 4, 5]})");
  exteam::io::write_text_file(dir / "big.json", doc.dump());
  exteam::io::write_text_file(dir / "uniform.json",
                              R"({"iid": [[0.125, 0.125, 0.25, 0.25, 0.125, 0.125]]})");
  CHECK(run("evaluate --config " + (dir / "big.json").string() + " --policy " +
                (dir / "uniform.json").string() + " --exact --out " + dir.string(),
            dir) == exteam::kExitBudget);
  CHECK(slurp(dir / "stderr.txt").find("--mc") != std::string::npos);
}

TEST_CASE("optimize each policy class on the half-split team") {
  const std::pair<const char*, double> cases[] = {
      {"dirac", 0.0}, {"prsym", 0.125}, {"product", 0.0}, {"exchangeable", 0.0}, {"dynamic", 0.125}};
  for (const auto& [cls, expect] : cases) {
    CAPTURE(cls);
    const auto dir = scratch(std::string("opt_") + cls);
    REQUIRE(run("optimize --config " + kConfigs + "/half_split.json --class " + cls + " --out " +
                    dir.string(),
                dir) == exteam::kExitOk);
    const auto result = exteam::io::parse_json_file(dir / "opt_result.json");
    CHECK(result["best_value"].get<double>() == doctest::Approx(expect).epsilon(1e-3));
    CHECK(result.contains("best_policy"));
    CHECK(fs::exists(dir / "opt_result.csv"));
  }
}

TEST_CASE("scaling outputs are byte-identical across runs") {
  const auto a = scratch("gap_a"), b = scratch("gap_b");
  const std::string args = "scaling gap --config " + kConfigs + "/half_split.json --n-list 2,3,4,6 ";
  REQUIRE(run(args + "--out " + a.string(), a) == exteam::kExitOk);
  REQUIRE(run(args + "--out " + b.string(), b) == exteam::kExitOk);
  CHECK(slurp(a / "gap_curve.csv") == slurp(b / "gap_curve.csv"));
  CHECK(slurp(a / "gap_curve.csv").rfind("N,J_sym,J_det,eps,runtime_s\n2,0.125,0,0.125,0\n", 0) == 0);
}

TEST_CASE("limit, restriction and df-audit commands") {
  const auto dir = scratch("lab");
  REQUIRE(run("scaling limit --config " + kConfigs + "/half_split.json --recipe " + kConfigs +
                  "/bernoulli_half.json --n-list 2,4,6,8 --tail-window 2 --out " + dir.string(),
              dir) == exteam::kExitOk);
  CHECK(slurp(dir / "limit.csv").find("8,0.03125,1,0.04166666666666667,true") != std::string::npos);
  REQUIRE(run("scaling restriction --config " + kConfigs + "/half_split.json --recipe " + kConfigs +
                  "/bernoulli_half.json --n-list 2,3 --out " + dir.string(),
              dir) == exteam::kExitOk);
  CHECK(fs::exists(dir / "restriction.csv"));
  REQUIRE(run("scaling df-audit --config " + kConfigs + "/half_split.json --policy " + kConfigs +
                  "/split_pair_symmetrized.json --m-list 1,2 --out " + dir.string(),
              dir) == exteam::kExitOk);
  CHECK(slurp(dir / "df_audit.csv").find("0,2,2,0.5,0.5,0,false") != std::string::npos);
  REQUIRE(run("scaling df-audit --instances 40 --max-n 4 --seed 3 --out " + dir.string(), dir) ==
          exteam::kExitOk);
  const auto manifest = exteam::io::parse_json_file(dir / "manifest.json");
  CHECK(manifest["seed"] == 3);
}

TEST_CASE("a missing N list is a usage error") {
  const auto dir = scratch("empty_n");
  CHECK(run("scaling gap --config " + kConfigs + "/half_split.json --out " + dir.string(), dir) ==
        exteam::kExitUsage);
  CHECK(run("scaling gap --config " + kConfigs + "/half_split.json --n-list \"\" --out " +
                dir.string(),
            dir) == exteam::kExitUsage);
}

TEST_CASE("gap curve command on even sizes") {
  const auto dir = scratch("gap_even");
  REQUIRE(run("scaling gap --config " + kConfigs + "/half_split.json --n-list 2,4,6,8 --out " +
                  dir.string(),
              dir) == exteam::kExitOk);
  std::istringstream in(slurp(dir / "gap_curve.csv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::string n, sym, det, eps;
    std::getline(ls, n, ',');
    std::getline(ls, sym, ',');
    std::getline(ls, det, ',');
    std::getline(ls, eps, ',');
    CHECK(std::stod(eps) == doctest::Approx(1.0 / (4.0 * std::stod(n))).epsilon(1e-6));
    ++rows;
  }
  CHECK(rows == 4);
}
