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
#ifndef EXTEAM_IO_HPP_
#define EXTEAM_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "exteam/evaluation.hpp"
#include "exteam/optimization.hpp"
#include "exteam/policy.hpp"
#include "exteam/team_model.hpp"

namespace exteam::io {

using Json = nlohmann::json;

// Parse failures raise ConfigError naming the source, line and column.
Json parse_json_text(const std::string& text, const std::string& source);
Json parse_json_file(const std::filesystem::path& path);

// A problem document is dynamic when it has a "horizon" field.
struct Problem {
  std::optional<StaticTeam> static_team;
  std::optional<DynamicTeam> dynamic_team;
  std::optional<ReductionData> reduction;

  bool is_dynamic() const { return dynamic_team.has_value(); }
  std::size_t num_dms() const;
};

Problem problem_from_json(const Json& doc);
StaticTeam static_team_from_json(const Json& doc);
DynamicTeam dynamic_team_from_json(const Json& doc);
// Reads the optional "reduction" block: {"kind": "countable" | "gaussian" |
// "reference", "tau": [...]}.
std::optional<ReductionData> reduction_from_json(const Json& doc, const DynamicTeam& team);

// Labels a policy document is resolved against.
struct PolicyShape {
  std::size_t stages = 1;
  FiniteSpace observations;
  FiniteSpace actions;
  std::size_t num_dms = 1;
};

PolicyShape policy_shape(const Problem& problem);

RelaxedKernel kernel_from_json(const Json& j, const PolicyShape& shape, const std::string& path);
Json kernel_to_json(const RelaxedKernel& kernel, const PolicyShape& shape);

// Accepts {"tag", "atoms": [{"weight", "profile": [kernel...]}]},
// {"common_randomness": {"eta", "factors"}}, {"iid": kernel} and
// {"deterministic": [kernel...]}. A declared tag must be sound.
Mixture mixture_from_json(const Json& doc, const PolicyShape& shape);
Json mixture_to_json(const Mixture& mixture, const PolicyShape& shape);
// A document holding one mixture or an array of them.
std::vector<Mixture> mixtures_from_json(const Json& doc, const PolicyShape& shape);

Json opt_result_to_json(const OptResult& result, const PolicyShape& shape);

// FNV-1a 64 of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const Json& doc);
std::string fnv1a_hex(const std::string& bytes);
std::string file_hash(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::string started;
  std::string finished;
  Json settings = Json::object();
  std::vector<std::filesystem::path> outputs;
};

// Writes manifest.json into `dir`; lists every output with its hash and the
// manifest itself.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

std::string utc_timestamp();

}  // namespace exteam::io

#endif  // EXTEAM_IO_HPP_
