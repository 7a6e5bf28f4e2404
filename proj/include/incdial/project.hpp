// Copyright 2026 The incdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// The pipeline as the command line sees it: a project configuration, the
// induced artifacts on disk, and the reports each subcommand prints.

#ifndef INCDIAL_PROJECT_HPP
#define INCDIAL_PROJECT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "incdial/grammar.hpp"
#include "incdial/induction.hpp"
#include "incdial/learner.hpp"
#include "incdial/simulator.hpp"

namespace incdial::project {

namespace fs = std::filesystem;

struct ServeConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;
  unsigned delay_ms = 300;
  std::optional<fs::path> static_dir;
};

struct EvalConfig {
  std::size_t episodes = 200;
  std::uint64_t seed = 2024;
};

struct ProjectConfig {
  fs::path corpus;
  fs::path lexicon;
  std::optional<fs::path> augmentation;
  fs::path out = "out";
  learner::EnvConfig env;
  learner::TrainConfig train;
  EvalConfig evaluation;
  ServeConfig serve;

  // Relative paths resolve against the config file's directory.  Throws
  // ConfigError naming the offending key or path.
  static ProjectConfig load(const fs::path& path);
  static ProjectConfig from_json(const nlohmann::json& j, const fs::path& base_dir);
};

struct Artifacts {
  std::shared_ptr<const grammar::Lexicon> lexicon;
  induction::GoalSpec spec;
  simulator::RuleSet rules;
  std::vector<std::string> warnings;
};

std::shared_ptr<const grammar::Lexicon> load_lexicon(const ProjectConfig& cfg);

// Parses the corpus, induces the goal spec and extracts simulator rules.
Artifacts induce(const ProjectConfig& cfg);

fs::path goalspec_path(const ProjectConfig& cfg);
fs::path rules_path(const ProjectConfig& cfg);
fs::path policy_path(const ProjectConfig& cfg);

void write_artifacts(const Artifacts& a, const ProjectConfig& cfg);

// Reads goalspec.json and rules.json from the output directory, checking
// them against the configured lexicon (HashMismatch).  Returns nullopt when
// either file is absent.
std::optional<Artifacts> load_artifacts(const ProjectConfig& cfg);

// m, features, slot sorts, inventory and rules.
std::string describe(const Artifacts& a);

learner::Policy load_policy(const ProjectConfig& cfg, const grammar::Lexicon& lexicon);

// Human-readable gloss of a feature: "like(e)", "brand(b)", "x is an ent".
std::string gloss(const ttr::RecordType& feature);

// Transcript grouped into turns with slot words replaced by "<sort>":
// "USR: i would like a <item> by <brand> / SYS: okay".
std::string delexicalized_shape(const std::vector<grammar::TranscriptWord>& words,
                                const grammar::Lexicon& lexicon,
                                const std::set<std::string>& slot_sorts);

struct ShapeGroup {
  std::string shape;
  std::size_t count = 0;
  std::set<std::string> transcripts;  // distinct lexical realizations
};

struct VariantsReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<ShapeGroup> successful;  // most frequent first
  std::map<std::string, std::size_t> outcomes;
  std::map<std::string, std::set<std::string>> slot_values;  // across successes

  std::string text() const;
};

// Episode i runs under condition i % 4: greedy, epsilon 0.2, greedy with
// a silent user, epsilon 0.2 with a silent user.
VariantsReport variants(const learner::Policy& policy, std::shared_ptr<const grammar::Lexicon> lexicon,
                        const simulator::RuleSet& rules, std::size_t n, std::uint64_t seed);

}  // namespace incdial::project

#endif  // INCDIAL_PROJECT_HPP
