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


// Word-level MDP over the shared parser and the user simulator, and a
// tabular Q-learner over the induced bit-vector states.

#ifndef INCDIAL_LEARNER_HPP
#define INCDIAL_LEARNER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "incdial/grammar.hpp"
#include "incdial/induction.hpp"
#include "incdial/simulator.hpp"

namespace incdial::learner {

using induction::StateVector;

inline constexpr const char* kReleaseName = "<release>";

// Q-values closer than this count as equal when choosing greedily, so
// unconverged floating-point noise does not decide between actions of the
// same true value.
inline constexpr double kTieTolerance = 1e-4;

struct EnvConfig {
  std::size_t max_words_per_system_turn = 12;
  std::size_t max_dialogue_words = 40;
  std::uint64_t seed = 0;
  // Whether releasing on an empty context lets the simulated user open
  // the dialogue (the initiative rule).
  bool user_initiative = true;

  void validate() const;  // ConfigError
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static EnvConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
  std::size_t episodes = 20000;
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.8;
  std::uint64_t seed = 7;

  // Linear from epsilon_start to epsilon_end over the first
  // epsilon_decay_fraction of the episodes, flat afterwards.
  double epsilon(std::size_t episode) const;

  void validate() const;  // ConfigError
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

enum class Outcome { None, Ungrammatical, Lengthy, OutOfContext, Goal };

std::string_view to_string(Outcome o);

// Words in vocabulary order, then Release.
class ActionSpace {
 public:
  explicit ActionSpace(std::vector<std::string> words) : words_(std::move(words)) {}
  explicit ActionSpace(const grammar::Lexicon& lexicon) : words_(lexicon.vocabulary()) {}

  std::size_t size() const { return words_.size() + 1; }
  std::size_t release() const { return words_.size(); }
  bool is_release(std::size_t a) const { return a == words_.size(); }
  const std::string& name(std::size_t a) const;
  std::optional<std::size_t> index(std::string_view name) const;
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::string release_name_ = kReleaseName;
};

struct StepResult {
  StateVector state;
  double reward = 0.0;
  bool done = false;
  Outcome info = Outcome::None;
  // What the simulated user said in response, if anything.
  std::vector<std::string> user_words;
};

class Env {
 public:
  Env(std::shared_ptr<const grammar::Lexicon> lexicon, induction::GoalSpec spec,
      simulator::RuleSet rules, EnvConfig config);

  // Reseeds the simulator when a seed is given; otherwise its random stream
  // carries on from the previous episode.
  StateVector reset(std::optional<std::uint64_t> seed = std::nullopt);

  // Throws UsageError once the episode is done.
  StepResult step(std::size_t action);

  const ActionSpace& actions() const { return actions_; }
  const grammar::DialogueContext& context() const { return ctx_; }
  const StateVector& state() const { return state_; }
  const induction::GoalSpec& spec() const { return spec_; }
  const grammar::Parser& parser() const { return parser_; }
  const simulator::RuleSet& rules() const { return rules_; }
  bool done() const { return done_; }

 private:
  StepResult finish(double reward, Outcome info);
  // False when the user's utterance does not parse.
  bool user_speaks(const simulator::SimulatorRule& rule, StepResult& out);

  grammar::Parser parser_;
  induction::GoalSpec spec_;
  simulator::RuleSet rules_;
  simulator::SlotInventory inventory_;
  EnvConfig config_;
  ActionSpace actions_;
  std::mt19937_64 rng_;

  grammar::DialogueContext ctx_;
  StateVector state_;
  std::size_t turn_words_ = 0;
  std::size_t total_words_ = 0;
  bool done_ = false;
};

// Q(s, .) per state bitstring; absent states are all zeros.
using QTable = std::map<std::string, std::vector<double>>;

// A policy carries two tables over the same states.  `Main` is trained
// against the full simulator.  `SilentUser` is trained with the user's
// initiative switched off; it is what a live agent consults when the human
// hands over the turn without saying anything.
enum class Table { Main, SilentUser };

void q_update(QTable& q, std::size_t n_actions, const std::string& s, std::size_t a, double r,
              const std::string& s_next, bool done, double alpha, double gamma);

class Policy {
 public:
  Policy() = default;
  Policy(induction::GoalSpec spec, ActionSpace actions, TrainConfig train, EnvConfig env);

  const induction::GoalSpec& spec() const { return spec_; }
  const ActionSpace& actions() const { return actions_; }
  const TrainConfig& train_config() const { return train_; }
  const EnvConfig& env_config() const { return env_; }
  const std::string& lexicon_hash() const { return spec_.lexicon_hash; }
  QTable& q(Table t = Table::Main) { return t == Table::Main ? q_ : q_silent_; }
  const QTable& q(Table t = Table::Main) const { return t == Table::Main ? q_ : q_silent_; }

  double value(const StateVector& s, std::size_t a, Table t = Table::Main) const;
  // Highest value, lowest index on ties (within kTieTolerance).  `allowed`
  // restricts the choice.
  std::size_t greedy(const StateVector& s,
                     const std::function<bool(std::size_t)>& allowed = nullptr,
                     Table t = Table::Main) const;

  // Smallest and largest stored value across both tables.
  std::pair<double, double> bounds() const;

  nlohmann::json to_json() const;
  std::string serialize() const;  // to_json().dump(2) plus newline
  // Throws LoadError on schema problems.
  static Policy from_json(const nlohmann::json& j);
  // Throws HashMismatch when the policy was trained on another lexicon.
  void check_lexicon(const grammar::Lexicon& lexicon) const;

 private:
  induction::GoalSpec spec_;
  ActionSpace actions_{std::vector<std::string>{}};
  TrainConfig train_;
  EnvConfig env_;
  QTable q_;
  QTable q_silent_;
};

struct EpisodeLog {
  std::size_t episode = 0;
  double reward = 0.0;  // return of the episode
  std::size_t length = 0;  // actions taken
  Outcome outcome = Outcome::None;
};

struct TrainResult {
  Policy policy;
  std::vector<EpisodeLog> log;         // main table
  std::vector<EpisodeLog> silent_log;  // silent-user table
};

// Epsilon-greedy tabular Q-learning, once per table with the same
// schedule.  Throws HashMismatch when the inputs disagree on the lexicon.
TrainResult train(std::shared_ptr<const grammar::Lexicon> lexicon, const induction::GoalSpec& spec,
                  const simulator::RuleSet& rules, const TrainConfig& train_cfg,
                  const EnvConfig& env_cfg);

std::string log_csv(const std::vector<EpisodeLog>& log);

struct Step {
  std::size_t action = 0;
  StateVector before;
  StepResult result;
};

struct Episode {
  std::vector<Step> steps;
  std::vector<grammar::TranscriptWord> transcript;
  Outcome outcome = Outcome::None;
  double total_reward = 0.0;

  bool success() const { return outcome == Outcome::Goal; }
};

// One episode on env: greedy on `table` with probability 1 - epsilon,
// uniform random otherwise.
Episode rollout(const Policy& policy, Env& env, double epsilon, std::mt19937_64& rng,
                Table table = Table::Main);

// "SYS:what SYS:would ... USR:phone"
std::string transcript_string(const std::vector<grammar::TranscriptWord>& words);

struct EvalStats {
  std::size_t episodes = 0;
  std::optional<double> success_rate;  // undefined for zero episodes
  double mean_length = 0.0;
  std::size_t distinct_dialogue_shapes = 0;
  std::size_t distinct_successful_shapes = 0;
  std::vector<Episode> runs;

  nlohmann::json summary() const;
};

EvalStats evaluate(const Policy& policy, std::shared_ptr<const grammar::Lexicon> lexicon,
                   const simulator::RuleSet& rules, std::size_t n_episodes, std::uint64_t seed);

}  // namespace incdial::learner

#endif  // INCDIAL_LEARNER_HPP
