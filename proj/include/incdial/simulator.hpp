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


// Semantic user simulator.
//
// Rules map a delexicalized context trigger to user utterance templates.
// They are read off the corpus at every user-utterance onset; an optional
// augmentation file adds rules the corpus cannot supply (user initiative).
// At run time the simulator speaks when the system's current semantics is
// equivalent to a trigger.

#ifndef INCDIAL_SIMULATOR_HPP
#define INCDIAL_SIMULATOR_HPP

#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "incdial/grammar.hpp"
#include "incdial/induction.hpp"
#include "incdial/ttr.hpp"

namespace incdial::simulator {

struct TemplateToken {
  std::string text;  // a word, or the sort name of a slot
  bool slot = false;

  bool operator==(const TemplateToken&) const = default;
};

struct UtteranceTemplate {
  std::vector<TemplateToken> tokens;

  // Slots print as "<sort>".
  std::vector<std::string> strings() const;
  std::string str() const;
  static UtteranceTemplate from_strings(std::span<const std::string> tokens);

  bool operator==(const UtteranceTemplate&) const = default;
};

struct SimulatorRule {
  ttr::RecordType trigger;
  std::vector<UtteranceTemplate> templates;

  bool initiative() const { return trigger.empty(); }
};

class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::string lexicon_hash) : lexicon_hash_(std::move(lexicon_hash)) {}

  // Merges into the rule with an equivalent trigger, skipping templates it
  // already has.  The trigger is delexicalized first.
  void add(ttr::RecordType trigger, const UtteranceTemplate& tmpl);

  const std::vector<SimulatorRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  const SimulatorRule* initiative() const;
  const std::string& lexicon_hash() const { return lexicon_hash_; }

  nlohmann::json to_json() const;
  static RuleSet from_json(const nlohmann::json& j);

 private:
  std::vector<SimulatorRule> rules_;
  std::string lexicon_hash_;
};

struct SlotFiller {
  std::string word;
  std::string value;
};

class SlotInventory {
 public:
  static SlotInventory from_lexicon(const grammar::Lexicon& lexicon);

  const std::vector<SlotFiller>* fillers(std::string_view sort) const;
  const std::map<std::string, std::vector<SlotFiller>, std::less<>>& sorts() const { return by_sort_; }

 private:
  std::map<std::string, std::vector<SlotFiller>, std::less<>> by_sort_;
};

// Throws InductionError when a dialogue fails to parse.
RuleSet extract_rules(std::span<const grammar::Dialogue> corpus, const grammar::Parser& parser,
                      const induction::GoalSpec& spec);

// Adds augmentation rules: a JSON array of {"trigger": "<rt>", "templates":
// [[token...]...]}.  Throws LoadError on unknown words, slot sorts outside
// spec.slot_sorts, or malformed triggers.
void augment(RuleSet& rules, const nlohmann::json& doc, const grammar::Lexicon& lexicon,
             const induction::GoalSpec& spec);
void augment(RuleSet& rules, const std::filesystem::path& path, const grammar::Lexicon& lexicon,
             const induction::GoalSpec& spec);

// The rule whose trigger is equivalent to the delexicalized current
// semantics.  The initiative rule only matches on an empty current
// semantics after the system released the turn.
const SimulatorRule* match(const RuleSet& rules, const grammar::DialogueContext& ctx,
                           bool released = false);

// Throws RealizationError when a slot sort has no fillers.
std::vector<std::string> realize(const SimulatorRule& rule, const SlotInventory& inv,
                                 std::mt19937_64& rng);

}  // namespace incdial::simulator

#endif  // INCDIAL_SIMULATOR_HPP
