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


#include "incdial/simulator.hpp"

#include <algorithm>

#include "incdial/error.hpp"
#include "incdial/util.hpp"

namespace incdial::simulator {

using ttr::RecordType;

std::vector<std::string> UtteranceTemplate::strings() const {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.slot ? "<" + t.text + ">" : t.text);
  return out;
}

std::string UtteranceTemplate::str() const {
  std::string out;
  for (const auto& s : strings()) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

UtteranceTemplate UtteranceTemplate::from_strings(std::span<const std::string> tokens) {
  UtteranceTemplate t;
  for (const auto& s : tokens) {
    if (s.size() > 2 && s.front() == '<' && s.back() == '>')
      t.tokens.push_back({s.substr(1, s.size() - 2), true});
    else
      t.tokens.push_back({s, false});
  }
  return t;
}

void RuleSet::add(RecordType trigger, const UtteranceTemplate& tmpl) {
  trigger = ttr::delexicalize(trigger);
  for (auto& r : rules_) {
    if (!ttr::equivalent(r.trigger, trigger)) continue;
    if (std::find(r.templates.begin(), r.templates.end(), tmpl) == r.templates.end())
      r.templates.push_back(tmpl);
    return;
  }
  rules_.push_back({std::move(trigger), {tmpl}});
}

const SimulatorRule* RuleSet::initiative() const {
  for (const auto& r : rules_)
    if (r.initiative()) return &r;
  return nullptr;
}

nlohmann::json RuleSet::to_json() const {
  auto rules = nlohmann::json::array();
  for (const auto& r : rules_) {
    auto templates = nlohmann::json::array();
    for (const auto& t : r.templates) templates.push_back(t.strings());
    rules.push_back({{"trigger", r.trigger.str()}, {"templates", std::move(templates)}});
  }
  return {{"lexicon_hash", lexicon_hash_}, {"rules", std::move(rules)}};
}

RuleSet RuleSet::from_json(const nlohmann::json& j) {
  try {
    RuleSet out(j.at("lexicon_hash").get<std::string>());
    for (const auto& r : j.at("rules")) {
      auto trigger = RecordType::parse(r.at("trigger").get<std::string>());
      if (!ttr::well_formed(trigger)) throw LoadError("malformed rule trigger " + trigger.str());
      if (r.at("templates").empty()) throw LoadError("rule " + trigger.str() + " has no templates");
      for (const auto& t : r.at("templates"))
        out.add(trigger, UtteranceTemplate::from_strings(t.get<std::vector<std::string>>()));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("rule set: ") + e.what());
  }
}

SlotInventory SlotInventory::from_lexicon(const grammar::Lexicon& lexicon) {
  SlotInventory inv;
  for (const auto& e : lexicon.entries()) {
    if (e.kind != grammar::EntryKind::Slot) continue;
    auto& list = inv.by_sort_[e.sort];
    bool seen = std::any_of(list.begin(), list.end(),
                            [&](const SlotFiller& f) { return f.word == e.word; });
    if (!seen) list.push_back({e.word, e.value});
  }
  return inv;
}

const std::vector<SlotFiller>* SlotInventory::fillers(std::string_view sort) const {
  auto it = by_sort_.find(sort);
  return it == by_sort_.end() ? nullptr : &it->second;
}

RuleSet extract_rules(std::span<const grammar::Dialogue> corpus, const grammar::Parser& parser,
                      const induction::GoalSpec& spec) {
  const auto& lex = parser.lexicon();
  RuleSet out(lex.hash());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    grammar::DialogueParse parse;
    try {
      parse = grammar::parse_dialogue(corpus[i], parser, i);
    } catch (const ParseFailure& e) {
      throw InductionError(std::string("rule extraction: ") + e.what());
    }
    for (const auto& onset : parse.onsets) {
      UtteranceTemplate tmpl;
      for (const auto& w : corpus[i][onset.turn].tokens) {
        auto sort = lex.slot_sort(w);
        if (sort && spec.slot_sorts.count(*sort))
          tmpl.tokens.push_back({*sort, true});
        else
          tmpl.tokens.push_back({w, false});
      }
      out.add(grammar::current_semantics(onset.before), tmpl);
    }
  }
  return out;
}

void augment(RuleSet& rules, const nlohmann::json& doc, const grammar::Lexicon& lexicon,
             const induction::GoalSpec& spec) {
  if (!doc.is_array()) throw LoadError("augmentation: expected a JSON array of rules");
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "augmentation rule " + std::to_string(i) + ": ";
    const auto& r = doc[i];
    if (!r.is_object() || !r.contains("trigger") || !r.contains("templates"))
      throw LoadError(where + "needs 'trigger' and 'templates'");
    if (!r["trigger"].is_string() || !r["templates"].is_array() || r["templates"].empty())
      throw LoadError(where + "'trigger' must be a string and 'templates' a nonempty array");
    RecordType trigger;
    try {
      trigger = RecordType::parse(r["trigger"].get<std::string>());
    } catch (const SyntaxError& e) {
      throw LoadError(where + e.what());
    }
    if (!ttr::well_formed(trigger)) throw LoadError(where + "malformed trigger " + trigger.str());
    for (const auto& t : r["templates"]) {
      if (!t.is_array() || t.empty()) throw LoadError(where + "a template must be a nonempty token list");
      std::vector<std::string> words;
      for (const auto& w : t) {
        if (!w.is_string()) throw LoadError(where + "template tokens must be strings");
        words.push_back(w.get<std::string>());
      }
      auto tmpl = UtteranceTemplate::from_strings(words);
      for (const auto& tok : tmpl.tokens) {
        if (tok.slot && !spec.slot_sorts.count(tok.text))
          throw LoadError(where + "slot <" + tok.text + "> is not an induced slot sort");
        if (!tok.slot && !lexicon.contains(tok.text))
          throw LoadError(where + "word '" + tok.text + "' is not in the lexicon");
      }
      rules.add(trigger, tmpl);
    }
  }
}

void augment(RuleSet& rules, const std::filesystem::path& path, const grammar::Lexicon& lexicon,
             const induction::GoalSpec& spec) {
  augment(rules, read_json(path), lexicon, spec);
}

const SimulatorRule* match(const RuleSet& rules, const grammar::DialogueContext& ctx, bool released) {
  if (ctx.live.empty()) return nullptr;
  RecordType cur = ttr::delexicalize(grammar::current_semantics(ctx));
  if (cur.empty()) return released ? rules.initiative() : nullptr;
  for (const auto& r : rules.rules())
    if (!r.initiative() && ttr::equivalent(r.trigger, cur)) return &r;
  return nullptr;
}

std::vector<std::string> realize(const SimulatorRule& rule, const SlotInventory& inv,
                                 std::mt19937_64& rng) {
  if (rule.templates.empty()) throw RealizationError("rule " + rule.trigger.str() + " has no templates");
  std::uniform_int_distribution<std::size_t> pick(0, rule.templates.size() - 1);
  const auto& tmpl = rule.templates[pick(rng)];
  std::vector<std::string> out;
  for (const auto& tok : tmpl.tokens) {
    if (!tok.slot) {
      out.push_back(tok.text);
      continue;
    }
    const auto* fillers = inv.fillers(tok.text);
    if (!fillers || fillers->empty())
      throw RealizationError("no slot fillers of sort '" + tok.text + "'");
    std::uniform_int_distribution<std::size_t> fill(0, fillers->size() - 1);
    out.push_back((*fillers)[fill(rng)].word);
  }
  return out;
}

}  // namespace incdial::simulator
