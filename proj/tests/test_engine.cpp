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


#include <doctest.h>

#include "incdial/engine.hpp"
#include "incdial/error.hpp"

using namespace incdial;
using namespace incdial::engine;

namespace {

const std::string kData = INCDIAL_DATA_DIR;

std::shared_ptr<const Agent> agent() {
  static const auto a = [] {
    auto lex = std::make_shared<const grammar::Lexicon>(grammar::Lexicon::load(kData + "/lexicon.json"));
    grammar::Parser parser(lex);
    auto corpus = grammar::load_corpus(kData + "/corpus.txt");
    auto spec = induction::induce(corpus, parser).spec;
    auto rules = simulator::extract_rules(corpus, parser, spec);
    simulator::augment(rules, std::filesystem::path(kData + "/augmentation.json"), *lex, spec);
    auto trained = learner::train(lex, spec, rules, {}, {});
    return Agent::create(lex, trained.policy, rules);
  }();
  return a;
}

// Runs a whole system turn; returns the words spoken.
std::vector<std::string> drive(Session& s, Events* all = nullptr) {
  std::vector<std::string> words;
  auto collect = [&](const Events& evs) {
    for (const auto& e : evs) {
      if (e["type"] == "system_word") words.push_back(e["text"]);
      if (all) all->push_back(e);
    }
  };
  collect(s.begin_drive());
  while (s.driving()) collect(s.drive_step());
  return words;
}

void say(Session& s, std::string_view words) {
  for (const auto& w : grammar::tokenize(words)) {
    auto evs = s.user_word(w);
    REQUIRE(!evs.empty());
    REQUIRE(evs.front()["type"] != "error");
  }
}

std::string join(const std::vector<std::string>& ws) {
  std::string out;
  for (const auto& w : ws) out += (out.empty() ? "" : " ") + w;
  return out;
}

bool replays_to_itself(const Session& s) {
  return grammar::replay(s.context().transcript, agent()->parser) == s.context();
}

}  // namespace

TEST_CASE("fresh session opens with all-zero bits") {
  Session s(agent(), "s1");
  auto e = s.state_event(true);
  CHECK(e["type"] == "state");
  CHECK(e["bits"] == "0000000|0000000");
  CHECK(e["features"].size() == 7);
  CHECK(e["status"] == "active");
}

TEST_CASE("system initiative asks the corpus question") {
  Session s(agent(), "s1");
  auto words = drive(s);
  REQUIRE_FALSE(words.empty());
  CHECK(words.front() == "what");
  // Whatever the wording, the turn ends on the corpus question's semantics.
  CHECK(simulator::match(agent()->rules, s.context()) == &agent()->rules.rules()[0]);
  CHECK(s.status() == Status::Active);
  say(s, "a phone");
  auto bits = s.state();
  CHECK(bits.current(0) + bits.current(1) > 0);
  CHECK(join(drive(s)) == "by");
  say(s, "lg");
  Events evs;
  CHECK(join(drive(s, &evs)) == "okay");
  CHECK(evs.back()["type"] == "end");
  CHECK(evs.back()["success"] == true);
  CHECK(s.status() == Status::Success);
  CHECK(replays_to_itself(s));
}

TEST_CASE("user initiative is acknowledged") {
  Session s(agent(), "s1");
  say(s, "I would like a phone by LG");
  Events evs;
  CHECK(join(drive(s, &evs)) == "okay");
  CHECK(s.status() == Status::Success);
  CHECK(evs.back() == nlohmann::json({{"type", "end"}, {"success", true}, {"reason", "goal"}}));
  CHECK(s.user_word("okay").front()["code"] == "inactive");
  CHECK(s.begin_drive().front()["code"] == "inactive");
}

TEST_CASE("bad words leave the context alone") {
  Session s(agent(), "s1");
  auto before = s.context();
  auto e = s.user_word("zebra");
  CHECK(e.front()["type"] == "error");
  CHECK(e.front()["code"] == "unknown_word");
  e = s.user_word("which");
  CHECK(e.front()["code"] == "ungrammatical");
  CHECK(s.context() == before);
}

TEST_CASE("a drive cannot start mid-utterance") {
  Session s(agent(), "s1");
  say(s, "i would");
  CHECK(s.begin_drive().front()["code"] == "mid_utterance");
  CHECK_FALSE(s.driving());
}

TEST_CASE("interrupting the system mid-turn") {
  Session s(agent(), "s1");
  s.begin_drive();
  auto evs = s.drive_step();
  REQUIRE_FALSE(evs.empty());
  CHECK(evs.front()["text"] == "what");
  REQUIRE(s.driving());
  // The user cuts in after "what".
  say(s, "would you like");
  CHECK_FALSE(s.driving());
  CHECK(replays_to_itself(s));
  CHECK(s.drive_step().empty());
}

TEST_CASE("continuation after an interrupted question") {
  Session s(agent(), "s1");
  drive(s);
  say(s, "a phone");
  s.begin_drive();
  auto first = s.drive_step();
  REQUIRE_FALSE(first.empty());
  CHECK(first.front()["text"] == "by");
  CHECK_FALSE(s.driving());
  say(s, "samsung");
  drive(s);
  CHECK(s.status() == Status::Success);
  CHECK(replays_to_itself(s));
}

TEST_CASE("driving a finished context ends at once") {
  Session s(agent(), "s1");
  say(s, "i would like a phone by lg okay");
  CHECK(s.status() == Status::Success);
}

TEST_CASE("agent refuses mismatched artifacts") {
  auto a = agent();
  auto rules = a->rules.to_json();
  rules["lexicon_hash"] = "nope";
  CHECK_THROWS_AS(Agent::create(a->lexicon, a->policy, simulator::RuleSet::from_json(rules)), HashMismatch);
}
