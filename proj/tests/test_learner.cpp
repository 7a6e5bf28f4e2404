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

#include <set>

#include "incdial/error.hpp"
#include "incdial/learner.hpp"

using namespace incdial;
using namespace incdial::learner;
using grammar::Lexicon;

namespace {

const std::string kData = INCDIAL_DATA_DIR;

struct Domain {
  std::shared_ptr<const Lexicon> lexicon;
  induction::GoalSpec spec;
  simulator::RuleSet rules;
};

const Domain& domain() {
  static const Domain d = [] {
    auto lex = std::make_shared<const Lexicon>(Lexicon::load(kData + "/lexicon.json"));
    grammar::Parser parser(lex);
    auto corpus = grammar::load_corpus(kData + "/corpus.txt");
    auto spec = induction::induce(corpus, parser).spec;
    auto rules = simulator::extract_rules(corpus, parser, spec);
    simulator::augment(rules, std::filesystem::path(kData + "/augmentation.json"), *lex, spec);
    return Domain{lex, spec, rules};
  }();
  return d;
}

Env make_env(EnvConfig cfg = {}) {
  const auto& d = domain();
  return Env(d.lexicon, d.spec, d.rules, cfg);
}

std::size_t act(const Env& env, const char* name) { return env.actions().index(name).value(); }

StepResult say(Env& env, const char* name) { return env.step(act(env, name)); }

const TrainResult& trained() {
  static const TrainResult r = [] {
    const auto& d = domain();
    return train(d.lexicon, d.spec, d.rules, TrainConfig{}, EnvConfig{});
  }();
  return r;
}

}  // namespace

TEST_CASE("action space") {
  auto env = make_env();
  const auto& acts = env.actions();
  CHECK(acts.size() == domain().lexicon->vocabulary().size() + 1);
  CHECK(acts.is_release(acts.size() - 1));
  CHECK(acts.name(acts.release()) == kReleaseName);
  CHECK(acts.index("okay") == std::optional<std::size_t>(0));
  CHECK(acts.index("what") == std::optional<std::size_t>(1));
  CHECK_FALSE(acts.index("zebra"));
}

TEST_CASE("reset gives the all-zero state") {
  auto env = make_env();
  const auto m = domain().spec.m();
  CHECK(env.reset().str() == std::string(m, '0') + "|" + std::string(m, '0'));
  say(env, "what");
  CHECK(env.reset(1) == StateVector(m));
  CHECK(env.context() == env.parser().start());
}

TEST_CASE("reward: ungrammatical word") {
  auto env = make_env();
  auto r = say(env, "which");
  CHECK(r.reward == -1.0);
  CHECK(r.done);
  CHECK(r.info == Outcome::Ungrammatical);
  CHECK_THROWS_AS(say(env, "what"), UsageError);
  CHECK_THROWS_AS(env.step(env.actions().size()), UsageError);
}

TEST_CASE("reward: turn cap") {
  auto env = make_env();
  for (int i = 0; i < 12; ++i) {
    auto r = say(env, "okay");
    REQUIRE(r.reward == 0.0);
    REQUIRE_FALSE(r.done);
  }
  auto r = say(env, "okay");
  CHECK(r.reward == -1.0);
  CHECK(r.info == Outcome::Lengthy);
}

TEST_CASE("reward: dialogue cap is checked before the goal") {
  EnvConfig cfg;
  cfg.max_dialogue_words = 5;
  auto env = make_env(cfg);
  auto r = env.step(env.actions().release());
  CHECK(r.reward == 0.0);
  CHECK(r.user_words.size() >= 6);
  r = say(env, "okay");
  CHECK(r.reward == -1.0);
  CHECK(r.info == Outcome::Lengthy);
}

TEST_CASE("reward: out-of-context release") {
  SUBCASE("abandoned utterance") {
    auto env = make_env();
    say(env, "what");
    say(env, "would");
    auto r = env.step(env.actions().release());
    CHECK(r.reward == -1.0);
    CHECK(r.info == Outcome::OutOfContext);
  }
  SUBCASE("complete but unmatched") {
    auto env = make_env();
    env.step(env.actions().release());
    auto r = env.step(env.actions().release());
    CHECK(r.reward == -1.0);
    CHECK(r.info == Outcome::OutOfContext);
  }
}

TEST_CASE("reward: goal and zero otherwise") {
  auto env = make_env();
  auto r = env.step(env.actions().release());
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.done);
  CHECK(r.info == Outcome::None);
  CHECK_FALSE(r.state.goal_reached());
  r = say(env, "okay");
  CHECK(r.reward == 1.0);
  CHECK(r.done);
  CHECK(r.info == Outcome::Goal);
  CHECK(r.state.goal_reached());
}

TEST_CASE("the corpus question draws the corpus answer") {
  auto env = make_env();
  for (const char* w : {"what", "would", "you"}) {
    auto r = say(env, w);
    CHECK(r.reward == 0.0);
    CHECK(r.user_words.empty());
  }
  auto r = say(env, "like");
  CHECK(r.reward == 0.0);
  REQUIRE(r.user_words.size() == 2);
  CHECK(r.user_words[0] == "a");
  CHECK(domain().lexicon->slot_sort(r.user_words[1]) == std::optional<std::string>("item"));
  r = say(env, "by");
  REQUIRE(r.user_words.size() == 1);
  CHECK(domain().lexicon->slot_sort(r.user_words[0]) == std::optional<std::string>("brand"));
  CHECK(r.reward == 0.0);
  r = say(env, "okay");
  CHECK(r.reward == 1.0);
}

TEST_CASE("same seed, same script, same episode") {
  auto a = make_env();
  auto b = make_env();
  std::vector<std::size_t> script = {a.actions().release(), act(a, "okay")};
  for (int round = 0; round < 5; ++round) {
    a.reset(42 + round);
    b.reset(42 + round);
    for (auto x : script) {
      auto ra = a.step(x);
      auto rb = b.step(x);
      CHECK(ra.user_words == rb.user_words);
      CHECK(ra.state == rb.state);
    }
    CHECK(a.context() == b.context());
  }
}

TEST_CASE("reset leaks nothing between episodes") {
  auto env = make_env();
  env.reset(5);
  say(env, "what");
  say(env, "would");
  say(env, "okay");
  auto fresh = make_env();
  env.reset(9);
  fresh.reset(9);
  for (const char* w : {"what", "would", "you", "like", "by", "okay"}) {
    auto x = say(env, w);
    auto y = say(fresh, w);
    CHECK(x.user_words == y.user_words);
    CHECK(x.reward == y.reward);
  }
  CHECK(env.context() == fresh.context());
}

TEST_CASE("environment refuses mismatched lexicon hashes") {
  const auto& d = domain();
  auto spec = d.spec;
  spec.lexicon_hash = "other";
  CHECK_THROWS_AS(Env(d.lexicon, spec, d.rules, {}), HashMismatch);
  simulator::RuleSet rules("other");
  CHECK_THROWS_AS(Env(d.lexicon, d.spec, rules, {}), HashMismatch);
}

TEST_CASE("q_update arithmetic") {
  QTable q;
  q_update(q, 3, "s", 1, 1.0, "t", true, 0.1, 0.95);
  CHECK(q["s"][1] == doctest::Approx(0.1));
  CHECK(q["s"][0] == 0.0);

  QTable z;
  q_update(z, 3, "s", 0, 0.0, "t", false, 0.1, 0.95);
  CHECK(z["s"][0] == 0.0);

  QTable h;
  h["s"] = {0.5, 0.0, 0.0};
  h["t"] = {0.2, 1.0, -1.0};
  q_update(h, 3, "s", 0, 0.0, "t", false, 0.1, 0.95);
  CHECK(h["s"][0] == doctest::Approx(0.545));
  // A terminal transition ignores the successor.
  h["s"][0] = 0.5;
  q_update(h, 3, "s", 0, 0.0, "t", true, 0.1, 0.95);
  CHECK(h["s"][0] == doctest::Approx(0.45));
}

TEST_CASE("epsilon schedule") {
  TrainConfig c;
  c.episodes = 1000;
  CHECK(c.epsilon(0) == 1.0);
  CHECK(c.epsilon(400) == doctest::Approx(0.525));
  CHECK(c.epsilon(800) == doctest::Approx(0.05));
  CHECK(c.epsilon(999) == doctest::Approx(0.05));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(TrainConfig::from_json({{"alpha", 0.0}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"gamma", 1.5}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"alhpa", 0.1}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"episodes", "many"}}), ConfigError);
  CHECK_THROWS_AS(EnvConfig::from_json({{"max_dialogue_words", 0}}), ConfigError);
  auto c = TrainConfig::from_json({{"episodes", 5}, {"seed", 3}});
  CHECK(c.episodes == 5);
  CHECK(c.alpha == 0.1);
  CHECK(TrainConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("greedy ties go to the lowest index") {
  Policy p(domain().spec, ActionSpace(std::vector<std::string>{"a", "b"}), {}, {});
  StateVector s(domain().spec.m());
  CHECK(p.greedy(s) == 0);
  p.q()[s.str()] = {0.0, 0.3, 0.3};
  CHECK(p.greedy(s) == 1);
  CHECK(p.greedy(s, [](std::size_t a) { return a != 1; }) == 2);
}

TEST_CASE("untrained policy fails") {
  const auto& d = domain();
  TrainConfig cfg;
  cfg.episodes = 0;
  auto r = train(d.lexicon, d.spec, d.rules, cfg, {});
  CHECK(r.policy.q().empty());
  CHECK(r.log.empty());
  auto st = evaluate(r.policy, d.lexicon, d.rules, 50, 1);
  REQUIRE(st.success_rate);
  CHECK(*st.success_rate <= 0.05);
}

TEST_CASE("evaluate with zero episodes leaves success undefined") {
  const auto& d = domain();
  auto st = evaluate(trained().policy, d.lexicon, d.rules, 0, 1);
  CHECK_FALSE(st.success_rate);
  CHECK(st.summary()["success_rate"].is_null());
}

TEST_CASE("training is deterministic and serializes losslessly") {
  const auto& d = domain();
  TrainConfig cfg;
  cfg.episodes = 1500;
  auto a = train(d.lexicon, d.spec, d.rules, cfg, {});
  auto b = train(d.lexicon, d.spec, d.rules, cfg, {});
  CHECK(a.policy.serialize() == b.policy.serialize());
  CHECK(log_csv(a.log) == log_csv(b.log));
  CHECK(Policy::from_json(nlohmann::json::parse(a.policy.serialize())).serialize() ==
        a.policy.serialize());
  cfg.seed = 8;
  CHECK(train(d.lexicon, d.spec, d.rules, cfg, {}).policy.serialize() != a.policy.serialize());
}

TEST_CASE("policy file validation") {
  auto j = trained().policy.to_json();
  auto bad = j;
  bad["actions"].erase(bad["actions"].size() - 1);
  CHECK_THROWS_AS(Policy::from_json(bad), LoadError);
  bad = j;
  bad["q"]["01|01"] = nlohmann::json::object();
  CHECK_THROWS_AS(Policy::from_json(bad), LoadError);
  bad = j;
  bad["lexicon_hash"] = "x";
  CHECK_THROWS_AS(Policy::from_json(bad), LoadError);
  auto p = Policy::from_json(j);
  auto other = Lexicon::from_json(nlohmann::json::parse(R"([{"word":"okay","kind":"ack","add":"[]"}])"));
  CHECK_THROWS_AS(p.check_lexicon(other), HashMismatch);
}

TEST_CASE("trained policy: log, bounds, success") {
  const auto& d = domain();
  const auto& r = trained();
  CHECK(r.log.size() == 20000);
  auto csv = log_csv(r.log);
  CHECK(csv.rfind("episode,reward,length,outcome\n", 0) == 0);
  auto [lo, hi] = r.policy.bounds();
  CHECK(lo >= -1.0);
  CHECK(hi <= 1.0 / (1.0 - 0.95));

  auto st = evaluate(r.policy, d.lexicon, d.rules, 200, 2024);
  REQUIRE(st.success_rate);
  CHECK(*st.success_rate >= 0.95);
  CHECK(st.distinct_successful_shapes >= 3);
}

TEST_CASE("trained rollouts keep the reward contract") {
  const auto& d = domain();
  const auto& policy = trained().policy;
  Env env(d.lexicon, d.spec, d.rules, {});
  std::mt19937_64 rng(17);
  env.reset(rng());
  grammar::Parser parser(d.lexicon);
  for (int i = 0; i < 300; ++i) {
    env.reset();
    auto ep = rollout(policy, env, 0.3, rng);
    int nonzero = 0;
    for (const auto& s : ep.steps) {
      double r = s.result.reward;
      CHECK((r == -1.0 || r == 0.0 || r == 1.0));
      CHECK((r == 1.0) == s.result.state.goal_reached());
      nonzero += r != 0.0;
    }
    CHECK(nonzero == 1);
    if (ep.success()) {
      auto parse = grammar::parse_dialogue(grammar::to_dialogue(ep.transcript), parser);
      CHECK(ttr::subtype_of(ttr::delexicalize(parse.final_context.grounded), d.spec.goal));
    }
  }
}
