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

#include <random>

#include "incdial/error.hpp"
#include "incdial/grammar.hpp"
#include "incdial/util.hpp"

using namespace incdial;
using namespace incdial::grammar;
using ttr::RecordType;

namespace {

const std::string kData = INCDIAL_DATA_DIR;

std::shared_ptr<const Lexicon> shipped_lexicon() {
  static auto lex = std::make_shared<const Lexicon>(Lexicon::load(kData + "/lexicon.json"));
  return lex;
}

Parser shipped_parser() { return Parser(shipped_lexicon()); }

DialogueContext say(const Parser& p, DialogueContext ctx, std::string_view words, Speaker s) {
  for (const auto& w : tokenize(words)) ctx = p.advance(ctx, w, s);
  return ctx;
}

RecordType rt(const char* text) { return RecordType::parse(text); }

nlohmann::json one_entry(const char* entry) {
  return nlohmann::json::array({nlohmann::json::parse(entry)});
}

}  // namespace

TEST_CASE("shipped lexicon covers the domain vocabulary") {
  auto lex = shipped_lexicon();
  for (const char* w : {"what", "would", "you", "i", "like", "a", "an", "phone", "tablet",
                        "computer", "by", "which", "brand", "apple", "lg", "samsung",
                        "google", "okay"})
    CHECK(lex->contains(w));
  CHECK(lex->vocabulary().size() >= 17);
  CHECK(lex->hash().size() == 64);
  CHECK(lex->slot_sort("lg") == std::optional<std::string>("brand"));
  CHECK(lex->slot_sort("phone") == std::optional<std::string>("item"));
  CHECK_FALSE(lex->slot_sort("by"));
  // Stable hash across loads.
  CHECK(Lexicon::load(kData + "/lexicon.json").hash() == lex->hash());
}

TEST_CASE("lexicon validation errors") {
  CHECK_THROWS_AS(Lexicon::from_json(nlohmann::json::array()), LoadError);
  CHECK_THROWS_WITH_AS(
      Lexicon::from_json(one_entry(R"({"word":"okay","kind":"ack","add":"[x:ent]"})")),
      doctest::Contains("entry 0"), LoadError);
  CHECK_THROWS_AS(Lexicon::from_json(one_entry(R"({"word":"Okay","kind":"ack","add":"[]"})")),
                  LoadError);
  CHECK_THROWS_AS(Lexicon::from_json(one_entry(R"({"word":"what","kind":"wh","add":"[x:ent]"})")),
                  LoadError);
  CHECK_THROWS_AS(Lexicon::from_json(one_entry(
                      R"({"word":"lg","kind":"slot","sort":"brand","value":"lg","add":"[b:ent=lg]"})")),
                  LoadError);
  CHECK_THROWS_AS(Lexicon::from_json(one_entry(
                      R"({"word":"by","kind":"content","add":"[pby:by(x,b)]"})")),
                  LoadError);
  CHECK_THROWS_AS(Lexicon::from_json(one_entry(R"({"word":"x","kind":"verb","add":"[]"})")),
                  LoadError);
  CHECK_THROWS_AS(Lexicon::from_json(one_entry(
                      R"({"word":"x","kind":"content","pre":"[$v:ent]","add":"[$v:ev]"})")),
                  LoadError);
  CHECK_THROWS_AS(Lexicon::from_json(one_entry(R"({"word":"x","kind":"content","add":"[x:ent"})")),
                  LoadError);
}

TEST_CASE("tokenize") {
  CHECK(tokenize("okay.") == std::vector<std::string>{"okay"});
  CHECK(tokenize("...by?") == std::vector<std::string>{"by"});
  CHECK(tokenize("  What would  you like? ") ==
        std::vector<std::string>{"what", "would", "you", "like"});
  CHECK(tokenize("you like...?") == std::vector<std::string>{"you", "like"});
  CHECK(tokenize("...").empty());
}

TEST_CASE("corpus parsing") {
  auto ds = parse_corpus("# c\nSYS: hi there\nUSR: yes\n\n\nUSR: again\n");
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].size() == 2);
  CHECK(ds[0][0].speaker == Speaker::Sys);
  CHECK(ds[0][1].tokens == std::vector<std::string>{"yes"});
  CHECK(ds[1][0].speaker == Speaker::Usr);
  CHECK_THROWS_AS(parse_corpus("BOT: hi\n"), SyntaxError);
  CHECK(parse_corpus("").empty());
}

TEST_CASE("advance examples") {
  auto p = shipped_parser();
  auto ctx = p.advance(p.start(), "what", Speaker::Sys);
  CHECK(count_metavars(best_state(ctx).sem) == 1);
  CHECK_FALSE(proposition_complete(ctx));

  auto before = say(p, p.start(), "what would", Speaker::Sys);
  CHECK_THROWS_AS(p.advance(before, "zebra", Speaker::Usr), Ungrammatical);
  CHECK_FALSE(p.try_advance(before, "zebra", Speaker::Usr));

  // Word order: the article needs a verb, the verb needs a subject.
  CHECK_FALSE(p.try_advance(p.start(), "a", Speaker::Sys));
  CHECK_FALSE(p.try_advance(p.start(), "like", Speaker::Sys));
  CHECK(p.try_advance(say(p, p.start(), "you", Speaker::Sys), "like", Speaker::Sys));

  // "... a phone" then "...by?" leaves a brand requirement pending.
  auto phone = say(p, p.start(), "you like a phone", Speaker::Sys);
  CHECK(proposition_complete(phone));
  auto by = p.advance(phone, "by", Speaker::Sys);
  CHECK_FALSE(proposition_complete(by));
  REQUIRE(best_state(by).reqs.size() == 1);
  CHECK(equivalent(best_state(by).reqs[0], rt("[b:ent, pbrand:brand(b)]")));
}

TEST_CASE("proposition_complete") {
  auto p = shipped_parser();
  CHECK_FALSE(proposition_complete(p.start()));
  CHECK_FALSE(proposition_complete(say(p, p.start(), "what would", Speaker::Sys)));
  CHECK(proposition_complete(say(p, p.start(), "what would you like", Speaker::Sys)));
}

TEST_CASE("current and grounded semantics") {
  auto p = shipped_parser();
  auto ctx = p.start();
  CHECK(current_semantics(ctx).empty());
  CHECK(grounded_semantics(ctx).empty());

  ctx = say(p, ctx, "what would you like", Speaker::Sys);
  ctx = say(p, ctx, "a phone", Speaker::Usr);
  ctx = say(p, ctx, "by which brand", Speaker::Sys);
  auto cur = current_semantics(ctx);
  const auto* brand = cur.find("pbrand");
  REQUIRE(brand);
  const auto* b = cur.find("b");
  REQUIRE(b);
  CHECK(b->has_metavar());
  CHECK(well_formed(cur));

  auto acked = p.advance(say(p, p.start(), "i would like a phone", Speaker::Usr), "okay",
                         Speaker::Sys);
  CHECK(current_semantics(acked).empty());
}

TEST_CASE("grounding") {
  auto p = shipped_parser();
  // Empty pending content: identity.
  auto empty = p.start();
  CHECK(ground(empty, GroundTrigger::ExplicitAck) == empty);

  auto ctx = say(p, p.start(), "i would like an lg phone", Speaker::Usr);
  CHECK(grounded_semantics(ctx).empty());
  ctx = p.advance(ctx, "okay", Speaker::Sys);
  for (const char* l : {"plike", "pitem", "pbrand", "pby"}) CHECK(ctx.grounded.has(l));
  CHECK(ctx.grounded.find("b")->has_const());

  // Implicit grounding: an open question is not grounded, its answer is.
  ctx = say(p, p.start(), "what would you like", Speaker::Sys);
  ctx = p.advance(ctx, "a", Speaker::Usr);
  CHECK(ctx.grounded.has("plike"));
  CHECK_FALSE(ctx.grounded.has("x"));
  CHECK_FALSE(ctx.grounded.has("pobj"));
  ctx = say(p, ctx, "phone", Speaker::Usr);
  ctx = p.advance(ctx, "by", Speaker::Sys);
  CHECK(ctx.grounded.find("x")->has_const());
  CHECK(ctx.grounded.has("pobj"));

  // An open question cannot be acknowledged.
  auto q = say(p, p.start(), "what would you like", Speaker::Sys);
  CHECK_THROWS_AS(p.advance(q, "okay", Speaker::Usr), Ungrammatical);
}

TEST_CASE("parse_dialogue on the training dialogue") {
  auto p = shipped_parser();
  auto corpus = load_corpus(kData + "/corpus.txt");
  REQUIRE(corpus.size() == 1);
  auto parsed = parse_dialogue(corpus[0], p);
  const auto& g = parsed.final_context.grounded;
  REQUIRE(g.find("b"));
  CHECK(g.find("b")->str() == "b:ent=apple");
  CHECK(g.find("x")->str() == "x:ent=phone");
  CHECK(well_formed(g));
  REQUIRE(parsed.onsets.size() == 2);
  CHECK(parsed.onsets[0].turn == 1);
  CHECK(parsed.onsets[1].turn == 3);

  auto empty = parse_dialogue({}, p);
  CHECK(empty.final_context.grounded.empty());
  CHECK(empty.onsets.empty());

  auto bad = parse_corpus("SYS: what would you like\nUSR: a zebra\n");
  try {
    parse_dialogue(bad[0], p, 4);
    FAIL("expected a parse failure");
  } catch (const ParseFailure& e) {
    CHECK(e.dialogue() == 4);
    CHECK(e.turn() == 1);
    CHECK(e.word() == "zebra");
  }
}

TEST_CASE("variants reach the training dialogue's grounded semantics") {
  auto p = shipped_parser();
  auto train = parse_dialogue(load_corpus(kData + "/corpus.txt")[0], p);
  auto goal = delexicalize(train.final_context.grounded);
  auto variants = load_corpus(kData + "/variants.txt");
  CHECK(variants.size() == 8);
  for (std::size_t i = 0; i < variants.size(); ++i) {
    CAPTURE(i);
    auto parsed = parse_dialogue(variants[i], p, i);
    CHECK(equivalent(delexicalize(parsed.final_context.grounded), goal));
  }
  // "a phone by LG" and the training dialogue differ only in slot values.
  auto v = parse_dialogue(variants[5], p);
  CHECK_FALSE(equivalent(v.final_context.grounded, train.final_context.grounded));
}

TEST_CASE("pattern variables bind context labels and mint fresh ones") {
  auto lex = std::make_shared<const Lexicon>(Lexicon::from_json(nlohmann::json::parse(R"([
    {"word":"thing","kind":"content","add":"[$n:ent]"},
    {"word":"red","kind":"content","pre":"[$t:ent]","add":"[$c:red($t)]"},
    {"word":"it","kind":"content","pre":"[$t:ent]","add":"[]","require":["[$t:ent, $p:red($t)]"]}
  ])")));
  Parser p(lex);
  auto ctx = say(p, p.start(), "thing", Speaker::Sys);
  CHECK(best_state(ctx).sem.str() == "[g1:ent]");
  ctx = p.advance(ctx, "red", Speaker::Sys);
  CHECK(best_state(ctx).sem.str() == "[g1:ent, g2:red(g1)]");
  // Two things: "red" is ambiguous and the beam keeps both readings.
  auto two = say(p, p.start(), "thing thing red", Speaker::Sys);
  CHECK(two.live.size() == 2);
  CHECK_THROWS_AS(p.advance(p.start(), "red", Speaker::Sys), Ungrammatical);
}

TEST_CASE("advance is deterministic and monotone over replays") {
  auto p = shipped_parser();
  auto corpus = load_corpus(kData + "/variants.txt");
  for (const auto& d : corpus) {
    auto ctx = p.start();
    auto again = p.start();
    for (const auto& turn : d) {
      for (const auto& w : turn.tokens) {
        auto next = p.advance(ctx, w, turn.speaker);
        again = p.advance(again, w, turn.speaker);
        CHECK(next == again);
        // grounded never shrinks or changes
        for (const auto& f : ctx.grounded.fields()) {
          const auto* g = next.grounded.find(f.label);
          REQUIRE(g);
          CHECK(*g == f);
        }
        CHECK_FALSE(count_metavars(next.grounded));
        // a resolved metavariable never reverts
        for (const auto& f : best_state(ctx).sem.fields())
          if (f.has_const()) CHECK(best_state(next).sem.find(f.label)->has_const());
        ctx = std::move(next);
      }
    }
  }
}

TEST_CASE("random insertions never corrupt parse states") {
  auto p = shipped_parser();
  auto train = load_corpus(kData + "/corpus.txt")[0];
  std::vector<TranscriptWord> words;
  for (const auto& t : train)
    for (const auto& w : t.tokens) words.push_back({t.speaker, w});
  const auto& vocab = p.lexicon().vocabulary();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    auto script = words;
    auto pos = std::uniform_int_distribution<std::size_t>(0, script.size())(rng);
    auto w = vocab[std::uniform_int_distribution<std::size_t>(0, vocab.size() - 1)(rng)];
    auto who = trial % 2 ? Speaker::Sys : Speaker::Usr;
    script.insert(script.begin() + static_cast<std::ptrdiff_t>(pos), {who, w});
    auto ctx = p.start();
    for (const auto& tw : script) {
      auto next = p.try_advance(ctx, tw.word, tw.speaker);
      if (!next) break;
      ctx = std::move(*next);
      CHECK(well_formed(ctx.grounded));
      for (const auto& s : ctx.live) CHECK(well_formed(s.sem));
    }
  }
}

TEST_CASE("re-segmenting at complete boundaries preserves the outcome") {
  auto p = shipped_parser();
  auto corpus = load_corpus(kData + "/variants.txt");
  auto train = load_corpus(kData + "/corpus.txt");
  corpus.insert(corpus.end(), train.begin(), train.end());
  std::size_t splits = 0;
  for (const auto& d : corpus) {
    std::vector<TranscriptWord> words;
    for (const auto& t : d)
      for (const auto& w : t.tokens) words.push_back({t.speaker, w});
    auto reference = delexicalize(parse_dialogue(d, p).final_context.grounded);
    auto ctx = p.start();
    for (std::size_t k = 0; k + 1 < words.size(); ++k) {
      ctx = p.advance(ctx, words[k].word, words[k].speaker);
      if (!proposition_complete(ctx) || words[k + 1].speaker != words[k].speaker) continue;
      // Hand the rest of this turn to the other participant.
      auto alt = words;
      const Speaker from = words[k].speaker;
      const Speaker to = from == Speaker::Sys ? Speaker::Usr : Speaker::Sys;
      for (std::size_t j = k + 1; j < alt.size() && words[j].speaker == from; ++j)
        alt[j].speaker = to;
      auto parsed = parse_dialogue(to_dialogue(alt), p);
      CHECK(equivalent(delexicalize(parsed.final_context.grounded), reference));
      ++splits;
    }
  }
  CHECK(splits > 0);
}
