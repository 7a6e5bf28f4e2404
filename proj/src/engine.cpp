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


#include "incdial/engine.hpp"

#include <algorithm>
#include <cctype>

#include "incdial/error.hpp"
#include "incdial/util.hpp"

namespace incdial::engine {

std::shared_ptr<const Agent> Agent::create(std::shared_ptr<const grammar::Lexicon> lexicon,
                                           learner::Policy policy, simulator::RuleSet rules) {
  policy.check_lexicon(*lexicon);
  if (rules.lexicon_hash() != lexicon->hash())
    throw HashMismatch("rule set", lexicon->hash(), rules.lexicon_hash());
  if (policy.actions().words() != lexicon->vocabulary())
    throw LoadError("policy actions do not match the lexicon vocabulary");
  auto hash = sha256_hex(policy.serialize());
  grammar::Parser parser(lexicon);
  return std::make_shared<const Agent>(
      Agent{std::move(lexicon), std::move(policy), std::move(rules), std::move(parser), std::move(hash)});
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Active: return "active";
    case Status::Success: return "success";
    case Status::Failed: return "failed";
  }
  return "active";
}

nlohmann::json error_event(std::string_view code, std::string_view message) {
  return {{"type", "error"}, {"code", code}, {"message", message}};
}

Session::Session(std::shared_ptr<const Agent> agent, std::string id)
    : agent_(std::move(agent)), id_(std::move(id)), ctx_(agent_->parser.start()) {}

learner::StateVector Session::state() const { return induction::encode(ctx_, agent_->policy.spec()); }

nlohmann::json Session::state_event(bool with_features) const {
  nlohmann::json j = {{"type", "state"},
                      {"session", id_},
                      {"bits", state().str()},
                      {"grounded", ctx_.grounded.str()},
                      {"current", grammar::current_semantics(ctx_).str()},
                      {"status", to_string(status_)},
                      {"driving", driving_}};
  if (with_features) {
    auto fs = nlohmann::json::array();
    for (const auto& f : agent_->policy.spec().features) fs.push_back(f.str());
    j["features"] = std::move(fs);
    j["m"] = agent_->policy.spec().m();
  }
  return j;
}

Events Session::end(bool success, std::string_view reason) {
  status_ = success ? Status::Success : Status::Failed;
  driving_ = false;
  return {state_event(), {{"type", "end"}, {"success", success}, {"reason", reason}}};
}

Events Session::user_word(std::string_view text) {
  if (status_ != Status::Active) return {error_event("inactive", "the session has ended")};
  std::string word(text);
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!agent_->lexicon->contains(word))
    return {error_event("unknown_word", "'" + word + "' is not in the vocabulary")};
  auto next = agent_->parser.try_advance(ctx_, word, Speaker::Usr);
  if (!next) return {error_event("ungrammatical", "'" + word + "' does not fit here")};
  driving_ = false;
  ctx_ = std::move(*next);
  turn_words_ = 0;
  ++total_words_;
  if (state().goal_reached()) return end(true, "goal");
  if (total_words_ > agent_->policy.env_config().max_dialogue_words) return end(false, "lengthy");
  return {state_event()};
}

Events Session::begin_drive() {
  if (status_ != Status::Active) return {error_event("inactive", "the session has ended")};
  if (state().goal_reached()) return end(true, "goal");
  if (ctx_.last_speaker == Speaker::Usr && !grammar::current_semantics(ctx_).empty() &&
      !grammar::proposition_complete(ctx_))
    return {error_event("mid_utterance", "finish the utterance before handing over the turn")};
  // Handed the turn before anything was established: the human is not
  // leading, so the system follows the table trained without user
  // initiative for the rest of the session.
  if (ctx_.grounded.empty() && grammar::current_semantics(ctx_).empty())
    table_ = learner::Table::SilentUser;
  driving_ = true;
  first_step_ = true;
  turn_words_ = 0;
  return {};
}

Events Session::drive_step() {
  if (status_ != Status::Active || !driving_) return {};
  const auto& policy = agent_->policy;
  const auto& actions = policy.actions();
  // Taking the initiative means saying something: neither releasing nor a
  // word that leaves the semantics empty.
  const bool initiative = first_step_ && grammar::current_semantics(ctx_).empty();
  const bool may_release = !initiative;
  first_step_ = false;

  std::vector<std::optional<grammar::DialogueContext>> next(actions.size());
  for (std::size_t a = 0; a < actions.words().size(); ++a) {
    next[a] = agent_->parser.try_advance(ctx_, actions.name(a), Speaker::Sys);
    if (initiative && next[a] && grammar::current_semantics(*next[a]).empty()) next[a].reset();
  }
  auto allowed = [&](std::size_t a) { return actions.is_release(a) ? may_release : next[a].has_value(); };
  bool any = std::any_of(next.begin(), next.end(), [](const auto& c) { return c.has_value(); });
  std::size_t a = any || may_release ? policy.greedy(state(), allowed, table_) : actions.release();

  if (actions.is_release(a)) {
    driving_ = false;
    return {state_event()};
  }
  ctx_ = std::move(*next[a]);
  ++turn_words_;
  ++total_words_;
  Events out = {{{"type", "system_word"}, {"text", actions.name(a)}}};
  if (state().goal_reached()) {
    auto tail = end(true, "goal");
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }
  if (total_words_ > policy.env_config().max_dialogue_words) {
    auto tail = end(false, "lengthy");
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }
  // The system yields at the corpus's turn boundaries and once it has said
  // something complete.
  if (simulator::match(agent_->rules, ctx_) || grammar::proposition_complete(ctx_) ||
      turn_words_ >= policy.env_config().max_words_per_system_turn)
    driving_ = false;
  out.push_back(state_event());
  return out;
}

}  // namespace incdial::engine
