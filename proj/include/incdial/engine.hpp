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


// Live conversation between a human (USR) and a trained policy (SYS).
//
// The terminal chat and the network service both drive this class, so a
// given word sequence evolves the context identically in either.  Events
// are the service's wire messages.

#ifndef INCDIAL_ENGINE_HPP
#define INCDIAL_ENGINE_HPP

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "incdial/grammar.hpp"
#include "incdial/learner.hpp"
#include "incdial/simulator.hpp"

namespace incdial::engine {

// Everything a session needs, loaded once and shared read-only.
struct Agent {
  std::shared_ptr<const grammar::Lexicon> lexicon;
  learner::Policy policy;
  simulator::RuleSet rules;
  grammar::Parser parser;
  std::string policy_hash;

  // Throws HashMismatch unless lexicon, policy and rules agree.
  static std::shared_ptr<const Agent> create(std::shared_ptr<const grammar::Lexicon> lexicon,
                                             learner::Policy policy, simulator::RuleSet rules);
};

enum class Status { Active, Success, Failed };

std::string_view to_string(Status s);

using Events = std::vector<nlohmann::json>;

nlohmann::json error_event(std::string_view code, std::string_view message);

class Session {
 public:
  Session(std::shared_ptr<const Agent> agent, std::string id);

  const std::string& id() const { return id_; }
  Status status() const { return status_; }
  bool driving() const { return driving_; }
  const grammar::DialogueContext& context() const { return ctx_; }
  learner::StateVector state() const;

  // {"type":"state", bits, grounded, current, status, ...}; the opening
  // state also lists the features behind the bits.
  nlohmann::json state_event(bool with_features = false) const;

  // A human word.  Interrupts a system turn in progress; an unknown or
  // ungrammatical word leaves the context untouched and yields an error.
  Events user_word(std::string_view text);

  // Hands the turn to the system.  The policy then speaks one word per
  // drive_step until it releases, reaches the goal, hits a turn boundary
  // seen in the corpus, completes a proposition, or is interrupted.  On an
  // empty context the system takes the initiative rather than releasing
  // straight back.
  Events begin_drive();
  Events drive_step();
  void interrupt() { driving_ = false; }

 private:
  Events end(bool success, std::string_view reason);

  std::shared_ptr<const Agent> agent_;
  std::string id_;
  grammar::DialogueContext ctx_;
  Status status_ = Status::Active;
  bool driving_ = false;
  bool first_step_ = false;
  learner::Table table_ = learner::Table::Main;
  std::size_t turn_words_ = 0;
  std::size_t total_words_ = 0;
};

}  // namespace incdial::engine

#endif  // INCDIAL_ENGINE_HPP
