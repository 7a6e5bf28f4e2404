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

// MDP state space construction from an unannotated corpus.
//
// The goal is the delexicalized maximally specific common supertype of the
// corpus's final grounded contexts; its atomic features become the bits of
// the state vector, once for grounded content and once for content still
// being built.

#ifndef INCDIAL_INDUCTION_HPP
#define INCDIAL_INDUCTION_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "incdial/grammar.hpp"
#include "incdial/ttr.hpp"

namespace incdial::induction {

struct GoalSpec {
  ttr::RecordType goal;
  ttr::FeatureSet features;
  std::set<std::string> slot_sorts;
  std::string lexicon_hash;

  std::size_t m() const { return features.size(); }

  nlohmann::json to_json() const;
  static GoalSpec from_json(const nlohmann::json& j);
};

class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t m) : bits_(2 * m, 0) {}

  std::size_t m() const { return bits_.size() / 2; }
  std::size_t size() const { return bits_.size(); }

  bool grounded(std::size_t i) const { return bits_[i] != 0; }
  bool current(std::size_t i) const { return bits_[m() + i] != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  // Every grounded bit is 1.
  bool goal_reached() const;

  // "1010|0110"
  std::string str() const;
  static StateVector parse(std::string_view text);

  bool operator==(const StateVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct Induction {
  GoalSpec spec;
  std::vector<std::string> warnings;
};

// Throws InductionError naming the dialogue that fails to parse.
Induction induce(std::span<const grammar::Dialogue> corpus, const grammar::Parser& parser);

// Throws HashMismatch when ctx and spec come from different lexicons.
StateVector encode(const grammar::DialogueContext& ctx, const GoalSpec& spec);

}  // namespace incdial::induction

#endif  // INCDIAL_INDUCTION_HPP
