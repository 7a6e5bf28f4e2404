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

#include "incdial/induction.hpp"

#include <algorithm>

#include "incdial/error.hpp"

namespace incdial::induction {

using ttr::RecordType;

namespace {

// A constant-carrying field is a slot of the sort named by the unary
// predicate over it (x:ent=lg with brand(x) is a brand slot); failing that,
// of its basic sort.
std::string slot_sort_of(const RecordType& r, const ttr::Field& carrier) {
  for (const auto& f : r.fields())
    if (const auto* p = std::get_if<ttr::PredType>(&f.type))
      if (p->args.size() == 1 && p->args[0] == carrier.label) return p->predicate;
  return std::get<ttr::BasicSort>(carrier.type).name;
}

RecordType parse_checked(const std::string& text) {
  RecordType r = RecordType::parse(text);
  if (!ttr::well_formed(r)) throw LoadError("malformed record type " + text);
  return r;
}

}  // namespace

nlohmann::json GoalSpec::to_json() const {
  nlohmann::json j;
  j["lexicon_hash"] = lexicon_hash;
  j["goal"] = goal.str();
  auto fs = nlohmann::json::array();
  for (const auto& f : features) fs.push_back(f.str());
  j["features"] = std::move(fs);
  j["m"] = m();
  j["slot_sorts"] = slot_sorts;
  return j;
}

GoalSpec GoalSpec::from_json(const nlohmann::json& j) {
  try {
    GoalSpec s;
    s.lexicon_hash = j.at("lexicon_hash").get<std::string>();
    s.goal = parse_checked(j.at("goal").get<std::string>());
    for (const auto& f : j.at("features")) s.features.push_back(parse_checked(f.get<std::string>()));
    for (const auto& sort : j.at("slot_sorts")) s.slot_sorts.insert(sort.get<std::string>());
    if (s.features.empty()) throw LoadError("goal spec has no features");
    if (j.contains("m") && j["m"].get<std::size_t>() != s.m())
      throw LoadError("goal spec 'm' disagrees with its feature list");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("goal spec: ") + e.what());
  }
}

bool StateVector::goal_reached() const {
  if (bits_.empty()) return false;
  return std::all_of(bits_.begin(), bits_.begin() + static_cast<std::ptrdiff_t>(m()),
                     [](std::uint8_t b) { return b != 0; });
}

std::string StateVector::str() const {
  std::string out;
  out.reserve(bits_.size() + 1);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (i == m()) out += '|';
    out += bits_[i] ? '1' : '0';
  }
  return out;
}

StateVector StateVector::parse(std::string_view text) {
  auto bar = text.find('|');
  if (bar == std::string_view::npos || bar * 2 + 1 != text.size())
    throw SyntaxError("state vector must look like 0101|0011: " + std::string(text));
  StateVector v(bar);
  std::size_t k = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (i == bar) continue;
    if (text[i] != '0' && text[i] != '1')
      throw SyntaxError("state vector must be binary: " + std::string(text));
    v.set(k++, text[i] == '1');
  }
  return v;
}

Induction induce(std::span<const grammar::Dialogue> corpus, const grammar::Parser& parser) {
  if (corpus.empty()) throw InductionError("empty corpus");
  std::vector<RecordType> finals;
  Induction out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      finals.push_back(grammar::parse_dialogue(corpus[i], parser, i).final_context.grounded);
    } catch (const ParseFailure& e) {
      throw InductionError(std::string("cannot induce from dialogue ") + std::to_string(i + 1) +
                           ": " + e.what());
    }
    for (const auto& f : finals.back().fields())
      if (f.has_const()) out.spec.slot_sorts.insert(slot_sort_of(finals.back(), f));
  }
  out.spec.goal = ttr::delexicalize(ttr::mcs(finals));
  out.spec.features = ttr::decompose(out.spec.goal);
  out.spec.lexicon_hash = parser.lexicon().hash();
  if (out.spec.features.empty())
    throw InductionError("the corpus has no common grounded content to track");
  if (out.spec.m() < 2)
    out.warnings.push_back("only " + std::to_string(out.spec.m()) +
                           " feature induced; the corpus dialogues share little content");
  return out;
}

StateVector encode(const grammar::DialogueContext& ctx, const GoalSpec& spec) {
  if (ctx.lexicon_hash != spec.lexicon_hash)
    throw HashMismatch("encode", spec.lexicon_hash, ctx.lexicon_hash);
  const std::size_t m = spec.m();
  StateVector v(m);
  RecordType grounded = ttr::delexicalize(ctx.grounded);
  // grounded plus current is the best state's whole record type.
  RecordType all = ctx.live.empty() ? grounded : ttr::delexicalize(grammar::best_state(ctx).sem);
  for (std::size_t i = 0; i < m; ++i) {
    v.set(i, ttr::subtype_of(grounded, spec.features[i]));
    v.set(m + i, ttr::subtype_of(all, spec.features[i]));
  }
  return v;
}

}  // namespace incdial::induction
