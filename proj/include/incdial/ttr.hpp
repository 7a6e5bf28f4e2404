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

// Record types: the semantic representation shared by the parser, the MDP
// state encoder and the user simulator.
//
// Text syntax (round-trips through parse/str):
//
//    [x:ent=apple, e:ev, q:ent=?q1, p:brand(x), r:by(q,x)]
//
// A field is either a basic sort, optionally made manifest with a constant
// or a metavariable, or a predicate over labels declared earlier in the
// same record type.  Pattern variables ($x) are accepted by the parser in
// label and argument positions; well_formed() rejects them.

#ifndef INCDIAL_TTR_HPP
#define INCDIAL_TTR_HPP

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace incdial::ttr {

struct BasicSort {
  std::string name;
  auto operator<=>(const BasicSort&) const = default;
};

struct PredType {
  std::string predicate;
  std::vector<std::string> args;
  auto operator<=>(const PredType&) const = default;
};

using FieldType = std::variant<BasicSort, PredType>;

struct Const {
  std::string atom;
  auto operator<=>(const Const&) const = default;
};

// Underspecified value left by a wh-word, resolved by a later constant.
struct MetaVar {
  std::string id;
  auto operator<=>(const MetaVar&) const = default;
};

using Value = std::variant<Const, MetaVar>;

struct Field {
  std::string label;
  FieldType type;
  std::optional<Value> manifest;

  bool is_basic() const { return std::holds_alternative<BasicSort>(type); }
  bool is_pred() const { return std::holds_alternative<PredType>(type); }
  bool has_const() const {
    return manifest && std::holds_alternative<Const>(*manifest);
  }
  bool has_metavar() const {
    return manifest && std::holds_alternative<MetaVar>(*manifest);
  }
  // Labels this field's type depends on (empty for basic sorts).
  const std::vector<std::string>& dependencies() const;

  std::string str() const;

  auto operator<=>(const Field&) const = default;
};

class RecordType {
 public:
  RecordType() = default;
  explicit RecordType(std::vector<Field> fields) : fields_(std::move(fields)) {}

  // Throws SyntaxError.  Does not check well-formedness.
  static RecordType parse(std::string_view text);

  const std::vector<Field>& fields() const { return fields_; }
  bool empty() const { return fields_.empty(); }
  std::size_t size() const { return fields_.size(); }

  const Field* find(std::string_view label) const;
  bool has(std::string_view label) const { return find(label) != nullptr; }

  void push_back(Field f) { fields_.push_back(std::move(f)); }

  std::string str() const;

  // Structural (order-sensitive) equality; use equivalent() for the
  // order-insensitive relation.
  bool operator==(const RecordType&) const = default;

 private:
  std::vector<Field> fields_;
};

bool is_identifier(std::string_view s);
bool is_pattern_variable(std::string_view s);

bool well_formed(const RecordType& r);

// r1 is a subtype of r2: every field of r2 occurs in r1 under the same label
// with the same type, and constants in r2 are matched by the same constant.
// Throws ValidationError on malformed input.
bool subtype_of(const RecordType& r1, const RecordType& r2);

bool equivalent(const RecordType& r1, const RecordType& r2);

// Maximally specific common supertype.  Throws std::invalid_argument on an
// empty list and ValidationError on malformed members.
RecordType mcs(std::span<const RecordType> rs);

RecordType delexicalize(const RecordType& r);

using FeatureSet = std::vector<RecordType>;

// One feature per predicate field (its dependency closure) plus one per
// basic-sort field that no predicate refers to, deduplicated by equivalence.
FeatureSet decompose(const RecordType& r);

// Fields of `r` listed in `labels` together with everything they depend on,
// in the original field order.
RecordType dependency_closure(const RecordType& r,
                              std::span<const std::string> labels);

// Number of metavariable manifests in r.
std::size_t count_metavars(const RecordType& r);

}  // namespace incdial::ttr

#endif  // INCDIAL_TTR_HPP
