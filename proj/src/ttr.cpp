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

#include "incdial/ttr.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "incdial/error.hpp"

namespace incdial::ttr {

namespace {

const std::vector<std::string> kNoDependencies;

bool ident_char(char c, bool first) {
  if (c >= 'a' && c <= 'z') return true;
  if (first) return false;
  return (c >= '0' && c <= '9') || c == '_';
}

// Recursive-descent reader for the bracket syntax.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  RecordType record_type() {
    expect('[');
    std::vector<Field> fields;
    skip_ws();
    if (peek() == ']') {
      ++pos_;
    } else {
      for (;;) {
        fields.push_back(field());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(']');
        break;
      }
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return RecordType(std::move(fields));
  }

 private:
  Field field() {
    Field f;
    f.label = name(/*allow_var=*/true);
    expect(':');
    std::string head = name(/*allow_var=*/false);
    skip_ws();
    if (peek() == '(') {
      ++pos_;
      PredType p{std::move(head), {}};
      skip_ws();
      if (peek() == ')') fail("predicate with no arguments");
      for (;;) {
        p.args.push_back(name(/*allow_var=*/true));
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
      f.type = std::move(p);
    } else {
      f.type = BasicSort{std::move(head)};
    }
    skip_ws();
    if (peek() == '=') {
      ++pos_;
      skip_ws();
      if (peek() == '?') {
        ++pos_;
        f.manifest = MetaVar{name(/*allow_var=*/false)};
      } else {
        f.manifest = Const{name(/*allow_var=*/false)};
      }
    }
    return f;
  }

  std::string name(bool allow_var) {
    skip_ws();
    std::size_t start = pos_;
    if (allow_var && peek() == '$') ++pos_;
    if (!ident_char(peek(), true)) fail("expected identifier");
    while (pos_ < text_.size() && ident_char(text_[pos_], false)) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw SyntaxError("record type syntax: " + why + " at offset " +
                      std::to_string(pos_) + " in \"" + std::string(text_) +
                      "\"");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool same_type(const Field& a, const Field& b) { return a.type == b.type; }

void require_well_formed(const RecordType& r) {
  if (!well_formed(r))
    throw ValidationError("malformed record type " + r.str());
}

}  // namespace

const std::vector<std::string>& Field::dependencies() const {
  if (const auto* p = std::get_if<PredType>(&type)) return p->args;
  return kNoDependencies;
}

std::string Field::str() const {
  std::string out = label + ":";
  if (const auto* s = std::get_if<BasicSort>(&type)) {
    out += s->name;
  } else {
    const auto& p = std::get<PredType>(type);
    out += p.predicate + "(";
    for (std::size_t i = 0; i < p.args.size(); ++i) {
      if (i) out += ",";
      out += p.args[i];
    }
    out += ")";
  }
  if (manifest) {
    if (const auto* c = std::get_if<Const>(&*manifest))
      out += "=" + c->atom;
    else
      out += "=?" + std::get<MetaVar>(*manifest).id;
  }
  return out;
}

RecordType RecordType::parse(std::string_view text) {
  return Reader(text).record_type();
}

const Field* RecordType::find(std::string_view label) const {
  for (const auto& f : fields_)
    if (f.label == label) return &f;
  return nullptr;
}

std::string RecordType::str() const {
  std::string out = "[";
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (i) out += ", ";
    out += fields_[i].str();
  }
  return out + "]";
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !ident_char(s[0], true)) return false;
  return std::all_of(s.begin() + 1, s.end(),
                     [](char c) { return ident_char(c, false); });
}

bool is_pattern_variable(std::string_view s) {
  return s.size() > 1 && s[0] == '$' && is_identifier(s.substr(1));
}

bool well_formed(const RecordType& r) {
  std::unordered_set<std::string> declared;
  std::unordered_set<std::string> metavars;
  for (const auto& f : r.fields()) {
    if (!is_identifier(f.label) || declared.count(f.label)) return false;
    if (const auto* s = std::get_if<BasicSort>(&f.type)) {
      if (!is_identifier(s->name)) return false;
    } else {
      const auto& p = std::get<PredType>(f.type);
      if (!is_identifier(p.predicate) || p.args.empty()) return false;
      for (const auto& a : p.args)
        if (!declared.count(a)) return false;
      if (f.manifest) return false;
    }
    if (f.manifest) {
      if (const auto* c = std::get_if<Const>(&*f.manifest)) {
        if (!is_identifier(c->atom)) return false;
      } else {
        const auto& id = std::get<MetaVar>(*f.manifest).id;
        if (!is_identifier(id) || !metavars.insert(id).second) return false;
      }
    }
    declared.insert(f.label);
  }
  return true;
}

bool subtype_of(const RecordType& r1, const RecordType& r2) {
  require_well_formed(r1);
  require_well_formed(r2);
  for (const auto& want : r2.fields()) {
    const Field* have = r1.find(want.label);
    if (!have || !same_type(*have, want)) return false;
    if (want.has_const() && (!have->has_const() || *have->manifest != *want.manifest))
      return false;
  }
  return true;
}

bool equivalent(const RecordType& r1, const RecordType& r2) {
  return subtype_of(r1, r2) && subtype_of(r2, r1);
}

RecordType mcs(std::span<const RecordType> rs) {
  if (rs.empty()) throw std::invalid_argument("mcs of an empty list");
  for (const auto& r : rs) require_well_formed(r);

  std::vector<Field> kept;
  for (const auto& f : rs.front().fields()) {
    bool shared = true;
    bool same_const = f.has_const();
    for (const auto& other : rs.subspan(1)) {
      const Field* g = other.find(f.label);
      if (!g || !same_type(*g, f)) {
        shared = false;
        break;
      }
      if (same_const && (!g->has_const() || *g->manifest != *f.manifest)) same_const = false;
    }
    if (!shared) continue;
    Field out{f.label, f.type, std::nullopt};
    if (same_const) out.manifest = f.manifest;
    kept.push_back(std::move(out));
  }

  // Dropping a field can orphan a predicate that referred to it.
  for (bool changed = true; changed;) {
    changed = false;
    std::unordered_set<std::string> present;
    for (const auto& f : kept) present.insert(f.label);
    auto orphan = [&](const Field& f) {
      return std::any_of(f.dependencies().begin(), f.dependencies().end(),
                         [&](const std::string& a) { return !present.count(a); });
    };
    auto it = std::remove_if(kept.begin(), kept.end(), orphan);
    if (it != kept.end()) {
      kept.erase(it, kept.end());
      changed = true;
    }
  }
  return RecordType(std::move(kept));
}

RecordType delexicalize(const RecordType& r) {
  std::vector<Field> out = r.fields();
  for (auto& f : out) f.manifest.reset();
  return RecordType(std::move(out));
}

RecordType dependency_closure(const RecordType& r,
                              std::span<const std::string> labels) {
  std::set<std::string> wanted(labels.begin(), labels.end());
  // Arguments precede their users, so one backward sweep closes the set.
  const auto& fs = r.fields();
  for (auto it = fs.rbegin(); it != fs.rend(); ++it)
    if (wanted.count(it->label))
      for (const auto& a : it->dependencies()) wanted.insert(a);
  std::vector<Field> out;
  for (const auto& f : fs)
    if (wanted.count(f.label)) out.push_back(f);
  return RecordType(std::move(out));
}

FeatureSet decompose(const RecordType& r) {
  std::unordered_set<std::string> referenced;
  for (const auto& f : r.fields())
    for (const auto& a : f.dependencies()) referenced.insert(a);

  FeatureSet features;
  auto add = [&](RecordType feature) {
    for (const auto& existing : features)
      if (equivalent(existing, feature)) return;
    features.push_back(std::move(feature));
  };
  for (const auto& f : r.fields()) {
    if (f.is_pred()) {
      const std::string label = f.label;
      add(dependency_closure(r, std::span<const std::string>(&label, 1)));
    } else if (!referenced.count(f.label)) {
      add(RecordType({f}));
    }
  }
  return features;
}

std::size_t count_metavars(const RecordType& r) {
  return static_cast<std::size_t>(std::count_if(
      r.fields().begin(), r.fields().end(),
      [](const Field& f) { return f.has_metavar(); }));
}

}  // namespace incdial::ttr
