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

#include "incdial/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "incdial/error.hpp"
#include "incdial/util.hpp"

namespace incdial {

std::string_view to_string(Speaker s) {
  switch (s) {
    case Speaker::Sys:
      return "SYS";
    case Speaker::Usr:
      return "USR";
    case Speaker::None:
      break;
  }
  return "none";
}

}  // namespace incdial

namespace incdial::grammar {

using ttr::Const;
using ttr::Field;
using ttr::MetaVar;
using ttr::PredType;
using ttr::RecordType;

std::string_view to_string(EntryKind k) {
  switch (k) {
    case EntryKind::Content:
      return "content";
    case EntryKind::Wh:
      return "wh";
    case EntryKind::Ack:
      return "ack";
    case EntryKind::Slot:
      return "slot";
  }
  return "content";
}

namespace {

bool is_word(std::string_view w) {
  if (w.empty() || !(w[0] >= 'a' && w[0] <= 'z')) return false;
  return std::all_of(w.begin(), w.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'' ||
           c == '-';
  });
}

bool is_label_or_var(std::string_view s) {
  return ttr::is_identifier(s) || ttr::is_pattern_variable(s);
}

// ------------------------------------------------------------------------
// lexicon validation

[[noreturn]] void entry_error(std::size_t index, const std::string& rule) {
  throw LoadError("lexicon entry " + std::to_string(index) + ": " + rule);
}

// Shape checks shared by pre, add and require.  `scope` holds labels
// declared outside the record (pre labels when checking add).
std::string pattern_problem(const RecordType& r,
                            std::set<std::string> scope = {}) {
  std::set<std::string> local;
  for (const auto& f : r.fields()) {
    if (!is_label_or_var(f.label)) return "bad label '" + f.label + "'";
    if (!local.insert(f.label).second)
      return "duplicate label '" + f.label + "'";
    for (const auto& a : f.dependencies())
      if (!local.count(a) && !scope.count(a))
        return "argument '" + a + "' of '" + f.label + "' is not declared earlier";
    if (f.is_pred() && f.manifest)
      return "manifest value on predicate field '" + f.label + "'";
  }
  return {};
}

EntryKind parse_kind(const std::string& s, std::size_t index) {
  if (s == "content") return EntryKind::Content;
  if (s == "wh") return EntryKind::Wh;
  if (s == "ack") return EntryKind::Ack;
  if (s == "slot") return EntryKind::Slot;
  entry_error(index, "unknown kind '" + s + "'");
}

RecordType parse_rt_member(const nlohmann::json& obj, const char* key,
                           std::size_t index) {
  if (!obj.contains(key)) return {};
  if (!obj[key].is_string())
    entry_error(index, std::string("'") + key + "' must be a record type string");
  try {
    return RecordType::parse(obj[key].get<std::string>());
  } catch (const SyntaxError& e) {
    entry_error(index, e.what());
  }
}

LexicalEntry parse_entry(const nlohmann::json& obj, std::size_t index) {
  if (!obj.is_object()) entry_error(index, "entry must be an object");
  for (const auto& [key, _] : obj.items()) {
    static const std::set<std::string> kKnown = {"word", "kind",  "sort",   "value",
                                                 "pre",  "add",   "require"};
    if (!kKnown.count(key)) entry_error(index, "unknown key '" + key + "'");
  }
  LexicalEntry e;
  if (!obj.contains("word") || !obj["word"].is_string())
    entry_error(index, "missing 'word'");
  e.word = obj["word"].get<std::string>();
  if (!is_word(e.word))
    entry_error(index, "word '" + e.word + "' is not a lowercase token");
  if (!obj.contains("kind") || !obj["kind"].is_string())
    entry_error(index, "missing 'kind'");
  e.kind = parse_kind(obj["kind"].get<std::string>(), index);
  if (!obj.contains("add")) entry_error(index, "missing 'add'");
  for (const char* key : {"sort", "value"}) {
    if (!obj.contains(key)) continue;
    if (!obj[key].is_string()) entry_error(index, std::string("'") + key + "' must be a string");
    (key[0] == 's' ? e.sort : e.value) = obj[key].get<std::string>();
  }
  e.pre = parse_rt_member(obj, "pre", index);
  e.add = parse_rt_member(obj, "add", index);
  if (obj.contains("require")) {
    if (!obj["require"].is_array())
      entry_error(index, "'require' must be a list of record types");
    for (const auto& r : obj["require"]) {
      if (!r.is_string()) entry_error(index, "'require' must be a list of record types");
      try {
        e.require.push_back(RecordType::parse(r.get<std::string>()));
      } catch (const SyntaxError& err) {
        entry_error(index, err.what());
      }
    }
  }
  return e;
}

void validate_entry(const LexicalEntry& e, std::size_t index) {
  if (auto p = pattern_problem(e.pre); !p.empty()) entry_error(index, "pre: " + p);
  std::set<std::string> pre_labels;
  for (const auto& f : e.pre.fields()) pre_labels.insert(f.label);
  if (auto p = pattern_problem(e.add, pre_labels); !p.empty())
    entry_error(index, "add: " + p);
  for (const auto& r : e.require)
    if (auto p = pattern_problem(r); !p.empty()) entry_error(index, "require: " + p);

  // A pattern variable names one field throughout the entry.
  std::map<std::string, ttr::FieldType> var_types;
  auto check_vars = [&](const RecordType& r) {
    for (const auto& f : r.fields()) {
      if (!ttr::is_pattern_variable(f.label)) continue;
      auto [it, fresh] = var_types.emplace(f.label, f.type);
      if (!fresh && it->second != f.type)
        entry_error(index, "pattern variable " + f.label + " used for different fields");
    }
  };
  check_vars(e.pre);
  check_vars(e.add);
  for (const auto& r : e.require) check_vars(r);

  std::size_t consts = 0, metavars = 0;
  for (const auto& f : e.add.fields()) {
    consts += f.has_const();
    metavars += f.has_metavar();
  }
  const bool has_slot_info = !e.sort.empty() || !e.value.empty();
  switch (e.kind) {
    case EntryKind::Slot: {
      if (!ttr::is_identifier(e.sort) || !ttr::is_identifier(e.value))
        entry_error(index, "slot entry needs identifier 'sort' and 'value'");
      if (consts != 1 || metavars != 0)
        entry_error(index, "slot entry must add exactly one constant");
      const Field* carrier = nullptr;
      for (const auto& f : e.add.fields())
        if (f.has_const()) carrier = &f;
      if (std::get<Const>(*carrier->manifest).atom != e.value)
        entry_error(index, "slot constant differs from 'value'");
      bool sorted = false;
      for (const auto& f : e.add.fields())
        if (const auto* p = std::get_if<PredType>(&f.type))
          sorted |= p->predicate == e.sort && p->args.size() == 1 &&
                    p->args[0] == carrier->label;
      if (!sorted)
        entry_error(index, "slot entry must add " + e.sort + "(" + carrier->label + ")");
      break;
    }
    case EntryKind::Wh:
      if (has_slot_info) entry_error(index, "only slot entries carry sort/value");
      if (metavars != 1) entry_error(index, "wh entry must add exactly one metavariable");
      break;
    case EntryKind::Ack:
      if (has_slot_info) entry_error(index, "only slot entries carry sort/value");
      if (!e.add.empty()) entry_error(index, "ack entry must have an empty 'add'");
      if (!e.require.empty()) entry_error(index, "ack entry must have no 'require'");
      break;
    case EntryKind::Content:
      if (has_slot_info) entry_error(index, "only slot entries carry sort/value");
      if (metavars != 0) entry_error(index, "content entry may not add metavariables");
      break;
  }
}

nlohmann::json entry_json(const LexicalEntry& e) {
  nlohmann::json j;
  j["word"] = e.word;
  j["kind"] = std::string(to_string(e.kind));
  if (e.kind == EntryKind::Slot) {
    j["sort"] = e.sort;
    j["value"] = e.value;
  }
  j["pre"] = e.pre.str();
  j["add"] = e.add.str();
  auto reqs = nlohmann::json::array();
  for (const auto& r : e.require) reqs.push_back(r.str());
  j["require"] = std::move(reqs);
  return j;
}

// ------------------------------------------------------------------------
// parsing

using Binding = std::unordered_map<std::string, std::string>;

bool bind_name(const std::string& pattern, const std::string& actual, Binding& b) {
  if (!ttr::is_pattern_variable(pattern)) return pattern == actual;
  auto it = b.find(pattern);
  if (it != b.end()) return it->second == actual;
  for (const auto& [var, label] : b)
    if (label == actual) return false;  // bindings are injective
  b.emplace(pattern, actual);
  return true;
}

bool field_matches(const Field& pat, const Field& have, Binding& b) {
  if (!bind_name(pat.label, have.label, b)) return false;
  if (const auto* s = std::get_if<ttr::BasicSort>(&pat.type)) {
    const auto* hs = std::get_if<ttr::BasicSort>(&have.type);
    if (!hs || hs->name != s->name) return false;
  } else {
    const auto& p = std::get<PredType>(pat.type);
    const auto* hp = std::get_if<PredType>(&have.type);
    if (!hp || hp->predicate != p.predicate || hp->args.size() != p.args.size())
      return false;
    for (std::size_t i = 0; i < p.args.size(); ++i)
      if (!bind_name(p.args[i], hp->args[i], b)) return false;
  }
  if (pat.has_const())
    return have.has_const() && *have.manifest == *pat.manifest;
  if (pat.has_metavar()) return have.has_metavar();
  return true;
}

// Every binding under which `pattern` matches fields of `sem`, in sem order.
void unify(const RecordType& pattern, const RecordType& sem, std::size_t i,
           Binding& b, std::vector<Binding>& out) {
  if (i == pattern.size()) {
    out.push_back(b);
    return;
  }
  const Field& pat = pattern.fields()[i];
  for (const auto& have : sem.fields()) {
    Binding trial = b;
    if (field_matches(pat, have, trial)) unify(pattern, sem, i + 1, trial, out);
  }
}

std::string instantiate_name(const std::string& name, Binding& b, unsigned& fresh) {
  if (!ttr::is_pattern_variable(name)) return name;
  auto it = b.find(name);
  if (it != b.end()) return it->second;
  std::string label = "g" + std::to_string(++fresh);
  b.emplace(name, label);
  return label;
}

RecordType instantiate(const RecordType& tmpl, Binding& b, unsigned& fresh) {
  std::vector<Field> out;
  for (const auto& f : tmpl.fields()) {
    Field g = f;
    g.label = instantiate_name(f.label, b, fresh);
    if (auto* p = std::get_if<PredType>(&g.type))
      for (auto& a : p->args) a = instantiate_name(a, b, fresh);
    if (g.has_metavar()) g.manifest = MetaVar{"q" + std::to_string(++fresh)};
    out.push_back(std::move(g));
  }
  return RecordType(std::move(out));
}

// Merges one field into sem.  Existing fields may only be refined:
// no manifest -> manifest, metavariable -> constant.  Grounded fields are
// never changed.
bool merge_field(std::vector<Field>& sem, const Field& f, const RecordType& grounded) {
  for (auto& have : sem) {
    if (have.label != f.label) continue;
    if (have.type != f.type) return false;
    if (!f.manifest || have.manifest == f.manifest) return true;
    if (grounded.has(f.label)) return false;
    if (!have.manifest || (have.has_metavar() && f.has_const())) {
      have.manifest = f.manifest;
      return true;
    }
    return false;
  }
  for (const auto& a : f.dependencies())
    if (std::none_of(sem.begin(), sem.end(),
                     [&](const Field& g) { return g.label == a; }))
      return false;
  sem.push_back(f);
  return true;
}

void discharge(ParseState& s) {
  std::erase_if(s.reqs, [&](const RecordType& r) { return ttr::subtype_of(s.sem, r); });
}

std::optional<ParseState> apply(const ParseState& state, const LexicalEntry& e,
                                Binding binding, const RecordType& grounded) {
  ParseState next = state;
  RecordType add = instantiate(e.add, binding, next.fresh);
  std::vector<Field> sem = next.sem.fields();
  for (const auto& f : add.fields())
    if (!merge_field(sem, f, grounded)) return std::nullopt;
  next.sem = RecordType(std::move(sem));
  if (!ttr::well_formed(next.sem)) return std::nullopt;
  for (const auto& r : e.require) {
    RecordType req = instantiate(r, binding, next.fresh);
    if (!ttr::well_formed(req)) return std::nullopt;
    if (std::none_of(next.reqs.begin(), next.reqs.end(),
                     [&](const RecordType& q) { return ttr::equivalent(q, req); }))
      next.reqs.push_back(std::move(req));
  }
  discharge(next);
  return next;
}

void order_beam(std::vector<ParseState>& live, std::size_t width) {
  std::stable_sort(live.begin(), live.end(),
                   [](const ParseState& a, const ParseState& b) {
                     if (a.reqs.size() != b.reqs.size())
                       return a.reqs.size() < b.reqs.size();
                     return ttr::count_metavars(a.sem) < ttr::count_metavars(b.sem);
                   });
  if (live.size() > width) live.resize(width);
}

}  // namespace

// --------------------------------------------------------------------------

Lexicon Lexicon::from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw LoadError("lexicon must be a JSON list of entries");
  if (doc.empty()) throw LoadError("lexicon has no entries");
  Lexicon lex;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    LexicalEntry e = parse_entry(doc[i], i);
    validate_entry(e, i);
    auto& slots = lex.index_[e.word];
    if (slots.empty()) lex.vocabulary_.push_back(e.word);
    slots.push_back(lex.entries_.size());
    lex.entries_.push_back(std::move(e));
  }
  lex.hash_ = sha256_hex(lex.to_json().dump());
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  auto doc = read_json(path);
  try {
    return from_json(doc);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

std::vector<const LexicalEntry*> Lexicon::entries_for(std::string_view word) const {
  std::vector<const LexicalEntry*> out;
  auto it = index_.find(word);
  if (it == index_.end()) return out;
  for (auto i : it->second) out.push_back(&entries_[i]);
  return out;
}

bool Lexicon::contains(std::string_view word) const { return index_.find(word) != index_.end(); }

std::optional<std::string> Lexicon::slot_sort(std::string_view word) const {
  for (const auto* e : entries_for(word))
    if (e->kind == EntryKind::Slot) return e->sort;
  return std::nullopt;
}

nlohmann::json Lexicon::to_json() const {
  auto out = nlohmann::json::array();
  for (const auto& e : entries_) out.push_back(entry_json(e));
  return out;
}

// --------------------------------------------------------------------------

const ParseState& best_state(const DialogueContext& ctx) {
  if (ctx.live.empty()) throw UsageError("dialogue context has no live parse state");
  return ctx.live.front();
}

const RecordType& grounded_semantics(const DialogueContext& ctx) { return ctx.grounded; }

RecordType current_semantics(const DialogueContext& ctx) {
  const RecordType& sem = best_state(ctx).sem;
  std::vector<std::string> fresh;
  for (const auto& f : sem.fields())
    if (!ctx.grounded.has(f.label)) fresh.push_back(f.label);
  return ttr::dependency_closure(sem, fresh);
}

bool proposition_complete(const DialogueContext& ctx) {
  const auto& best = best_state(ctx);
  return best.reqs.empty() && !best.sem.empty();
}

DialogueContext ground(const DialogueContext& ctx, GroundTrigger trigger) {
  if (ctx.live.empty()) return ctx;
  if (trigger == GroundTrigger::ImplicitSpeakerChange && !proposition_complete(ctx))
    return ctx;

  const RecordType& sem = best_state(ctx).sem;
  std::unordered_set<std::string> promotable;
  std::vector<Field> added;
  for (const auto& f : sem.fields()) {
    if (f.has_metavar()) continue;
    const auto& deps = f.dependencies();
    if (!std::all_of(deps.begin(), deps.end(),
                     [&](const std::string& a) { return promotable.count(a) > 0; }))
      continue;
    promotable.insert(f.label);
    if (!ctx.grounded.has(f.label)) added.push_back(f);
  }
  if (added.empty()) return ctx;

  DialogueContext out = ctx;
  for (auto& f : added) out.grounded.push_back(f);
  out.live.clear();
  for (const auto& s : ctx.live) {
    std::vector<Field> fields = s.sem.fields();
    bool ok = true;
    for (const auto& f : added) ok = ok && merge_field(fields, f, ctx.grounded);
    if (!ok) continue;
    ParseState rebased = s;
    rebased.sem = RecordType(std::move(fields));
    discharge(rebased);
    out.live.push_back(std::move(rebased));
  }
  return out;
}

Parser::Parser(std::shared_ptr<const Lexicon> lexicon, std::size_t beam_width)
    : lexicon_(std::move(lexicon)), beam_width_(beam_width) {
  if (!lexicon_) throw UsageError("parser needs a lexicon");
  if (beam_width_ == 0) throw UsageError("beam width must be positive");
}

DialogueContext Parser::start() const {
  DialogueContext ctx;
  ctx.live.push_back(ParseState{});
  ctx.lexicon_hash = lexicon_->hash();
  return ctx;
}

std::optional<DialogueContext> Parser::try_advance(const DialogueContext& ctx,
                                                   std::string_view word,
                                                   Speaker speaker) const {
  if (ctx.live.empty()) return std::nullopt;
  DialogueContext next = ctx;
  if (speaker != ctx.last_speaker)
    next = ground(next, GroundTrigger::ImplicitSpeakerChange);

  std::vector<ParseState> successors;
  bool acked = false;
  for (const auto* entry : lexicon_->entries_for(word)) {
    for (const auto& state : next.live) {
      // An open question cannot be acknowledged.
      if (entry->kind == EntryKind::Ack && ttr::count_metavars(state.sem) > 0) continue;
      std::vector<Binding> bindings;
      Binding empty;
      unify(entry->pre, state.sem, 0, empty, bindings);
      for (auto& b : bindings) {
        auto succ = apply(state, *entry, std::move(b), next.grounded);
        if (!succ) continue;
        if (std::find(successors.begin(), successors.end(), *succ) != successors.end())
          continue;
        successors.push_back(std::move(*succ));
        acked |= entry->kind == EntryKind::Ack;
      }
    }
  }
  if (successors.empty()) return std::nullopt;

  order_beam(successors, beam_width_);
  next.live = std::move(successors);
  next.last_speaker = speaker;
  next.transcript.push_back({speaker, std::string(word)});
  if (acked) next = ground(next, GroundTrigger::ExplicitAck);
  return next;
}

DialogueContext Parser::advance(const DialogueContext& ctx, std::string_view word,
                                Speaker speaker) const {
  auto next = try_advance(ctx, word, speaker);
  if (!next) throw Ungrammatical(std::string(word));
  return std::move(*next);
}

// --------------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view utterance) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(utterance)};
  std::string tok;
  while (ss >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    auto punct = [](unsigned char c) { return std::ispunct(c) != 0; };
    auto first = std::find_if_not(tok.begin(), tok.end(), punct);
    auto last = std::find_if_not(tok.rbegin(), tok.rend(), punct).base();
    if (first < last) out.emplace_back(first, last);
  }
  return out;
}

std::vector<Dialogue> parse_corpus(std::string_view text) {
  std::vector<Dialogue> out;
  Dialogue current;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) {
      flush();
      continue;
    }
    std::string_view body(line);
    body.remove_prefix(start);
    if (body.front() == '#') continue;
    Turn t;
    if (body.starts_with("SYS:"))
      t.speaker = Speaker::Sys;
    else if (body.starts_with("USR:"))
      t.speaker = Speaker::Usr;
    else
      throw SyntaxError("corpus line " + std::to_string(lineno) +
                        ": expected 'SYS:' or 'USR:'");
    body.remove_prefix(4);
    auto b = body.find_first_not_of(" \t");
    t.utterance = b == std::string_view::npos ? "" : std::string(body.substr(b));
    t.tokens = tokenize(t.utterance);
    if (t.tokens.empty())
      throw SyntaxError("corpus line " + std::to_string(lineno) + ": empty utterance");
    current.push_back(std::move(t));
  }
  flush();
  return out;
}

std::vector<Dialogue> load_corpus(const std::filesystem::path& path) {
  try {
    return parse_corpus(read_file(path));
  } catch (const SyntaxError& e) {
    throw SyntaxError(path.string() + ": " + e.what());
  }
}

DialogueParse parse_dialogue(const Dialogue& dialogue, const Parser& parser,
                             std::size_t dialogue_index) {
  DialogueParse out;
  DialogueContext ctx = parser.start();
  Speaker previous = Speaker::None;
  for (std::size_t t = 0; t < dialogue.size(); ++t) {
    const Turn& turn = dialogue[t];
    if (turn.speaker == Speaker::Usr && previous != Speaker::Usr)
      out.onsets.push_back({t, ctx});
    for (const auto& w : turn.tokens) {
      auto next = parser.try_advance(ctx, w, turn.speaker);
      if (!next) throw ParseFailure(dialogue_index, t, w);
      ctx = std::move(*next);
    }
    previous = turn.speaker;
  }
  out.final_context = ground(ctx, GroundTrigger::DialogueEnd);
  return out;
}

DialogueContext replay(std::span<const TranscriptWord> words, const Parser& parser) {
  DialogueContext ctx = parser.start();
  for (const auto& w : words) ctx = parser.advance(ctx, w.word, w.speaker);
  return ctx;
}

Dialogue to_dialogue(std::span<const TranscriptWord> words) {
  Dialogue out;
  for (const auto& w : words) {
    if (out.empty() || out.back().speaker != w.speaker) {
      out.push_back(Turn{w.speaker, {}, {}});
    } else {
      out.back().utterance += ' ';
    }
    out.back().utterance += w.word;
    out.back().tokens.push_back(w.word);
  }
  return out;
}

}  // namespace incdial::grammar
