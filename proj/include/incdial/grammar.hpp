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

// Word-by-word incremental parser over a declarative lexicon.
//
// A parse state is a record type plus a set of pending requirements.  Each
// lexical entry has a precondition pattern that must unify with the state,
// a list of fields merged into it, and requirements registered on success.
// A requirement is discharged as soon as the state is a subtype of it; an
// utterance is complete when no requirement is pending.
//
// Both speakers extend one shared DialogueContext.  Content becomes
// grounded on an acknowledgement word, on a speaker change after a
// complete proposition, and at the end of a dialogue.

#ifndef INCDIAL_GRAMMAR_HPP
#define INCDIAL_GRAMMAR_HPP

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "incdial/ttr.hpp"

namespace incdial {

enum class Speaker { None, Sys, Usr };

std::string_view to_string(Speaker s);

}  // namespace incdial

namespace incdial::grammar {

enum class EntryKind { Content, Wh, Ack, Slot };

std::string_view to_string(EntryKind k);

struct LexicalEntry {
  std::string word;
  EntryKind kind = EntryKind::Content;
  std::string sort;   // slot entries only
  std::string value;  // slot entries only
  ttr::RecordType pre;
  ttr::RecordType add;
  std::vector<ttr::RecordType> require;
};

class Lexicon {
 public:
  // Validates every entry; throws LoadError naming the entry index and the
  // rule it breaks, SyntaxError on unreadable record types.
  static Lexicon from_json(const nlohmann::json& doc);
  static Lexicon load(const std::filesystem::path& path);

  const std::vector<LexicalEntry>& entries() const { return entries_; }
  std::vector<const LexicalEntry*> entries_for(std::string_view word) const;
  bool contains(std::string_view word) const;

  // Distinct words in order of first appearance.
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

  // Sort of the first slot entry for `word`, if any.
  std::optional<std::string> slot_sort(std::string_view word) const;

  // SHA-256 over the canonical serialization.
  const std::string& hash() const { return hash_; }

  nlohmann::json to_json() const;

 private:
  std::vector<LexicalEntry> entries_;
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> index_;
  std::string hash_;
};

struct ParseState {
  ttr::RecordType sem;
  std::vector<ttr::RecordType> reqs;
  unsigned fresh = 0;

  bool operator==(const ParseState&) const = default;
};

struct TranscriptWord {
  Speaker speaker = Speaker::None;
  std::string word;

  bool operator==(const TranscriptWord&) const = default;
};

struct DialogueContext {
  ttr::RecordType grounded;
  // Parse beam, best state first.
  std::vector<ParseState> live;
  Speaker last_speaker = Speaker::None;
  std::vector<TranscriptWord> transcript;
  std::string lexicon_hash;

  bool operator==(const DialogueContext&) const = default;
};

enum class GroundTrigger { ExplicitAck, ImplicitSpeakerChange, DialogueEnd };

// Promotes the metavariable-free part of the best state into the grounded
// semantics.  The implicit trigger is a no-op unless the best state holds a
// complete proposition.
DialogueContext ground(const DialogueContext& ctx, GroundTrigger trigger);

const ParseState& best_state(const DialogueContext& ctx);
const ttr::RecordType& grounded_semantics(const DialogueContext& ctx);

// Fields of the best state that are not grounded yet, closed under
// dependencies so the result is itself a well-formed record type.
ttr::RecordType current_semantics(const DialogueContext& ctx);

bool proposition_complete(const DialogueContext& ctx);

class Parser {
 public:
  explicit Parser(std::shared_ptr<const Lexicon> lexicon,
                  std::size_t beam_width = 32);

  DialogueContext start() const;

  // Throws Ungrammatical when no successor state exists.
  DialogueContext advance(const DialogueContext& ctx, std::string_view word,
                          Speaker speaker) const;
  std::optional<DialogueContext> try_advance(const DialogueContext& ctx,
                                             std::string_view word,
                                             Speaker speaker) const;

  const Lexicon& lexicon() const { return *lexicon_; }
  const std::shared_ptr<const Lexicon>& lexicon_ptr() const { return lexicon_; }
  std::size_t beam_width() const { return beam_width_; }

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  std::size_t beam_width_;
};

// --- corpus --------------------------------------------------------------

struct Turn {
  Speaker speaker = Speaker::None;
  std::string utterance;
  std::vector<std::string> tokens;
};

using Dialogue = std::vector<Turn>;

// Whitespace split, lowercase, strip leading/trailing punctuation.
std::vector<std::string> tokenize(std::string_view utterance);

// Lines "SYS: ..." / "USR: ...", blank lines between dialogues, '#' starts a
// comment line.  Throws SyntaxError with the line number.
std::vector<Dialogue> parse_corpus(std::string_view text);
std::vector<Dialogue> load_corpus(const std::filesystem::path& path);

// Context recorded just before the first word of a user turn that follows a
// system turn (or opens the dialogue).
struct Onset {
  std::size_t turn = 0;
  DialogueContext before;
};

struct DialogueParse {
  DialogueContext final_context;
  std::vector<Onset> onsets;
};

// Replays every word, then grounds at dialogue end.  Throws ParseFailure.
DialogueParse parse_dialogue(const Dialogue& dialogue, const Parser& parser,
                             std::size_t dialogue_index = 0);

// Replays a word-level transcript without end-of-dialogue grounding.
DialogueContext replay(std::span<const TranscriptWord> words,
                       const Parser& parser);

// Groups consecutive same-speaker words into turns.
Dialogue to_dialogue(std::span<const TranscriptWord> words);

}  // namespace incdial::grammar

#endif  // INCDIAL_GRAMMAR_HPP
