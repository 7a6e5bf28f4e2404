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

#ifndef INCDIAL_ERROR_HPP
#define INCDIAL_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace incdial {

// Root of every error the library throws.  The CLI maps the subclasses
// onto exit codes (config = 2, data = 3, anything else = 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed record type handed to an algebra operation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad text syntax for record types, lexicons, corpora, or JSON documents.
class SyntaxError : public Error {
 public:
  using Error::Error;
};

// A data file parsed but broke a schema rule.
class LoadError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// No parse state survives the word.
class Ungrammatical : public Error {
 public:
  explicit Ungrammatical(std::string word)
      : Error("ungrammatical(" + word + ")"), word_(std::move(word)) {}
  const std::string& word() const { return word_; }

 private:
  std::string word_;
};

// A corpus dialogue could not be replayed.
class ParseFailure : public Error {
 public:
  ParseFailure(std::size_t dialogue, std::size_t turn, std::string word)
      : Error("parse failure in dialogue " + std::to_string(dialogue + 1) +
              ", turn " + std::to_string(turn + 1) + ", word '" + word + "'"),
        dialogue_(dialogue),
        turn_(turn),
        word_(std::move(word)) {}

  std::size_t dialogue() const { return dialogue_; }
  std::size_t turn() const { return turn_; }
  const std::string& word() const { return word_; }

 private:
  std::size_t dialogue_;
  std::size_t turn_;
  std::string word_;
};

class InductionError : public Error {
 public:
  using Error::Error;
};

// Lexicon hash of an artifact does not match the one in use.
class HashMismatch : public Error {
 public:
  HashMismatch(const std::string& what, const std::string& expected,
               const std::string& actual)
      : Error(what + ": lexicon hash mismatch (expected " + expected +
              ", got " + actual + ")") {}
};

class RealizationError : public Error {
 public:
  using Error::Error;
};

// API called out of protocol, e.g. stepping a finished episode.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace incdial

#endif  // INCDIAL_ERROR_HPP
