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

#include "ttr_oracle.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace oracle {

using incdial::ttr::BasicSort;
using incdial::ttr::Const;
using incdial::ttr::Field;
using incdial::ttr::MetaVar;
using incdial::ttr::PredType;
using incdial::ttr::RecordType;

namespace {

std::string field_key(const Field& f) {
  Field g = f;
  if (g.has_metavar()) g.manifest = MetaVar{"_"};
  return g.str();
}

std::vector<std::optional<incdial::ttr::Value>> weakenings(const Field& f) {
  std::vector<std::optional<incdial::ttr::Value>> out = {std::nullopt};
  if (f.is_pred()) return out;
  out.push_back(MetaVar{"w_" + f.label});
  if (f.has_const()) out.push_back(f.manifest);
  return out;
}

// Field options for one label given the other labels present.
std::vector<Field> options(const Universe& u, const std::string& label,
                           const std::vector<std::string>& others) {
  std::vector<Field> out;
  for (const auto& s : u.sorts) {
    out.push_back({label, BasicSort{s}, std::nullopt});
    for (const auto& c : u.consts) out.push_back({label, BasicSort{s}, Const{c}});
    if (u.metavars) out.push_back({label, BasicSort{s}, MetaVar{"m" + label}});
  }
  for (const auto& p : u.predicates) {
    for (const auto& a : others) out.push_back({label, PredType{p, {a}}, std::nullopt});
    for (const auto& a : others)
      for (const auto& b : others)
        if (a != b) out.push_back({label, PredType{p, {a, b}}, std::nullopt});
  }
  return out;
}

// Topological order of the chosen fields, smallest label first among ready
// ones; empty when a dependency is missing or cyclic.
std::optional<std::vector<Field>> order(std::vector<Field> fields) {
  std::vector<Field> out;
  std::set<std::string> placed;
  while (!fields.empty()) {
    auto ready = std::find_if(fields.begin(), fields.end(), [&](const Field& f) {
      const auto& d = f.dependencies();
      return std::all_of(d.begin(), d.end(),
                         [&](const std::string& a) { return placed.count(a) > 0; });
    });
    if (ready == fields.end()) return std::nullopt;
    placed.insert(ready->label);
    out.push_back(*ready);
    fields.erase(ready);
  }
  return out;
}

}  // namespace

std::string canonical(const RecordType& r) {
  std::vector<std::string> keys;
  for (const auto& f : r.fields()) keys.push_back(field_key(f));
  std::sort(keys.begin(), keys.end());
  std::string out = "{";
  for (const auto& k : keys) out += k + ";";
  return out + "}";
}

std::string canonical_modulo_metavars(const RecordType& r) {
  std::vector<Field> fs = r.fields();
  for (auto& f : fs)
    if (f.has_metavar()) f.manifest.reset();
  return canonical(RecordType(std::move(fs)));
}

std::unordered_map<std::string, RecordType> supertypes(const RecordType& r) {
  std::unordered_map<std::string, RecordType> out;
  std::vector<Field> chosen;
  const auto& fs = r.fields();
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == fs.size()) {
      RecordType cand(chosen);
      if (incdial::ttr::well_formed(cand)) out.emplace(canonical(cand), cand);
      return;
    }
    go(i + 1);  // drop
    for (const auto& m : weakenings(fs[i])) {
      Field f = fs[i];
      f.manifest = m;
      chosen.push_back(f);
      go(i + 1);
      chosen.pop_back();
    }
  };
  go(0);
  return out;
}

bool subtype(const RecordType& r1, const RecordType& r2) {
  return supertypes(r1).count(canonical(r2)) > 0;
}

std::vector<RecordType> enumerate(const Universe& u) {
  std::vector<RecordType> out;
  std::set<std::string> seen;
  const std::size_t n = u.labels.size();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) labels.push_back(u.labels[i]);
    if (labels.size() > u.max_fields) continue;
    std::vector<std::vector<Field>> opts;
    for (const auto& l : labels) {
      std::vector<std::string> others;
      for (const auto& o : labels)
        if (o != l) others.push_back(o);
      opts.push_back(options(u, l, others));
    }
    std::vector<Field> pick;
    std::function<void(std::size_t)> go = [&](std::size_t i) {
      if (i == opts.size()) {
        auto ordered = order(pick);
        if (!ordered) return;
        RecordType r(std::move(*ordered));
        if (incdial::ttr::well_formed(r) && seen.insert(canonical(r)).second)
          out.push_back(std::move(r));
        return;
      }
      for (const auto& f : opts[i]) {
        pick.push_back(f);
        go(i + 1);
        pick.pop_back();
      }
    };
    go(0);
  }
  return out;
}

RecordType random_rt(const Universe& u, std::mt19937_64& rng) {
  for (;;) {
    std::vector<std::string> labels = u.labels;
    std::shuffle(labels.begin(), labels.end(), rng);
    std::size_t k = std::uniform_int_distribution<std::size_t>(0, u.max_fields)(rng);
    labels.resize(std::min(k, labels.size()));
    std::vector<Field> pick;
    for (const auto& l : labels) {
      std::vector<std::string> others;
      for (const auto& o : labels)
        if (o != l) others.push_back(o);
      auto opts = options(u, l, others);
      pick.push_back(opts[std::uniform_int_distribution<std::size_t>(0, opts.size() - 1)(rng)]);
    }
    std::shuffle(pick.begin(), pick.end(), rng);
    auto ordered = order(pick);
    if (!ordered) continue;
    RecordType r(std::move(*ordered));
    if (incdial::ttr::well_formed(r)) return r;
  }
}

}  // namespace oracle
