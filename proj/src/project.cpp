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


#include "incdial/project.hpp"

#include <algorithm>
#include <sstream>

#include "incdial/error.hpp"
#include "incdial/util.hpp"

namespace incdial::project {

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

fs::path required_file(const nlohmann::json& j, const char* key, const fs::path& base) {
  if (!j.contains(key) || !j[key].is_string())
    throw ConfigError(std::string("config: '") + key + "' must name a file");
  auto path = resolve(base, j[key].get<std::string>());
  if (!fs::is_regular_file(path))
    throw ConfigError(std::string("config: ") + key + " file not found: " + path.string());
  return path;
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(where) + ": '" + key + "' has the wrong type");
  }
}

}  // namespace

ProjectConfig ProjectConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> known = {"corpus", "lexicon", "augmentation", "out", "env",
                                              "train", "evaluation", "serve"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");

  ProjectConfig c;
  c.lexicon = required_file(j, "lexicon", base_dir);
  c.corpus = required_file(j, "corpus", base_dir);
  if (j.contains("augmentation") && !j["augmentation"].is_null())
    c.augmentation = required_file(j, "augmentation", base_dir);
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw ConfigError("config: 'out' must be a path");
    c.out = resolve(base_dir, j["out"].get<std::string>());
  } else {
    c.out = resolve(base_dir, "out");
  }
  if (j.contains("env")) c.env = learner::EnvConfig::from_json(j["env"]);
  if (j.contains("train")) c.train = learner::TrainConfig::from_json(j["train"]);
  if (j.contains("evaluation")) {
    const auto& e = j["evaluation"];
    read_key(e, "episodes", c.evaluation.episodes, "evaluation");
    read_key(e, "seed", c.evaluation.seed, "evaluation");
  }
  if (j.contains("serve")) {
    const auto& s = j["serve"];
    read_key(s, "host", c.serve.host, "serve");
    read_key(s, "port", c.serve.port, "serve");
    read_key(s, "delay_ms", c.serve.delay_ms, "serve");
    if (s.contains("static_dir") && !s["static_dir"].is_null()) {
      std::string dir;
      read_key(s, "static_dir", dir, "serve");
      c.serve.static_dir = resolve(base_dir, dir);
    }
  }
  return c;
}

ProjectConfig ProjectConfig::load(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = read_json(path);
  } catch (const SyntaxError& e) {
    throw ConfigError(e.what());
  }
  return from_json(j, fs::absolute(path).parent_path());
}

std::shared_ptr<const grammar::Lexicon> load_lexicon(const ProjectConfig& cfg) {
  return std::make_shared<const grammar::Lexicon>(grammar::Lexicon::load(cfg.lexicon));
}

Artifacts induce(const ProjectConfig& cfg) {
  Artifacts a;
  a.lexicon = load_lexicon(cfg);
  grammar::Parser parser(a.lexicon);
  auto corpus = grammar::load_corpus(cfg.corpus);
  auto ind = induction::induce(corpus, parser);
  a.spec = std::move(ind.spec);
  a.warnings = std::move(ind.warnings);
  a.rules = simulator::extract_rules(corpus, parser, a.spec);
  if (cfg.augmentation) simulator::augment(a.rules, *cfg.augmentation, *a.lexicon, a.spec);
  return a;
}

fs::path goalspec_path(const ProjectConfig& cfg) { return cfg.out / "goalspec.json"; }
fs::path rules_path(const ProjectConfig& cfg) { return cfg.out / "rules.json"; }
fs::path policy_path(const ProjectConfig& cfg) { return cfg.out / "policy.json"; }

void write_artifacts(const Artifacts& a, const ProjectConfig& cfg) {
  write_file(goalspec_path(cfg), a.spec.to_json().dump(2) + "\n");
  write_file(rules_path(cfg), a.rules.to_json().dump(2) + "\n");
}

std::optional<Artifacts> load_artifacts(const ProjectConfig& cfg) {
  if (!fs::exists(goalspec_path(cfg)) || !fs::exists(rules_path(cfg))) return std::nullopt;
  Artifacts a;
  a.lexicon = load_lexicon(cfg);
  a.spec = induction::GoalSpec::from_json(read_json(goalspec_path(cfg)));
  a.rules = simulator::RuleSet::from_json(read_json(rules_path(cfg)));
  const auto& hash = a.lexicon->hash();
  if (a.spec.lexicon_hash != hash)
    throw HashMismatch(goalspec_path(cfg).string(), hash, a.spec.lexicon_hash);
  if (a.rules.lexicon_hash() != hash)
    throw HashMismatch(rules_path(cfg).string(), hash, a.rules.lexicon_hash());
  return a;
}

learner::Policy load_policy(const ProjectConfig& cfg, const grammar::Lexicon& lexicon) {
  auto policy = learner::Policy::from_json(read_json(policy_path(cfg)));
  policy.check_lexicon(lexicon);
  return policy;
}

std::string gloss(const ttr::RecordType& feature) {
  std::string out;
  for (const auto& f : feature.fields()) {
    const auto* p = std::get_if<ttr::PredType>(&f.type);
    if (!p) continue;
    if (!out.empty()) out += ", ";
    out += p->predicate + "(";
    for (std::size_t i = 0; i < p->args.size(); ++i) out += (i ? "," : "") + p->args[i];
    out += ")";
  }
  if (out.empty() && !feature.empty()) {
    const auto& f = feature.fields().front();
    out = f.label + " is an " + std::get<ttr::BasicSort>(f.type).name;
  }
  return out;
}

std::string describe(const Artifacts& a) {
  std::ostringstream os;
  os << "m = " << a.spec.m() << " features\n";
  for (std::size_t i = 0; i < a.spec.m(); ++i)
    os << "  phi" << i + 1 << "  " << gloss(a.spec.features[i]) << "  " << a.spec.features[i].str()
       << "\n";
  os << "slot sorts: ";
  bool first = true;
  for (const auto& s : a.spec.slot_sorts) {
    os << (first ? "" : ", ") << s;
    first = false;
  }
  os << "\nslot inventory:\n";
  auto inv = simulator::SlotInventory::from_lexicon(*a.lexicon);
  for (const auto& [sort, fillers] : inv.sorts()) {
    os << "  " << sort << ":";
    for (const auto& f : fillers) os << " " << f.word;
    os << "\n";
  }
  os << "simulator rules: " << a.rules.size() << "\n";
  for (const auto& r : a.rules.rules()) {
    os << "  " << (r.initiative() ? "(user initiative)" : r.trigger.str()) << "\n";
    for (const auto& t : r.templates) os << "    -> " << t.str() << "\n";
  }
  for (const auto& w : a.warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::string delexicalized_shape(const std::vector<grammar::TranscriptWord>& words,
                                const grammar::Lexicon& lexicon,
                                const std::set<std::string>& slot_sorts) {
  std::string out;
  Speaker last = Speaker::None;
  for (const auto& w : words) {
    if (w.speaker != last) {
      if (!out.empty()) out += " / ";
      out += std::string(to_string(w.speaker)) + ":";
      last = w.speaker;
    }
    auto sort = lexicon.slot_sort(w.word);
    out += " " + ((sort && slot_sorts.count(*sort)) ? "<" + *sort + ">" : w.word);
  }
  return out;
}

VariantsReport variants(const learner::Policy& policy, std::shared_ptr<const grammar::Lexicon> lexicon,
                        const simulator::RuleSet& rules, std::size_t n, std::uint64_t seed) {
  policy.check_lexicon(*lexicon);
  auto silent_cfg = policy.env_config();
  silent_cfg.user_initiative = false;
  learner::Env open_env(lexicon, policy.spec(), rules, policy.env_config());
  learner::Env silent_env(lexicon, policy.spec(), rules, silent_cfg);
  std::mt19937_64 rng(seed);
  open_env.reset(rng());
  silent_env.reset(rng());

  VariantsReport rep;
  rep.n = n;
  rep.seed = seed;
  std::map<std::string, ShapeGroup> groups;
  for (std::size_t i = 0; i < n; ++i) {
    const bool silent = (i % 4) >= 2;
    const double epsilon = (i % 2) ? 0.2 : 0.0;
    auto& env = silent ? silent_env : open_env;
    env.reset();
    auto ep = learner::rollout(policy, env, epsilon, rng,
                               silent ? learner::Table::SilentUser : learner::Table::Main);
    ++rep.outcomes[std::string(learner::to_string(ep.outcome))];
    if (!ep.success()) continue;
    auto shape = delexicalized_shape(ep.transcript, *lexicon, policy.spec().slot_sorts);
    auto& g = groups[shape];
    g.shape = shape;
    ++g.count;
    g.transcripts.insert(learner::transcript_string(ep.transcript));
    for (const auto& w : ep.transcript)
      if (auto sort = lexicon->slot_sort(w.word)) rep.slot_values[*sort].insert(w.word);
  }
  for (auto& [shape, g] : groups) rep.successful.push_back(std::move(g));
  std::stable_sort(rep.successful.begin(), rep.successful.end(),
                   [](const ShapeGroup& a, const ShapeGroup& b) { return a.count > b.count; });
  return rep;
}

std::string VariantsReport::text() const {
  std::ostringstream os;
  std::size_t wins = 0;
  for (const auto& g : successful) wins += g.count;
  os << "variants: " << n << " episodes, seed " << seed << "\n";
  os << "successful episodes: " << wins << ", distinct successful shapes: " << successful.size()
     << "\n";
  os << "outcomes:";
  for (const auto& [o, c] : outcomes) os << " " << o << "=" << c;
  os << "\n";
  for (const auto& [sort, values] : slot_values) {
    os << sort << " values:";
    for (const auto& v : values) os << " " << v;
    os << "\n";
  }
  for (std::size_t i = 0; i < successful.size(); ++i) {
    const auto& g = successful[i];
    os << "\n[" << i + 1 << "] x" << g.count << " (" << g.transcripts.size()
       << " distinct transcripts)\n";
    std::string shape = g.shape;
    std::size_t pos = 0;
    while ((pos = shape.find(" / ")) != std::string::npos) {
      os << "  " << shape.substr(0, pos) << "\n";
      shape.erase(0, pos + 3);
    }
    os << "  " << shape << "\n";
  }
  return os.str();
}

}  // namespace incdial::project
