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


#include "incdial/learner.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "incdial/error.hpp"

namespace incdial::learner {

namespace {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(where) + ": '" + key + "' has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; }))
      throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
}

}  // namespace

// --- configs -------------------------------------------------------------

void EnvConfig::validate() const {
  if (max_words_per_system_turn == 0 || max_dialogue_words == 0)
    throw ConfigError("env: word caps must be positive");
}

nlohmann::json EnvConfig::to_json() const {
  return {{"max_words_per_system_turn", max_words_per_system_turn},
          {"max_dialogue_words", max_dialogue_words},
          {"seed", seed},
          {"user_initiative", user_initiative}};
}

EnvConfig EnvConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"max_words_per_system_turn", "max_dialogue_words", "seed", "user_initiative"},
                 "env");
  EnvConfig c;
  read_key(j, "max_words_per_system_turn", c.max_words_per_system_turn, "env");
  read_key(j, "max_dialogue_words", c.max_dialogue_words, "env");
  read_key(j, "seed", c.seed, "env");
  read_key(j, "user_initiative", c.user_initiative, "env");
  c.validate();
  return c;
}

double TrainConfig::epsilon(std::size_t episode) const {
  double horizon = epsilon_decay_fraction * static_cast<double>(episodes);
  if (horizon <= 0.0 || static_cast<double>(episode) >= horizon) return epsilon_end;
  double t = static_cast<double>(episode) / horizon;
  return epsilon_start + t * (epsilon_end - epsilon_start);
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("train: alpha must be in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("train: gamma must be in [0, 1]");
  for (double e : {epsilon_start, epsilon_end})
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("train: epsilon must be in [0, 1]");
  if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0))
    throw ConfigError("train: epsilon_decay_fraction must be in [0, 1]");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"episodes", episodes},
          {"alpha", alpha},
          {"gamma", gamma},
          {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end},
          {"epsilon_decay_fraction", epsilon_decay_fraction},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"episodes", "alpha", "gamma", "epsilon_start", "epsilon_end",
                     "epsilon_decay_fraction", "seed"},
                 "train");
  TrainConfig c;
  read_key(j, "episodes", c.episodes, "train");
  read_key(j, "alpha", c.alpha, "train");
  read_key(j, "gamma", c.gamma, "train");
  read_key(j, "epsilon_start", c.epsilon_start, "train");
  read_key(j, "epsilon_end", c.epsilon_end, "train");
  read_key(j, "epsilon_decay_fraction", c.epsilon_decay_fraction, "train");
  read_key(j, "seed", c.seed, "train");
  c.validate();
  return c;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::None: return "none";
    case Outcome::Ungrammatical: return "ungrammatical";
    case Outcome::Lengthy: return "lengthy";
    case Outcome::OutOfContext: return "out_of_context";
    case Outcome::Goal: return "goal";
  }
  return "none";
}

const std::string& ActionSpace::name(std::size_t a) const {
  if (a == words_.size()) return release_name_;
  return words_.at(a);
}

std::optional<std::size_t> ActionSpace::index(std::string_view name) const {
  if (name == release_name_) return release();
  auto it = std::find(words_.begin(), words_.end(), name);
  if (it == words_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - words_.begin());
}

// --- environment ---------------------------------------------------------

Env::Env(std::shared_ptr<const grammar::Lexicon> lexicon, induction::GoalSpec spec,
         simulator::RuleSet rules, EnvConfig config)
    : parser_(std::move(lexicon)),
      spec_(std::move(spec)),
      rules_(std::move(rules)),
      inventory_(simulator::SlotInventory::from_lexicon(parser_.lexicon())),
      config_(config),
      actions_(parser_.lexicon()),
      rng_(config.seed) {
  config_.validate();
  const auto& hash = parser_.lexicon().hash();
  if (spec_.lexicon_hash != hash) throw HashMismatch("goal spec", hash, spec_.lexicon_hash);
  if (rules_.lexicon_hash() != hash) throw HashMismatch("rule set", hash, rules_.lexicon_hash());
  reset();
}

StateVector Env::reset(std::optional<std::uint64_t> seed) {
  if (seed) rng_.seed(*seed);
  ctx_ = parser_.start();
  state_ = induction::encode(ctx_, spec_);
  turn_words_ = 0;
  total_words_ = 0;
  done_ = false;
  return state_;
}

StepResult Env::finish(double reward, Outcome info) {
  done_ = info != Outcome::None;
  return StepResult{state_, reward, done_, info, {}};
}

bool Env::user_speaks(const simulator::SimulatorRule& rule, StepResult& out) {
  auto words = simulator::realize(rule, inventory_, rng_);
  for (const auto& w : words) {
    auto next = parser_.try_advance(ctx_, w, Speaker::Usr);
    if (!next) return false;
    ctx_ = std::move(*next);
  }
  total_words_ += words.size();
  turn_words_ = 0;
  out.user_words = std::move(words);
  return true;
}

StepResult Env::step(std::size_t action) {
  if (done_) throw UsageError("step called on a finished episode; call reset first");
  if (action >= actions_.size()) throw UsageError("action index out of range");

  StepResult out;
  if (!actions_.is_release(action)) {
    auto next = parser_.try_advance(ctx_, actions_.name(action), Speaker::Sys);
    if (!next) return finish(-1.0, Outcome::Ungrammatical);
    ctx_ = std::move(*next);
    state_ = induction::encode(ctx_, spec_);
    ++turn_words_;
    ++total_words_;
    if (turn_words_ > config_.max_words_per_system_turn ||
        total_words_ > config_.max_dialogue_words)
      return finish(-1.0, Outcome::Lengthy);
    if (const auto* rule = simulator::match(rules_, ctx_)) {
      if (!user_speaks(*rule, out)) return finish(-1.0, Outcome::OutOfContext);
      state_ = induction::encode(ctx_, spec_);
    } else if (!state_.goal_reached() && grammar::proposition_complete(ctx_) &&
               !grammar::current_semantics(ctx_).empty()) {
      // A finished proposition the user has no answer for.
      return finish(-1.0, Outcome::OutOfContext);
    }
  } else {
    const auto* rule = simulator::match(rules_, ctx_, /*released=*/config_.user_initiative);
    if (!rule) return finish(-1.0, Outcome::OutOfContext);
    if (!user_speaks(*rule, out)) return finish(-1.0, Outcome::OutOfContext);
    state_ = induction::encode(ctx_, spec_);
  }

  if (state_.goal_reached()) {
    auto words = std::move(out.user_words);
    out = finish(1.0, Outcome::Goal);
    out.user_words = std::move(words);
    return out;
  }
  out.state = state_;
  return out;
}

// --- Q-learning ----------------------------------------------------------

void q_update(QTable& q, std::size_t n_actions, const std::string& s, std::size_t a, double r,
              const std::string& s_next, bool done, double alpha, double gamma) {
  double next_max = 0.0;
  if (!done) {
    auto it = q.find(s_next);
    if (it != q.end()) next_max = *std::max_element(it->second.begin(), it->second.end());
  }
  auto& row = q.try_emplace(s, n_actions, 0.0).first->second;
  row[a] += alpha * (r + gamma * next_max - row[a]);
}

Policy::Policy(induction::GoalSpec spec, ActionSpace actions, TrainConfig train, EnvConfig env)
    : spec_(std::move(spec)), actions_(std::move(actions)), train_(train), env_(env) {}

double Policy::value(const StateVector& s, std::size_t a, Table t) const {
  const auto& table = q(t);
  auto it = table.find(s.str());
  return it == table.end() ? 0.0 : it->second.at(a);
}

std::size_t Policy::greedy(const StateVector& s, const std::function<bool(std::size_t)>& allowed,
                           Table t) const {
  const auto& table = q(t);
  auto it = table.find(s.str());
  std::optional<std::size_t> best;
  double best_v = 0.0;
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    if (allowed && !allowed(a)) continue;
    double v = it == table.end() ? 0.0 : it->second[a];
    if (!best || v > best_v + kTieTolerance) {
      best = a;
      best_v = v;
    }
  }
  return best.value_or(actions_.release());
}

std::pair<double, double> Policy::bounds() const {
  double lo = 0.0, hi = 0.0;
  for (const auto* table : {&q_, &q_silent_})
    for (const auto& [s, row] : *table)
      for (double v : row) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  return {lo, hi};
}

nlohmann::json Policy::to_json() const {
  auto table_json = [&](const QTable& table) {
    nlohmann::json q = nlohmann::json::object();
    for (const auto& [s, row] : table) {
      nlohmann::json values = nlohmann::json::object();
      for (std::size_t a = 0; a < row.size(); ++a) values[actions_.name(a)] = row[a];
      q[s] = std::move(values);
    }
    return q;
  };
  auto names = nlohmann::json::array();
  for (std::size_t a = 0; a < actions_.size(); ++a) names.push_back(actions_.name(a));
  return {{"lexicon_hash", spec_.lexicon_hash},
          {"goalspec", spec_.to_json()},
          {"config", {{"train", train_.to_json()}, {"env", env_.to_json()}}},
          {"actions", std::move(names)},
          {"q", table_json(q_)},
          {"q_silent_user", table_json(q_silent_)}};
}

std::string Policy::serialize() const { return to_json().dump(2) + "\n"; }

Policy Policy::from_json(const nlohmann::json& j) {
  try {
    auto spec = induction::GoalSpec::from_json(j.at("goalspec"));
    if (j.at("lexicon_hash").get<std::string>() != spec.lexicon_hash)
      throw LoadError("policy: lexicon_hash disagrees with its goal spec");
    auto names = j.at("actions").get<std::vector<std::string>>();
    if (names.empty() || names.back() != kReleaseName)
      throw LoadError("policy: action list must end with the release action");
    names.pop_back();
    Policy p(std::move(spec), ActionSpace(std::move(names)),
             TrainConfig::from_json(j.at("config").at("train")),
             EnvConfig::from_json(j.at("config").at("env")));
    const std::size_t n = p.actions_.size();
    auto read_table = [&](const nlohmann::json& jt, QTable& table) {
      for (const auto& [s, values] : jt.items()) {
        if (induction::StateVector::parse(s).m() != p.spec_.m())
          throw LoadError("policy: state " + s + " does not have 2m bits");
        std::vector<double> row(n, 0.0);
        for (const auto& [name, v] : values.items()) {
          auto a = p.actions_.index(name);
          if (!a) throw LoadError("policy: unknown action '" + name + "'");
          row[*a] = v.get<double>();
        }
        table.emplace(s, std::move(row));
      }
    };
    read_table(j.at("q"), p.q_);
    if (j.contains("q_silent_user")) read_table(j["q_silent_user"], p.q_silent_);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("policy: ") + e.what());
  } catch (const SyntaxError& e) {
    throw LoadError(std::string("policy: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("policy: ") + e.what());
  }
}

void Policy::check_lexicon(const grammar::Lexicon& lexicon) const {
  if (spec_.lexicon_hash != lexicon.hash())
    throw HashMismatch("policy", lexicon.hash(), spec_.lexicon_hash);
}

TrainResult train(std::shared_ptr<const grammar::Lexicon> lexicon, const induction::GoalSpec& spec,
                  const simulator::RuleSet& rules, const TrainConfig& train_cfg,
                  const EnvConfig& env_cfg) {
  train_cfg.validate();
  Env probe(lexicon, spec, rules, env_cfg);
  TrainResult out{Policy(spec, probe.actions(), train_cfg, env_cfg), {}, {}};
  std::mt19937_64 master(train_cfg.seed);

  auto run = [&](Table table, std::vector<EpisodeLog>& logs) {
    EnvConfig cfg = env_cfg;
    cfg.user_initiative = table == Table::Main && env_cfg.user_initiative;
    Env env(lexicon, spec, rules, cfg);
    std::mt19937_64 explore(master());
    env.reset(master());
    const std::size_t n = env.actions().size();
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any(0, n - 1);
    auto& q = out.policy.q(table);
    logs.reserve(train_cfg.episodes);
    for (std::size_t ep = 0; ep < train_cfg.episodes; ++ep) {
      const double eps = train_cfg.epsilon(ep);
      StateVector s = env.reset();
      EpisodeLog log{ep + 1, 0.0, 0, Outcome::None};
      while (!env.done()) {
        std::size_t a = coin(explore) < eps ? any(explore) : out.policy.greedy(s, nullptr, table);
        auto r = env.step(a);
        q_update(q, n, s.str(), a, r.reward, r.state.str(), r.done, train_cfg.alpha,
                 train_cfg.gamma);
        log.reward += r.reward;
        ++log.length;
        log.outcome = r.info;
        s = r.state;
      }
      logs.push_back(log);
    }
  };
  run(Table::Main, out.log);
  run(Table::SilentUser, out.silent_log);

  auto [lo, hi] = out.policy.bounds();
  const double cap = train_cfg.gamma < 1.0 ? 1.0 / (1.0 - train_cfg.gamma) : 1e300;
  if (lo < -1.0 - 1e-12 || hi > cap + 1e-12)
    throw std::logic_error("Q-values left [-1, 1/(1-gamma)] during training");
  return out;
}

std::string log_csv(const std::vector<EpisodeLog>& log) {
  std::ostringstream os;
  os << "episode,reward,length,outcome\n";
  for (const auto& e : log)
    os << e.episode << ',' << e.reward << ',' << e.length << ',' << to_string(e.outcome) << '\n';
  return os.str();
}

// --- evaluation ----------------------------------------------------------

Episode rollout(const Policy& policy, Env& env, double epsilon, std::mt19937_64& rng,
                Table table) {
  Episode ep;
  StateVector s = env.state();
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, env.actions().size() - 1);
  while (!env.done()) {
    std::size_t a = (epsilon > 0.0 && coin(rng) < epsilon) ? any(rng) : policy.greedy(s, nullptr, table);
    Step step{a, s, env.step(a)};
    ep.total_reward += step.result.reward;
    ep.outcome = step.result.info;
    s = step.result.state;
    ep.steps.push_back(std::move(step));
  }
  ep.transcript = env.context().transcript;
  return ep;
}

std::string transcript_string(const std::vector<grammar::TranscriptWord>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += std::string(to_string(w.speaker)) + ":" + w.word;
  }
  return out;
}

nlohmann::json EvalStats::summary() const {
  nlohmann::json j;
  j["episodes"] = episodes;
  j["success_rate"] = success_rate ? nlohmann::json(*success_rate) : nlohmann::json(nullptr);
  j["mean_length"] = mean_length;
  j["distinct_dialogue_shapes"] = distinct_dialogue_shapes;
  j["distinct_successful_shapes"] = distinct_successful_shapes;
  return j;
}

EvalStats evaluate(const Policy& policy, std::shared_ptr<const grammar::Lexicon> lexicon,
                   const simulator::RuleSet& rules, std::size_t n_episodes, std::uint64_t seed) {
  policy.check_lexicon(*lexicon);
  Env env(std::move(lexicon), policy.spec(), rules, policy.env_config());
  std::mt19937_64 rng(seed);
  env.reset(rng());
  EvalStats st;
  st.episodes = n_episodes;
  std::set<std::string> shapes, good;
  std::size_t wins = 0, steps = 0;
  for (std::size_t i = 0; i < n_episodes; ++i) {
    env.reset();
    auto ep = rollout(policy, env, 0.0, rng);
    auto shape = transcript_string(ep.transcript);
    shapes.insert(shape);
    if (ep.success()) {
      ++wins;
      good.insert(shape);
    }
    steps += ep.steps.size();
    st.runs.push_back(std::move(ep));
  }
  if (n_episodes > 0) {
    st.success_rate = static_cast<double>(wins) / static_cast<double>(n_episodes);
    st.mean_length = static_cast<double>(steps) / static_cast<double>(n_episodes);
  }
  st.distinct_dialogue_shapes = shapes.size();
  st.distinct_successful_shapes = good.size();
  return st;
}

}  // namespace incdial::learner
