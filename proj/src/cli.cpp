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


#include "incdial/cli.hpp"

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <csignal>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <boost/system/system_error.hpp>

#include "incdial/engine.hpp"
#include "incdial/error.hpp"
#include "incdial/project.hpp"
#include "incdial/service.hpp"
#include "incdial/util.hpp"

namespace incdial::cli {

namespace {

using project::ProjectConfig;

struct Options {
  std::string config = INCDIAL_DEFAULT_CONFIG;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> episodes;
  std::optional<std::string> out;
  std::optional<std::size_t> n;
  std::optional<std::string> host;
  std::optional<unsigned short> port;
  std::optional<std::string> static_dir;
  std::optional<unsigned> delay_ms;
};

ProjectConfig load_config(const Options& o) {
  auto cfg = ProjectConfig::load(o.config);
  if (o.out) cfg.out = std::filesystem::absolute(*o.out);
  return cfg;
}

struct Trained {
  project::Artifacts artifacts;
  learner::Policy policy;
};

project::Artifacts require_artifacts(const ProjectConfig& cfg) {
  auto a = project::load_artifacts(cfg);
  if (!a) throw ConfigError("no induced artifacts in " + cfg.out.string() + "; run 'incdial induce' first");
  return std::move(*a);
}

Trained require_trained(const ProjectConfig& cfg) {
  auto a = require_artifacts(cfg);
  if (!std::filesystem::exists(project::policy_path(cfg)))
    throw ConfigError("no policy at " + project::policy_path(cfg).string() + "; run 'incdial train' first");
  auto policy = project::load_policy(cfg, *a.lexicon);
  return {std::move(a), std::move(policy)};
}

int cmd_induce(const Options& o, std::ostream& out, std::ostream& err) {
  auto cfg = load_config(o);
  auto a = project::induce(cfg);
  project::write_artifacts(a, cfg);
  for (const auto& w : a.warnings) err << "warning: " << w << "\n";
  out << project::describe(a);
  out << "wrote " << project::goalspec_path(cfg).string() << " and " << project::rules_path(cfg).string()
      << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  auto cfg = load_config(o);
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.episodes) cfg.train.episodes = *o.episodes;
  cfg.train.validate();
  auto loaded = project::load_artifacts(cfg);
  if (!loaded) {
    loaded = project::induce(cfg);
    project::write_artifacts(*loaded, cfg);
    for (const auto& w : loaded->warnings) err << "warning: " << w << "\n";
    out << "induced m = " << loaded->spec.m() << " features\n";
  }
  auto& a = *loaded;
  auto result = learner::train(a.lexicon, a.spec, a.rules, cfg.train, cfg.env);
  write_file(project::policy_path(cfg), result.policy.serialize());
  write_file(cfg.out / "training.csv", learner::log_csv(result.log));
  write_file(cfg.out / "training_silent_user.csv", learner::log_csv(result.silent_log));
  out << "trained " << cfg.train.episodes << " episodes per table (seed " << cfg.train.seed << ")\n";
  out << "policy " << sha256_hex(result.policy.serialize()) << " -> " << project::policy_path(cfg).string()
      << "\n";
  auto stats = learner::evaluate(result.policy, a.lexicon, a.rules, cfg.evaluation.episodes,
                                 cfg.evaluation.seed);
  out << "evaluation " << stats.summary().dump() << "\n";
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  auto cfg = load_config(o);
  auto t = require_trained(cfg);
  auto stats = learner::evaluate(t.policy, t.artifacts.lexicon, t.artifacts.rules,
                                 o.n.value_or(cfg.evaluation.episodes), o.seed.value_or(cfg.evaluation.seed));
  out << stats.summary().dump(2) << "\n";
  return kOk;
}

int cmd_variants(const Options& o, std::ostream& out) {
  auto cfg = load_config(o);
  auto t = require_trained(cfg);
  auto report = project::variants(t.policy, t.artifacts.lexicon, t.artifacts.rules, o.n.value_or(200),
                                  o.seed.value_or(cfg.evaluation.seed));
  auto text = report.text();
  write_file(cfg.out / "variants.txt", text);
  out << text;
  return kOk;
}

class ChatPrinter {
 public:
  explicit ChatPrinter(std::ostream& out) : out_(out) {}

  // Returns true when an end event was printed.
  bool print(const engine::Events& events) {
    bool ended = false;
    for (const auto& e : events) {
      const auto type = e.at("type").get<std::string>();
      if (type == "system_word") {
        pending_ = e.at("text").get<std::string>();
      } else if (type == "state") {
        const auto bits = e.at("bits").get<std::string>();
        if (pending_) {
          out_ << "SYS  " << std::left << std::setw(10) << *pending_ << " " << bits << "\n";
          pending_.reset();
        } else {
          out_ << "     " << std::setw(10) << "" << " " << bits << "\n";
        }
      } else if (type == "end") {
        out_ << "-- dialogue " << (e.at("success").get<bool>() ? "succeeded" : "failed") << " ("
             << e.at("reason").get<std::string>() << ")\n";
        ended = true;
      } else if (type == "error") {
        out_ << "!! " << e.at("message").get<std::string>() << "\n";
      }
    }
    out_.flush();
    return ended;
  }

 private:
  std::ostream& out_;
  std::optional<std::string> pending_;
};

bool input_pending(int timeout_ms) {
  pollfd fd{STDIN_FILENO, POLLIN, 0};
  return ::poll(&fd, 1, timeout_ms) > 0;
}

int cmd_chat(const Options& o, std::istream& in, std::ostream& out) {
  auto cfg = load_config(o);
  auto t = require_trained(cfg);
  auto agent = engine::Agent::create(t.artifacts.lexicon, std::move(t.policy), std::move(t.artifacts.rules));
  const bool interactive = &in == &std::cin && ::isatty(STDIN_FILENO);
  const int delay = static_cast<int>(o.delay_ms.value_or(cfg.serve.delay_ms));

  std::string vocab;
  for (const auto& w : agent->lexicon->vocabulary()) vocab += (vocab.empty() ? "" : " ") + w;
  out << "vocabulary: " << vocab << "\n"
      << "Type words and press enter. An empty line hands the turn over; :quit leaves.\n";
  engine::Session session(agent, "chat");
  ChatPrinter printer(out);
  out << "     " << std::setw(10) << "" << " " << session.state().str() << "\n";

  auto run_system = [&](bool explicit_handover) {
    auto begin = session.begin_drive();
    if (!begin.empty() && begin.front().at("type") == "error") {
      if (explicit_handover || begin.front().at("code") != "mid_utterance") printer.print(begin);
      return false;
    }
    if (printer.print(begin)) return true;
    bool spoke = false;
    while (session.driving()) {
      if (interactive && input_pending(delay)) {
        session.interrupt();
        out << "(interrupted)\n";
        return false;
      }
      auto events = session.drive_step();
      spoke = spoke || (!events.empty() && events.front().at("type") == "system_word");
      if (printer.print(events)) return true;
    }
    if (session.status() == engine::Status::Active && !spoke) out << "SYS  (hands the turn back)\n";
    return false;
  };

  std::string line;
  while (true) {
    out << "USR> " << std::flush;
    if (!std::getline(in, line)) {
      out << "\n";
      break;
    }
    if (line == ":quit") break;
    std::istringstream words(line);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    if (!interactive) out << line << "\n";

    if (tokens.empty()) {
      if (run_system(true)) break;
      continue;
    }
    std::string unknown;
    for (auto w : tokens) {
      std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
      if (!agent->lexicon->contains(w)) unknown += (unknown.empty() ? "'" : ", '") + w + "'";
    }
    if (!unknown.empty()) {
      out << "!! unknown word " << unknown << "; nothing was said. Vocabulary: " << vocab << "\n";
      continue;
    }
    engine::Events last;
    bool ended = false;
    for (const auto& w : tokens) {
      auto events = session.user_word(w);
      if (events.front().at("type") == "error") {
        printer.print(events);
        break;
      }
      last = std::move(events);
      if (session.status() != engine::Status::Active) break;
    }
    ended = printer.print(last);
    if (ended || run_system(false)) break;
  }
  out << "bye\n";
  return kOk;
}

service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Options& o, std::ostream& out) {
  auto cfg = load_config(o);
  auto t = require_trained(cfg);
  auto agent = engine::Agent::create(t.artifacts.lexicon, std::move(t.policy), std::move(t.artifacts.rules));
  service::ServerOptions opts;
  opts.host = o.host.value_or(cfg.serve.host);
  opts.port = o.port.value_or(cfg.serve.port);
  opts.delay = std::chrono::milliseconds(o.delay_ms.value_or(cfg.serve.delay_ms));
  opts.static_dir = cfg.serve.static_dir;
  if (o.static_dir) opts.static_dir = std::filesystem::absolute(*o.static_dir);
  if (opts.static_dir && !std::filesystem::is_directory(*opts.static_dir))
    throw ConfigError("static directory not found: " + opts.static_dir->string());
  std::unique_ptr<service::Server> server;
  try {
    server = std::make_unique<service::Server>(agent, opts);
  } catch (const boost::system::system_error& e) {
    throw ConfigError("cannot listen on " + opts.host + ":" + std::to_string(opts.port) + ": " + e.what());
  }
  out << "listening on http://" << opts.host << ":" << server->port() << " (policy " << agent->policy_hash
      << ")" << std::endl;
  g_server = server.get();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server->run();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Incremental dialogue system bootstrapped from a single dialogue", "incdial"};
  app.require_subcommand(1);
  app.add_option("--config", o.config, "Project configuration (JSON)");

  auto seed = [&](CLI::App* c, const char* help) { c->add_option("--seed", o.seed, help); };
  auto out_dir = [&](CLI::App* c) { c->add_option("--out", o.out, "Output directory (overrides config)"); };
  auto* induce = app.add_subcommand("induce", "Induce the goal spec and simulator rules from the corpus");
  out_dir(induce);
  auto* train = app.add_subcommand("train", "Train the policy, inducing first if needed");
  out_dir(train);
  seed(train, "Training seed");
  train->add_option("--episodes", o.episodes, "Training episodes per table");
  auto* evaluate = app.add_subcommand("evaluate", "Greedy evaluation of the trained policy");
  out_dir(evaluate);
  seed(evaluate, "Evaluation seed");
  evaluate->add_option("--n", o.n, "Episodes");
  auto* variants = app.add_subcommand("variants", "Sample and group successful dialogue variants");
  out_dir(variants);
  seed(variants, "Sampling seed");
  variants->add_option("--n", o.n, "Episodes (default 200)");
  auto* chat = app.add_subcommand("chat", "Talk to the trained system in the terminal");
  out_dir(chat);
  chat->add_option("--delay-ms", o.delay_ms, "Pause between system words on a terminal");
  auto* serve = app.add_subcommand("serve", "Run the WebSocket session service");
  out_dir(serve);
  serve->add_option("--host", o.host, "Bind address");
  serve->add_option("--port", o.port, "Port (0 picks a free one)");
  serve->add_option("--static", o.static_dir, "Directory of browser client assets");
  serve->add_option("--delay-ms", o.delay_ms, "Pause between streamed system words");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    if (*induce) return cmd_induce(o, out, err);
    if (*train) return cmd_train(o, out, err);
    if (*evaluate) return cmd_evaluate(o, out);
    if (*variants) return cmd_variants(o, out);
    if (*chat) return cmd_chat(o, in, out);
    if (*serve) return cmd_serve(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const HashMismatch& e) {
    err << "refusing: " << e.what() << "\n";
    return kDataError;
  } catch (const SyntaxError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const LoadError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ParseFailure& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const InductionError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ValidationError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace incdial::cli
