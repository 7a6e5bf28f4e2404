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


#include "incdial/service.hpp"

#include <deque>
#include <fstream>
#include <sstream>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace incdial::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using namespace std::chrono_literals;

std::string next_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  return "s" + std::to_string(++counter);
}

Handler::Handler(std::shared_ptr<const engine::Agent> agent, Sink sink, Schedule schedule,
                 std::chrono::milliseconds delay)
    : agent_(std::move(agent)), sink_(std::move(sink)), schedule_(std::move(schedule)), delay_(delay) {}

void Handler::emit(const engine::Events& events) {
  for (const auto& e : events) sink_(e);
}

void Handler::on_message(std::string_view text) {
  auto msg = nlohmann::json::parse(text, nullptr, false);
  if (msg.is_discarded() || !msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    sink_(engine::error_event("bad_request", "expected a JSON object with a string 'type'"));
    return;
  }
  const auto type = msg["type"].get<std::string>();
  if (type == "start") {
    ++generation_;
    session_ = std::make_unique<engine::Session>(agent_, next_session_id());
    sink_(session_->state_event(true));
    return;
  }
  if (type != "user_word" && type != "release" && type != "drive") {
    sink_(engine::error_event("bad_request", "unknown message type '" + type + "'"));
    return;
  }
  if (!session_) {
    sink_(engine::error_event("no_session", "send {\"type\":\"start\"} first"));
    return;
  }
  if (type == "user_word") {
    if (!msg.contains("text") || !msg["text"].is_string()) {
      sink_(engine::error_event("bad_request", "user_word needs a string 'text'"));
      return;
    }
    emit(session_->user_word(msg["text"].get<std::string>()));
    if (!session_->driving()) ++generation_;
    return;
  }
  drive();
}

void Handler::drive() {
  ++generation_;
  emit(session_->begin_drive());
  if (!session_->driving()) return;
  const auto g = generation_;
  schedule_(0ms, [this, g] { step(g); });
}

void Handler::step(std::uint64_t generation) {
  if (generation != generation_ || !session_ || !session_->driving()) return;
  emit(session_->drive_step());
  if (session_->driving()) schedule_(delay_, [this, generation] { step(generation); });
}

nlohmann::json health(const engine::Agent& agent) {
  return {{"status", "ok"},
          {"policy_hash", agent.policy_hash},
          {"lexicon_hash", agent.lexicon->hash()},
          {"m", agent.policy.spec().m()}};
}

std::optional<std::filesystem::path> static_file(const std::filesystem::path& root,
                                                 std::string_view target) {
  std::string path(target.substr(0, target.find_first_of("?#")));
  if (path.empty() || path.front() != '/') return std::nullopt;
  if (path.back() == '/') path += "index.html";
  if (path.find('\0') != std::string::npos || path.find('\\') != std::string::npos)
    return std::nullopt;
  std::filesystem::path rel(path.substr(1));
  for (const auto& part : rel)
    if (part == ".." || part == ".") return std::nullopt;
  rel = rel.lexically_normal();
  if (rel.empty() || rel.is_absolute()) return std::nullopt;
  auto full = root / rel;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(full, ec)) return std::nullopt;
  return full;
}

namespace {

struct Shared {
  std::shared_ptr<const engine::Agent> agent;
  ServerOptions options;
};

std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".woff2") return "font/woff2";
  return "application/octet-stream";
}

http::response<http::string_body> respond(const http::request<http::string_body>& req,
                                          const Shared& shared) {
  http::response<http::string_body> res;
  res.version(req.version());
  res.keep_alive(req.keep_alive());
  res.set(http::field::server, "incdial");
  auto finish = [&](http::status status, std::string_view type, std::string body) {
    res.result(status);
    res.set(http::field::content_type, std::string(type));
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req.method() != http::verb::get && req.method() != http::verb::head)
    return finish(http::status::method_not_allowed, "text/plain", "method not allowed\n");
  const std::string_view target(req.target().data(), req.target().size());
  if (target == "/health" || target.rfind("/health?", 0) == 0)
    return finish(http::status::ok, "application/json", health(*shared.agent).dump() + "\n");
  if (shared.options.static_dir) {
    if (auto file = static_file(*shared.options.static_dir, target)) {
      std::ifstream in(*file, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      auto out = finish(http::status::ok, mime_type(*file), body.str());
      if (req.method() == http::verb::head) out.body().clear();
      return out;
    }
  }
  return finish(http::status::not_found, "text/plain", "not found\n");
}

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, const Shared& shared) : ws_(std::move(socket)), shared_(shared) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    handler_ = std::make_unique<Handler>(
        shared_.agent, [this](const nlohmann::json& j) { send(j.dump()); },
        [this](std::chrono::milliseconds d, std::function<void()> fn) { schedule(d, std::move(fn)); },
        shared_.options.delay);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        return;
      }
      auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->handler_->on_message(text);
      self->read();
    });
  }

  void schedule(std::chrono::milliseconds delay, std::function<void()> fn) {
    auto timer = std::make_shared<net::steady_timer>(ws_.get_executor(), delay);
    timer->async_wait([self = shared_from_this(), timer, fn = std::move(fn)](beast::error_code ec) {
      if (!ec && !self->closed_) fn();
    });
  }

  void send(std::string text) {
    if (closed_) return;
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->closed_ = true;
                        self->queue_.clear();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  const Shared& shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::unique_ptr<Handler> handler_;
  bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, const Shared& shared) : stream_(std::move(socket)), shared_(shared) {}

  void read() {
    req_ = {};
    stream_.expires_after(30s);
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

 private:
  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsConnection>(stream_.release_socket(), shared_)->start(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(respond(req_, shared_));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  const Shared& shared_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
  Shared shared;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec == net::error::operation_aborted) return;
      if (!ec) std::make_shared<HttpConnection>(std::move(socket), shared)->read();
      accept();
    });
  }
};

Server::Server(std::shared_ptr<const engine::Agent> agent, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->shared = Shared{std::move(agent), std::move(options)};
  const auto& opt = impl_->shared.options;
  tcp::endpoint endpoint(net::ip::make_address(opt.host), opt.port);
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol());
  acc.set_option(net::socket_base::reuse_address(true));
  acc.bind(endpoint);
  acc.listen(net::socket_base::max_listen_connections);
  impl_->accept();
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() { impl_->ioc.run(); }

void Server::stop() { impl_->ioc.stop(); }

}  // namespace incdial::service
