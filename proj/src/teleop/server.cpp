#include "pilotstack/teleop/server.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace pilot::teleop {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

constexpr const char* kFallbackPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>pilotstack</title></head>
<body><h1>pilotstack teleop</h1>
<p>The monitor UI bundle is not installed. Connect a client to <code>/ws</code>
with subprotocol <code>pilotstack.v1</code>.</p></body></html>
)";

bool offers_subprotocol(const http::request<http::string_body>& req) {
  const auto header = req[http::field::sec_websocket_protocol];
  std::string_view list(header.data(), header.size());
  while (!list.empty()) {
    const auto comma = list.find(',');
    auto item = list.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == kSubprotocol) return true;
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return false;
}

/// Lets the simulation thread post into the io_context only while the server runs.
struct PostGate {
  std::mutex mutex;
  bool open = true;
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, SimContext& sim, std::shared_ptr<PostGate> gate)
      : ws_(std::move(socket)), sim_(sim), gate_(std::move(gate)) {}

  ~WsSession() {
    if (id_) sim_.disconnect(*id_);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.set_option(websocket::stream_base::decorator([](websocket::response_type& res) {
      res.set(http::field::sec_websocket_protocol, kSubprotocol);
    }));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsSession> weak = shared_from_this();
    auto executor = ws_.get_executor();
    outbox_ = std::make_shared<Outbox>([weak, executor, gate = gate_] {
      std::lock_guard lock(gate->mutex);
      if (!gate->open) return;
      net::post(executor, [weak] {
        if (auto self = weak.lock()) self->pump();
      });
    });
    id_ = sim_.connect(outbox_);
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      release();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (!ws_.got_text()) {
      fail_protocol("binary messages are not part of the protocol");
      return;
    }
    try {
      sim_.submit(*id_, parse_client_message(text));
    } catch (const ProtocolError& e) {
      fail_protocol(e.what());
      return;
    }
    do_read();
  }

  void fail_protocol(const std::string& why) {
    close_reason_ = websocket::close_reason(websocket::close_code::protocol_error, why.substr(0, 120));
    release();
    if (!writing_) do_close();
  }

  void do_close() {
    closing_ = true;
    ws_.async_close(*close_reason_, [self = shared_from_this()](beast::error_code) {});
  }

  /// Leaves the simulation (and hands over the driver role) right away.
  void release() {
    if (id_) sim_.disconnect(*id_);
    id_.reset();
  }

  void pump() {
    if (writing_ || closing_ || !outbox_) return;
    if (close_reason_) {
      do_close();
      return;
    }
    auto next = outbox_->pop();
    if (!next) return;
    writing_ = true;
    current_ = std::move(*next);
    ws_.text(true);
    ws_.async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->release();
        return;
      }
      self->pump();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  SimContext& sim_;
  std::shared_ptr<PostGate> gate_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Outbox> outbox_;
  std::optional<ConnectionId> id_;
  std::string current_;
  std::optional<websocket::close_reason> close_reason_;
  bool writing_ = false;
  bool closing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, SimContext& sim, const std::filesystem::path& ui_root,
              std::shared_ptr<PostGate> gate)
      : stream_(std::move(socket)), sim_(sim), ui_root_(ui_root), gate_(std::move(gate)) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() != "/ws") {
        respond(http::status::not_found, "text/plain", "no WebSocket endpoint here\n");
        return;
      }
      if (!offers_subprotocol(req_)) {
        respond(http::status::bad_request, "text/plain", std::string("subprotocol ") + kSubprotocol + " required\n");
        return;
      }
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), sim_, gate_)->run(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "GET only\n");
    } else if (req_.target() == "/healthz") {
      respond(http::status::ok, "text/plain", "ok");
    } else if (req_.target() == "/" || req_.target() == "/index.html") {
      respond(http::status::ok, "text/html; charset=utf-8", index_page());
    } else {
      respond(http::status::not_found, "text/plain", "not found\n");
    }
  }

  std::string index_page() const {
    if (!ui_root_.empty()) {
      std::ifstream in(ui_root_ / "index.html", std::ios::binary);
      if (in) {
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
      }
    }
    return kFallbackPage;
  }

  void respond(http::status status, const char* content_type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "pilotstack");
    res->set(http::field::content_type, content_type);
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  SimContext& sim_;
  const std::filesystem::path& ui_root_;
  std::shared_ptr<PostGate> gate_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct TeleopServer::Impl {
  Impl(SimContext& s, std::string a, unsigned short p, std::filesystem::path ui)
      : sim(s), address(std::move(a)), port(p), ui_root(std::move(ui)), acceptor(ioc) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), sim, ui_root, gate)->run();
      }
      do_accept();
    });
  }

  SimContext& sim;
  std::string address;
  unsigned short port;
  std::filesystem::path ui_root;
  std::shared_ptr<PostGate> gate = std::make_shared<PostGate>();
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  std::thread thread;
};

TeleopServer::TeleopServer(SimContext& sim, std::string address, unsigned short port, std::filesystem::path ui_root)
    : impl_(std::make_unique<Impl>(sim, std::move(address), port, std::move(ui_root))) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  if (impl_->thread.joinable()) return;
  beast::error_code ec;
  const auto addr = net::ip::make_address(impl_->address, ec);
  if (ec) throw std::runtime_error("invalid bind address '" + impl_->address + "': " + ec.message());
  const tcp::endpoint endpoint(addr, impl_->port);
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    beast::error_code ignored;
    acc.close(ignored);
    throw std::runtime_error("cannot bind " + impl_->address + ":" + std::to_string(impl_->port) + ": " +
                             ec.message());
  }
  impl_->port = acc.local_endpoint().port();
  impl_->do_accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void TeleopServer::stop() {
  if (!impl_->thread.joinable()) return;
  {
    std::lock_guard lock(impl_->gate->mutex);
    impl_->gate->open = false;
  }
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
  });
  impl_->ioc.stop();
  impl_->thread.join();
}

unsigned short TeleopServer::port() const { return impl_->port; }

}  // namespace pilot::teleop
