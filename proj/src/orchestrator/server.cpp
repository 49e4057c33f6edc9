#include "steer/orchestrator/server.hpp"

#include <deque>
#include <iostream>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace steer::orchestrator {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

class Session;

}  // namespace

struct Server::Impl {
  LivePipeline& pipeline;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer timer;
  std::chrono::milliseconds period;
  std::set<std::shared_ptr<Session>> sessions;

  Impl(LivePipeline& p, unsigned short port, std::chrono::milliseconds tick)
      : pipeline(p), ioc(1), acceptor(ioc), timer(ioc), period(tick) {
    const tcp::endpoint ep(net::ip::make_address("127.0.0.1"), port);
    acceptor.open(ep.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void accept();
  void schedule(std::chrono::steady_clock::time_point due);
  void broadcast(const std::vector<json>& frames);
  void on_message(const std::shared_ptr<Session>& from, const std::string& text);
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.sessions.insert(self);
      self->send(self->server_.pipeline.state_frame().dump());
      self->read();
    });
  }

  void send(std::string text) {
    out_.push_back(std::move(text));
    if (out_.size() == 1) write();
  }

  void close() {
    beast::error_code ec;
    ws_.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->server_.sessions.erase(self);
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.on_message(self, text);
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->server_.sessions.erase(self);
        return;
      }
      self->out_.pop_front();
      if (!self->out_.empty()) self->write();
    });
  }

  websocket::stream<tcp::socket> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> out_;
  Server::Impl& server_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Session>(std::move(socket), *this)->start();
    accept();
  });
}

// Fixed-rate ticks against absolute deadlines so jitter does not accumulate.
void Server::Impl::schedule(std::chrono::steady_clock::time_point due) {
  timer.expires_at(due);
  timer.async_wait([this, due](beast::error_code ec) {
    if (ec) return;
    broadcast(pipeline.tick());
    schedule(due + period);
  });
}

void Server::Impl::broadcast(const std::vector<json>& frames) {
  for (const auto& f : frames) {
    const std::string text = f.dump();
    for (const auto& s : sessions) s->send(text);
  }
}

void Server::Impl::on_message(const std::shared_ptr<Session>& from, const std::string& text) {
  const LiveFrames frames = pipeline.process_message(text);
  for (const auto& f : frames.reply) from->send(f.dump());
  broadcast(frames.broadcast);
}

Server::Server(LivePipeline& pipeline, unsigned short port, std::chrono::milliseconds tick)
    : impl_(std::make_unique<Impl>(pipeline, port, tick)) {}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->accept();
  impl_->schedule(std::chrono::steady_clock::now() + impl_->period);
  impl_->ioc.run();
}

void Server::stop() {
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    impl->timer.cancel();
    for (const auto& s : impl->sessions) s->close();
    impl->sessions.clear();
    impl->ioc.stop();
  });
}

}  // namespace steer::orchestrator
