/* Copyright 2026 The dusq Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "dusq/service/ws_server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace dusq::service {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {
class Session;
}  // namespace

struct WsServer::Impl : std::enable_shared_from_this<WsServer::Impl> {
  explicit Impl(MessageHandler h) : acceptor(ioc), handler(std::move(h)) {}

  void accept();
  void add(const std::shared_ptr<Session>& s);
  void remove(const std::shared_ptr<Session>& s);
  void frame_done(std::size_t n) {
    std::lock_guard lock(mu);
    pending -= n;
    cv.notify_all();
  }

  net::io_context ioc;
  tcp::acceptor acceptor;
  MessageHandler handler;
  std::thread thread;
  std::set<std::shared_ptr<Session>> sessions;  // io thread only

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  std::size_t clients = 0;
  std::size_t pending = 0;  // frames queued but not yet written
  bool stopped = false;
};

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, std::shared_ptr<WsServer::Impl> owner)
      : ws_(std::move(socket)), owner_(std::move(owner)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      self->owner_->add(self);
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> text) {
    if (!open_) {
      owner_->frame_done(1);
      return;
    }
    outbox_.push_back(std::move(text));
    if (!writing_) write_next();
  }

  void close() {
    if (!open_) return;
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) { self->drop(); });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->drop();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      std::string reply;
      try {
        reply = self->owner_->handler(text);
      } catch (const std::exception& e) {
        reply = std::string("{\"error\":\"internal\"}");
      }
      if (!reply.empty()) {
        {
          std::lock_guard lock(self->owner_->mu);
          ++self->owner_->pending;
        }
        self->send(std::make_shared<const std::string>(std::move(reply)));
      }
      self->read();
    });
  }

  void write_next() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->outbox_.pop_front();
                      self->owner_->frame_done(1);
                      if (ec) {
                        self->drop();
                        return;
                      }
                      if (self->outbox_.empty()) {
                        self->writing_ = false;
                      } else {
                        self->write_next();
                      }
                    });
  }

  void drop() {
    if (!open_) return;
    open_ = false;
    if (!writing_) {
      owner_->frame_done(outbox_.size());
      outbox_.clear();
    } else {
      // The in-flight write completes (with an error) and releases itself.
      owner_->frame_done(outbox_.size() - 1);
      outbox_.erase(outbox_.begin() + 1, outbox_.end());
    }
    owner_->remove(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<WsServer::Impl> owner_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> outbox_;
  bool writing_ = false;
  bool open_ = false;
};

}  // namespace

void WsServer::Impl::accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<Session>(std::move(socket), self)->start();
    self->accept();
  });
}

void WsServer::Impl::add(const std::shared_ptr<Session>& s) {
  sessions.insert(s);
  std::lock_guard lock(mu);
  clients = sessions.size();
  cv.notify_all();
}

void WsServer::Impl::remove(const std::shared_ptr<Session>& s) {
  sessions.erase(s);
  std::lock_guard lock(mu);
  clients = sessions.size();
  cv.notify_all();
}

WsServer::WsServer(std::uint16_t port, MessageHandler handler)
    : impl_(std::make_shared<Impl>(std::move(handler))) {
  const tcp::endpoint ep(net::ip::make_address("127.0.0.1"), port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->accept();
  impl_->thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::broadcast(std::string text) {
  auto frame = std::make_shared<const std::string>(std::move(text));
  net::post(impl_->ioc, [impl = impl_, frame] {
    {
      std::lock_guard lock(impl->mu);
      impl->pending += impl->sessions.size();
    }
    for (const auto& s : std::vector<std::shared_ptr<Session>>(impl->sessions.begin(),
                                                               impl->sessions.end())) {
      s->send(frame);
    }
  });
}

std::size_t WsServer::client_count() const {
  std::lock_guard lock(impl_->mu);
  return impl_->clients;
}

bool WsServer::wait_for_clients(std::size_t n, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(impl_->mu);
  return impl_->cv.wait_for(lock, timeout, [&] { return impl_->clients >= n; });
}

void WsServer::drain(std::chrono::milliseconds timeout) const {
  // A broadcast posted just before this call may not have been counted yet;
  // round-trip through the io thread first.
  std::promise<void> barrier;
  auto done = barrier.get_future();
  net::post(impl_->ioc, [&barrier] { barrier.set_value(); });
  if (done.wait_for(timeout) != std::future_status::ready) return;
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait_for(lock, timeout, [&] { return impl_->pending == 0; });
}

void WsServer::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  net::post(impl_->ioc, [impl = impl_] {
    beast::error_code ec;
    impl->acceptor.close(ec);
    for (const auto& s : std::vector<std::shared_ptr<Session>>(impl->sessions.begin(),
                                                               impl->sessions.end())) {
      s->close();
    }
  });
  {
    std::unique_lock lock(impl_->mu);
    impl_->cv.wait_for(lock, std::chrono::seconds(2), [&] { return impl_->clients == 0; });
  }
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace dusq::service
