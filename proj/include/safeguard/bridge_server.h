// Copyright 2026 The SafeGuardPF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAFEGUARD_BRIDGE_SERVER_H_
#define SAFEGUARD_BRIDGE_SERVER_H_

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "safeguard/bridge.h"
#include "safeguard/core.h"

// WebSocket transport for LiveSession. One thread runs the network, the
// caller's thread runs the paced simulation and fans state messages out.
namespace safeguard {

struct ServeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  double pace = 1.0;           // simulated seconds per wall-clock second
  // Hold the simulation until this many clients have connected.
  std::size_t wait_for_clients = 0;
};

namespace bridge_detail {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

// Per-client connection. All members are touched on the network thread only.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  static constexpr std::size_t kMaxQueued = 256;

  Connection(tcp::socket socket, LiveSession& session)
      : ws_(std::move(socket)), session_(session) {}

  void Start(std::function<void()> on_open) {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this(),
                      on_open = std::move(on_open)](beast::error_code ec) {
      if (ec) return;
      self->open_ = true;
      on_open();
      self->Read();
    });
  }

  void Send(std::shared_ptr<const std::string> msg) {
    if (!open_) return;
    if (queue_.size() >= kMaxQueued) return;  // slow client: drop
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) Write();
  }

  void Close() {
    if (!open_) return;
    open_ = false;
    ws_.async_close(websocket::close_code::normal,
                    [self = shared_from_this()](beast::error_code) {});
  }

  bool idle() const { return queue_.empty(); }
  bool open() const { return open_; }

 private:
  void Read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec,
                                                        std::size_t) {
      if (ec) {
        self->open_ = false;
        self->queue_.clear();
        return;
      }
      self->session_.Submit(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->Read();
    });
  }

  void Write() {
    ws_.async_write(
        net::buffer(*queue_.front()),
        [self = shared_from_this()](beast::error_code ec, std::size_t) {
          if (ec) {
            self->open_ = false;
            self->queue_.clear();
            return;
          }
          self->queue_.pop_front();
          if (!self->queue_.empty()) self->Write();
        });
  }

  websocket::stream<tcp::socket> ws_;
  LiveSession& session_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool open_ = false;
};

}  // namespace bridge_detail

class BridgeServer {
 public:
  // Binds immediately; a busy port is reported here, before any simulation.
  BridgeServer(LiveSession& session, ServeOptions options)
      : session_(session), options_(std::move(options)), acceptor_(ioc_) {
    if (!(options_.pace > 0.0)) throw Error("serve: pace must be > 0");
    namespace net = bridge_detail::net;
    using bridge_detail::tcp;
    boost::system::error_code ec;
    const auto address = net::ip::make_address(options_.address, ec);
    if (ec) throw Error("serve: bad address '" + options_.address + "'");
    const tcp::endpoint endpoint(address, options_.port);
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw Error("serve: cannot listen on " + options_.address + ":" +
                  std::to_string(options_.port) + ": " + ec.message());
    }
  }

  ~BridgeServer() { Shutdown(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }
  std::size_t accepted_clients() const { return accepted_.load(); }

  // Called on the simulation thread after every state broadcast.
  void set_on_state(std::function<void(const std::string&)> f) {
    on_state_ = std::move(f);
  }

  // Runs the session to completion (or until Stop), pacing it against the
  // wall clock, then broadcasts the final state and closes all clients.
  void Run() {
    Accept();
    network_ = std::thread([this] { ioc_.run(); });
    while (accepted_.load() < options_.wait_for_clients && !stop_.load()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    using Clock = std::chrono::steady_clock;
    auto wall0 = Clock::now();
    double sim0 = session_.simulator().world().time;
    bool was_paused = false;
    while (!stop_.load()) {
      if (!session_.Tick()) {
        if (session_.done() && !session_.paused()) break;
        was_paused = true;
        Broadcast(session_.StateMessage());
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        continue;
      }
      const double t = session_.simulator().world().time;
      if (was_paused || t < sim0) {
        // Resumed or reset: restart the pacing clock.
        was_paused = false;
        wall0 = Clock::now();
        sim0 = t;
      }
      Broadcast(session_.StateMessage());
      const auto target =
          wall0 +
          std::chrono::duration_cast<Clock::duration>(
              std::chrono::duration<double>((t - sim0) / options_.pace));
      std::this_thread::sleep_until(target);
    }
    Broadcast(session_.StateMessage());
    Shutdown();
  }

  // Thread-safe.
  void Stop() { stop_.store(true); }

 private:
  void Accept() {
    acceptor_.async_accept([this](boost::system::error_code ec,
                                  bridge_detail::tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<bridge_detail::Connection>(std::move(socket),
                                                              session_);
      connections_.push_back(conn);
      conn->Start([this] { ++accepted_; });
      Accept();
    });
  }

  void Broadcast(std::string msg) {
    auto shared = std::make_shared<const std::string>(std::move(msg));
    boost::asio::post(ioc_, [this, shared] {
      std::erase_if(connections_,
                    [](const auto& c) { return !c->open() && c->idle(); });
      for (auto& c : connections_) c->Send(shared);
    });
    if (on_state_) on_state_(*shared);
  }

  void Shutdown() {
    if (!network_.joinable()) return;
    // Let queued messages drain before closing, bounded so a stuck client
    // cannot hold the process.
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::seconds(2);
    while (std::chrono::steady_clock::now() < deadline) {
      std::promise<bool> idle;
      auto fut = idle.get_future();
      boost::asio::post(ioc_, [this, &idle] {
        bool all = true;
        for (auto& c : connections_) all = all && (c->idle() || !c->open());
        idle.set_value(all);
      });
      if (fut.get()) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    boost::asio::post(ioc_, [this] {
      boost::system::error_code ec;
      acceptor_.close(ec);
      for (auto& c : connections_) c->Close();
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    ioc_.stop();
    network_.join();
    connections_.clear();
  }

  LiveSession& session_;
  ServeOptions options_;
  boost::asio::io_context ioc_;
  bridge_detail::tcp::acceptor acceptor_;
  std::vector<std::shared_ptr<bridge_detail::Connection>> connections_;
  std::function<void(const std::string&)> on_state_;
  std::thread network_;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> accepted_{0};
};

}  // namespace safeguard

#endif  // SAFEGUARD_BRIDGE_SERVER_H_
