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

#ifndef DUSQ_SERVICE_WS_SERVER_HPP_
#define DUSQ_SERVICE_WS_SERVER_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace dusq::service {

/// Text-frame WebSocket broadcaster on a loopback port with its own I/O
/// thread. Incoming frames go to the handler; a non-empty return value is sent
/// back to that client. Disconnects drop the client silently.
class WsServer {
 public:
  using MessageHandler = std::function<std::string(const std::string&)>;

  WsServer(std::uint16_t port, MessageHandler handler);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  std::uint16_t port() const;
  void broadcast(std::string text);
  std::size_t client_count() const;
  bool wait_for_clients(std::size_t n, std::chrono::milliseconds timeout) const;
  /// Waits until every queued frame has been handed to the socket.
  void drain(std::chrono::milliseconds timeout) const;
  void stop();

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace dusq::service

#endif  // DUSQ_SERVICE_WS_SERVER_HPP_
