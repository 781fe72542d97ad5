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

#ifndef DUSQ_TESTS_SUPPORT_WS_CLIENT_HPP_
#define DUSQ_TESTS_SUPPORT_WS_CLIENT_HPP_

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace dusq::testing {

/// Blocking WebSocket client for loopback tests.
class WsClient {
 public:
  explicit WsClient(std::uint16_t port);
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  void send(const std::string& text);
  /// Next text frame; nullopt once the server closes the connection.
  std::optional<std::string> receive();
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dusq::testing

#endif  // DUSQ_TESTS_SUPPORT_WS_CLIENT_HPP_
