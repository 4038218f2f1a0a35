#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>

#include "fil/common/errors.hpp"
#include "fil/protocol/server.hpp"

namespace fil::protocol {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port"; throws ArgumentError.
Endpoint parse_endpoint(std::string_view text);
std::string to_string(const Endpoint& ep);

enum class Direction { to_server, to_client };

// Observes every byte written to a socket, for wire captures.
using Tap = std::function<void(Direction, std::span<const std::uint8_t>)>;

// An ERROR reply surfaced to the caller.
class RemoteError : public Error {
 public:
  RemoteError(ErrorCode code, const std::string& text)
      : Error(std::string(to_string(code)) + ": " + text), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Serves a CloudServer over TCP, one thread per connection. Bad headers are
// skipped by resyncing on the next magic; a partial frame at disconnect is
// dropped without reaching the server.
class TcpServer {
 public:
  TcpServer(CloudServer& server, const Endpoint& listen, Tap tap = {});
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  // Bound address; the port is resolved when 0 was requested.
  Endpoint endpoint() const { return bound_; }

  // Stops accepting, closes every connection and joins all threads.
  void stop();

 private:
  struct Connection {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void serve_connection(Connection& conn);
  void tick_loop();
  void reap_finished();

  CloudServer& server_;
  Tap tap_;
  Endpoint bound_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::thread tick_thread_;
  std::mutex conn_mu_;
  std::list<std::unique_ptr<Connection>> conns_;
};

// Synchronous request/response client. Every call waits at most `timeout`
// for the reply and throws TransportError after that.
class Client {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{30000};

  Client(const Endpoint& server, std::chrono::milliseconds timeout = kDefaultTimeout,
         Tap tap = {});
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  Ack hello(const std::string& robot_id, Modality modality);
  Ack upload(const std::string& robot_id, std::uint32_t round, const nn::PolicyModel& model);
  Guide request_guide(const std::string& robot_id, Modality modality);

  // Sends a request and returns whatever reply arrives, ERROR included.
  Message exchange(const Message& request);

  // Raw access for fault-injection tests.
  void send_bytes(std::span<const std::uint8_t> bytes);
  Message receive();

  void close();

 private:
  void read_exact(std::uint8_t* out, std::size_t n);

  int fd_ = -1;
  std::chrono::milliseconds timeout_;
  Tap tap_;
};

}  // namespace fil::protocol
