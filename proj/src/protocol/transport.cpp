#include "fil/protocol/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <iostream>

namespace fil::protocol {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res); rc != 0)
    throw TransportError("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

void send_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

constexpr std::array<std::uint8_t, 4> kMagicBytes = {'F', 'I', 'L', 'M'};

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw ArgumentError("endpoint must be host:port, got '" + std::string(text) + "'");
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const auto port = text.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535)
    throw ArgumentError("bad port in endpoint '" + std::string(text) + "'");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

std::string to_string(const Endpoint& ep) { return ep.host + ":" + std::to_string(ep.port); }

// ---- server ----

TcpServer::TcpServer(CloudServer& server, const Endpoint& listen, Tap tap)
    : server_(server), tap_(std::move(tap)) {
  const auto addr = resolve(listen);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError(errno_text("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 64) < 0) {
    const auto msg = errno_text(("listen on " + to_string(listen)).c_str());
    ::close(listen_fd_);
    throw TransportError(msg);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  bound_ = Endpoint{listen.host, ntohs(bound.sin_port)};

  accept_thread_ = std::thread([this] { accept_loop(); });
  if (server_.config().mode == FusionMode::asynchronous)
    tick_thread_ = std::thread([this] { tick_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  if (accept_thread_.joinable()) accept_thread_.join();
  if (tick_thread_.joinable()) tick_thread_.join();
  ::close(listen_fd_);
  std::lock_guard lock(conn_mu_);
  for (auto& c : conns_) ::shutdown(c->fd, SHUT_RDWR);
  for (auto& c : conns_) {
    if (c->thread.joinable()) c->thread.join();
    ::close(c->fd);
  }
  conns_.clear();
}

void TcpServer::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 50);
    reap_finished();
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(conn_mu_);
    auto& conn = *conns_.emplace_back(std::make_unique<Connection>());
    conn.fd = fd;
    conn.thread = std::thread([this, &conn] { serve_connection(conn); });
  }
}

void TcpServer::reap_finished() {
  std::lock_guard lock(conn_mu_);
  for (auto it = conns_.begin(); it != conns_.end();) {
    if ((*it)->done) {
      (*it)->thread.join();
      ::close((*it)->fd);
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

void TcpServer::tick_loop() {
  while (!stopping_) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    server_.tick();
  }
}

void TcpServer::serve_connection(Connection& conn) {
  Session session;
  Bytes buf;
  std::array<std::uint8_t, 64 * 1024> chunk;

  auto reply = [&](const Message& m) {
    const auto bytes = encode(m);
    if (tap_) tap_(Direction::to_client, bytes);
    send_all(conn.fd, bytes);
  };

  try {
    for (;;) {
      const auto n = ::recv(conn.fd, chunk.data(), chunk.size(), 0);
      if (n == 0) break;
      if (n < 0) {
        if (errno == EINTR) continue;
        break;
      }
      buf.insert(buf.end(), chunk.begin(), chunk.begin() + n);

      for (;;) {
        const auto at = find_magic(buf);
        if (!at) {
          // Keep a tail that may be the start of the next magic.
          const std::size_t keep = std::min<std::size_t>(buf.size(), kMagicBytes.size() - 1);
          if (buf.size() > keep) {
            buf.erase(buf.begin(), buf.end() - static_cast<std::ptrdiff_t>(keep));
            reply(ErrorReply{ErrorCode::malformed, "bytes outside a frame were skipped"});
          }
          break;
        }
        if (*at > 0) {
          buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(*at));
          reply(ErrorReply{ErrorCode::malformed, "bytes outside a frame were skipped"});
        }
        if (buf.size() < kHeaderSize) break;
        FrameHeader header;
        try {
          header = decode_header(std::span(buf).first(kHeaderSize));
        } catch (const ProtocolError& e) {
          reply(ErrorReply{ErrorCode::malformed, e.what()});
          buf.erase(buf.begin());
          continue;
        }
        const std::size_t total = kHeaderSize + header.length;
        if (buf.size() < total) break;
        reply(server_.handle_frame(session, std::span(buf).first(total)));
        buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(total));
      }
    }
  } catch (const Error& e) {
    if (!stopping_) std::cerr << "connection dropped: " << e.what() << '\n';
  }
  server_.close(session);
  conn.done = true;
}

// ---- client ----

Client::Client(const Endpoint& server, std::chrono::milliseconds timeout, Tap tap)
    : timeout_(timeout), tap_(std::move(tap)) {
  const auto addr = resolve(server);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"));
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0) {
    const auto msg = errno_text(("connect to " + to_string(server)).c_str());
    ::close(fd_);
    fd_ = -1;
    throw TransportError(msg);
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Client::~Client() { close(); }

void Client::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Client::send_bytes(std::span<const std::uint8_t> bytes) {
  if (fd_ < 0) throw TransportError("client is closed");
  if (tap_) tap_(Direction::to_server, bytes);
  send_all(fd_, bytes);
}

void Client::read_exact(std::uint8_t* out, std::size_t n) {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::size_t got = 0;
  while (got < n) {
    const auto left = std::chrono::ceil<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TransportError("timed out waiting for the server");
    pollfd p{fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno != EINTR) throw TransportError(errno_text("poll"));
    if (ready <= 0) continue;
    const auto r = ::recv(fd_, out + got, n - got, 0);
    if (r == 0) throw TransportError("server closed the connection");
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("recv"));
    }
    got += static_cast<std::size_t>(r);
  }
}

Message Client::receive() {
  if (fd_ < 0) throw TransportError("client is closed");
  Bytes frame(kHeaderSize);
  read_exact(frame.data(), kHeaderSize);
  const auto header = decode_header(frame);
  frame.resize(kHeaderSize + header.length);
  read_exact(frame.data() + kHeaderSize, header.length);
  if (tap_) tap_(Direction::to_client, frame);
  return decode(frame);
}

Message Client::exchange(const Message& request) {
  send_bytes(encode(request));
  return receive();
}

namespace {

template <class T>
T expect(Message reply) {
  if (auto* ok = std::get_if<T>(&reply)) return std::move(*ok);
  if (auto* err = std::get_if<ErrorReply>(&reply)) throw RemoteError(err->code, err->text);
  throw TransportError("unexpected reply type " +
                       std::to_string(static_cast<int>(type_of(reply))));
}

}  // namespace

Ack Client::hello(const std::string& robot_id, Modality modality) {
  return expect<Ack>(exchange(Hello{robot_id, modality}));
}

Ack Client::upload(const std::string& robot_id, std::uint32_t round,
                   const nn::PolicyModel& model) {
  return expect<Ack>(exchange(UploadParams{robot_id, round, model}));
}

Guide Client::request_guide(const std::string& robot_id, Modality modality) {
  return expect<Guide>(exchange(RequestGuide{robot_id, modality}));
}

}  // namespace fil::protocol
