#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "segctl/protocol.hpp"
#include "segctl/workflow.hpp"

namespace segctl {

struct ServerOptions {
  int port = 0;          // 0 picks a free port
  int tick_ms = 0;       // > 0: tick on its own every tick_ms while idle
  long max_ticks = 0;    // > 0: stop self-ticking at this tick
  int frame_every = 1;
};

/// Blocking TCP front end for ProtocolHandler: one thread and one session per
/// connection. Replies go out in full; self-tick frames are dropped when the
/// peer is not reading.
class TcpServer {
 public:
  using SessionFactory = std::function<Session(const std::string& id)>;

  TcpServer(ServerOptions opt, SessionFactory factory) : opt_(opt), factory_(std::move(factory)) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(errc::invalid_argument, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(opt.port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd_, 16) < 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw Error(errc::invalid_argument, "cannot bind port " + std::to_string(opt.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  ~TcpServer() {
    stop();
    for (auto& t : workers_)
      if (t.joinable()) t.join();
    if (fd_ >= 0) ::close(fd_);
  }

  int port() const { return port_; }

  void stop() { running_ = false; }

  /// Accept loop; returns after stop().
  void run() {
    long next_id = 0;
    while (running_) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) continue;
      const std::string id = "c" + std::to_string(next_id++);
      workers_.emplace_back([this, client, id] { serve_connection(client, id); });
    }
  }

 private:
  static bool send_all(int fd, const std::string& text) {
    std::size_t off = 0;
    while (off < text.size()) {
      const ssize_t n = ::send(fd, text.data() + off, text.size() - off, MSG_NOSIGNAL);
      if (n <= 0) return false;
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  static bool send_lines(int fd, const std::vector<std::string>& lines) {
    std::string text;
    for (const auto& l : lines) text += l + '\n';
    return send_all(fd, text);
  }

  void serve_connection(int fd, const std::string& id) {
    std::optional<ProtocolHandler> handler;
    try {
      Session s = factory_(id);
      s.set_id(id);
      handler.emplace(std::move(s), opt_.frame_every);
    } catch (const std::exception& e) {
      send_all(fd, std::string("error session ") + e.what() + '\n');
      ::close(fd);
      return;
    }
    std::string buffer;
    char chunk[4096];
    bool open = true;
    while (open && running_ && !handler->closed()) {
      pollfd p{fd, POLLIN, 0};
      const int wait = opt_.tick_ms > 0 ? opt_.tick_ms : 100;
      const int ready = ::poll(&p, 1, wait);
      if (ready == 0) {
        const bool capped = opt_.max_ticks > 0 && handler->session().loop().tick >= opt_.max_ticks;
        if (opt_.tick_ms > 0 && !capped) {
          const auto lines = handler->advance();
          pollfd w{fd, POLLOUT, 0};
          // a peer that is not reading loses this frame, never a reply
          if (::poll(&w, 1, 0) > 0 && (w.revents & POLLOUT) && !send_lines(fd, lines)) break;
        }
        continue;
      }
      if (ready < 0) break;
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        const std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!send_lines(fd, handler->handle(line)) || handler->closed()) {
          open = false;
          break;
        }
      }
    }
    ::close(fd);
    try {
      write_session_log(handler->session(), handler->session().id());
    } catch (const std::exception&) {
      // a log directory problem must not take the server down
    }
  }

  ServerOptions opt_;
  SessionFactory factory_;
  int fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{true};
  std::vector<std::thread> workers_;
};

}  // namespace segctl
