// Line-delimited JSON over TCP for the live demo. One simulation thread owns
// the DemoLoop; client reader threads only queue commands for it, and the
// simulation thread does all writes (state broadcasts, replies, heartbeats).
#pragma once

#include "smaprop/demo.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace smaprop::demo {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8090;  // 0 picks an ephemeral port
  double tick_s = 0.1;
  double heartbeat_s = 5.0;
  std::size_t max_line = 64 * 1024;
};

class Server {
 public:
  Server(DemoLoop loop, ServerOptions opt) : loop_(std::move(loop)), opt_(std::move(opt)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(opt_.port);
    if (::inet_pton(AF_INET, opt_.host.c_str(), &addr.sin_addr) != 1) {
      ::close(listen_fd_);
      throw std::runtime_error("bad listen address '" + opt_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 8) < 0) {
      const std::string err = std::strerror(errno);
      ::close(listen_fd_);
      throw std::runtime_error("cannot listen on " + opt_.host + ":" + std::to_string(opt_.port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  ~Server() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
  }

  std::uint16_t port() const { return port_; }

  /// Serves until stop() is called or `max_ticks` ticks have run (0 = no limit).
  void run(std::uint64_t max_ticks = 0) {
    running_ = true;
    std::thread acceptor([this] { accept_loop(); });
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(opt_.tick_s));
    const auto beat = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(opt_.heartbeat_s));
    auto next = std::chrono::steady_clock::now();
    auto next_beat = next + beat;
    std::uint64_t ticks = 0;
    while (running_ && (max_ticks == 0 || ticks < max_ticks)) {
      apply_pending();
      const auto& s = loop_.tick();
      broadcast(to_json(s).dump());
      ++ticks;
      const auto now = std::chrono::steady_clock::now();
      if (now >= next_beat) {
        broadcast(json{{"type", "heartbeat"}, {"version", kProtocolVersion}, {"tick", s.tick}}.dump());
        next_beat = now + beat;
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
    running_ = false;
    ::shutdown(listen_fd_, SHUT_RDWR);
    acceptor.join();
    close_all();
  }

  void stop() { running_ = false; }

  std::size_t client_count() const {
    std::lock_guard lock(mu_);
    return clients_.size();
  }

 private:
  struct Client {
    int fd = -1;
    std::thread reader;
    std::atomic<bool> dead = false;
  };

  struct Pending {
    std::uint64_t client;
    json command;
  };

  void accept_loop() {
    while (running_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (!running_) break;
        if (errno == EINTR || errno == ECONNABORTED) continue;
        break;
      }
      // A client that stops reading gets dropped instead of stalling the tick.
      timeval tv{0, 200000};
      ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
      std::lock_guard lock(mu_);
      const auto id = next_id_++;
      auto c = std::make_unique<Client>();
      c->fd = fd;
      Client* raw = c.get();
      clients_.emplace(id, std::move(c));
      raw->reader = std::thread([this, id, raw] { read_loop(id, raw); });
      hello_.push_back(id);
    }
  }

  void read_loop(std::uint64_t id, Client* c) {
    std::string buf;
    char chunk[4096];
    while (true) {
      const ssize_t n = ::recv(c->fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t pos;
      bool violation = false;
      while ((pos = buf.find('\n')) != std::string::npos) {
        std::string line = buf.substr(0, pos);
        buf.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
          violation = true;
          break;
        }
        std::lock_guard lock(mu_);
        pending_.push_back({id, std::move(j)});
      }
      if (violation || buf.size() > opt_.max_line) break;
    }
    c->dead = true;
    ::shutdown(c->fd, SHUT_RDWR);
  }

  void apply_pending() {
    std::deque<Pending> work;
    std::vector<std::uint64_t> hello;
    {
      std::lock_guard lock(mu_);
      work.swap(pending_);
      hello.swap(hello_);
    }
    const json greeting = {{"type", "hello"},
                           {"version", kProtocolVersion},
                           {"tick_s", opt_.tick_s},
                           {"contact_threshold_N", loop_.settings().contact_threshold},
                           {"high_threshold_N", loop_.settings().high_threshold}};
    for (auto id : hello) send_to(id, greeting.dump());
    for (auto& p : work) send_to(p.client, loop_.handle_command(p.command).to_json().dump());
  }

  void send_line(Client& c, const std::string& line) {
    if (c.dead) return;
    std::string msg = line + "\n";
    std::size_t off = 0;
    while (off < msg.size()) {
      const ssize_t n = ::send(c.fd, msg.data() + off, msg.size() - off, MSG_NOSIGNAL);
      if (n <= 0) {
        c.dead = true;
        ::shutdown(c.fd, SHUT_RDWR);
        return;
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void send_to(std::uint64_t id, const std::string& line) {
    std::lock_guard lock(mu_);
    if (auto it = clients_.find(id); it != clients_.end()) send_line(*it->second, line);
  }

  void broadcast(const std::string& line) {
    std::vector<std::unique_ptr<Client>> reaped;
    {
      std::lock_guard lock(mu_);
      for (auto it = clients_.begin(); it != clients_.end();) {
        send_line(*it->second, line);
        if (it->second->dead) {
          reaped.push_back(std::move(it->second));
          it = clients_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& c : reaped) {
      if (c->reader.joinable()) c->reader.join();
      ::close(c->fd);
    }
  }

  void close_all() {
    std::map<std::uint64_t, std::unique_ptr<Client>> all;
    {
      std::lock_guard lock(mu_);
      all.swap(clients_);
    }
    for (auto& [_, c] : all) {
      ::shutdown(c->fd, SHUT_RDWR);
      if (c->reader.joinable()) c->reader.join();
      ::close(c->fd);
    }
  }

  DemoLoop loop_;
  ServerOptions opt_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_ = false;

  mutable std::mutex mu_;
  std::map<std::uint64_t, std::unique_ptr<Client>> clients_;
  std::deque<Pending> pending_;
  std::vector<std::uint64_t> hello_;
  std::uint64_t next_id_ = 0;
};

}  // namespace smaprop::demo
