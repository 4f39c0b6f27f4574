#include "server.hpp"

#include "errors.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>

namespace thumbtrak {

namespace {

using Clock = std::chrono::steady_clock;

class Fd {
public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(Fd &&o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd &operator=(Fd &&o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0)
      ::close(fd_);
    fd_ = -1;
  }

private:
  int fd_;
};

[[noreturn]] void fail(const std::string &what) { throw Error(ErrorKind::Io, what + ": " + std::strerror(errno)); }

// False once the peer is gone.
bool send_lines(int fd, const std::vector<std::string> &lines) {
  std::string buf;
  for (const auto &l : lines) {
    buf += l;
    buf += '\n';
  }
  std::size_t sent = 0;
  while (sent < buf.size()) {
    const ssize_t n = ::send(fd, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR)
      continue;
    if (n <= 0)
      return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

Fd listen_on(const ServerOptions &options) {
  Fd s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s)
    fail("socket");
  const int yes = 1;
  ::setsockopt(s.get(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options.port));
  if (::inet_pton(AF_INET, options.host.c_str(), &addr.sin_addr) != 1)
    throw Error(ErrorKind::Input, "not an IPv4 address: " + options.host);
  if (::bind(s.get(), reinterpret_cast<sockaddr *>(&addr), sizeof addr) < 0)
    fail("bind " + options.host + ":" + std::to_string(options.port));
  if (::listen(s.get(), 4) < 0)
    fail("listen");
  return s;
}

int bound_port(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr *>(&addr), &len);
  return ntohs(addr.sin_port);
}

} // namespace

void serve(const ServerOptions &options, const SessionFactory &factory, const std::atomic<bool> *stop) {
  if (!(options.speed > 0.0))
    throw Error(ErrorKind::Input, "speed must be positive");
  const Fd listener = listen_on(options);
  if (options.on_listen)
    options.on_listen(bound_port(listener.get()));

  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::milli>(1000.0 / kStudyRateHz / options.speed));
  const auto stopped = [&] { return stop && stop->load(); };

  Fd client;
  std::unique_ptr<SessionCore> core;
  std::string inbox;
  Clock::time_point next_tick{};
  int finished = 0;

  const auto drop_client = [&] {
    client.reset();
    core.reset();
    inbox.clear();
    ++finished;
  };

  while (!stopped() && (options.max_clients == 0 || finished < options.max_clients)) {
    pollfd fds[2] = {{listener.get(), POLLIN, 0}, {client.get(), POLLIN, 0}};
    int timeout_ms = 100;
    if (core && core->ticking()) {
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - Clock::now()).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(wait, 0, 100));
    }
    const int ready = ::poll(fds, client ? 2 : 1, timeout_ms);
    if (ready < 0 && errno != EINTR)
      fail("poll");

    // Read the client first so a disconnect frees the slot before a waiting
    // connection is accepted.
    if (client && ready > 0 && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) {
      char buf[4096];
      const ssize_t n = ::recv(client.get(), buf, sizeof buf, 0);
      if (n <= 0)
        drop_client();
      else
        inbox.append(buf, static_cast<std::size_t>(n));
      std::size_t nl;
      while (client && (nl = inbox.find('\n')) != std::string::npos) {
        std::string line = inbox.substr(0, nl);
        inbox.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r')
          line.pop_back();
        if (line.empty())
          continue;
        const bool was_ticking = core->ticking();
        if (!send_lines(client.get(), core->handle(line)))
          drop_client();
        else if (!was_ticking && core->ticking())
          next_tick = Clock::now();
      }
    }

    const bool open_slots = options.max_clients == 0 || finished < options.max_clients;
    if (ready > 0 && open_slots && (fds[0].revents & POLLIN)) {
      Fd incoming(::accept(listener.get(), nullptr, nullptr));
      if (incoming) {
        if (client) {
          send_lines(incoming.get(), {protocol::busy_message()});
        } else {
          client = std::move(incoming);
          core = factory();
          if (!send_lines(client.get(), core->open()))
            drop_client();
        }
      }
    }

    while (client && core->ticking() && Clock::now() >= next_tick) {
      if (!send_lines(client.get(), core->tick())) {
        drop_client();
        break;
      }
      next_tick += period;
    }
  }
}

} // namespace thumbtrak
