#pragma once

// Fan-out of wire frames to connected prototype clients.

#include <atomic>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "woe/error.hpp"
#include "woe/event.hpp"
#include "woe/protocol.hpp"

namespace woe {

/// A prototype client. `send` must return within a bounded time and report
/// false if the frame could not be delivered.
class Connection {
public:
    virtual ~Connection() = default;
    virtual bool send(std::string_view frame) = 0;
    virtual void close() {}
    virtual std::string describe() const { return "client"; }
};

using ClientId = std::uint64_t;

/// Thread-safe set of live prototype connections. Broadcasts are serialized,
/// so every client sees frames in the order they were broadcast.
class ClientRegistry {
public:
    ClientId add(std::shared_ptr<Connection> connection) {
        std::lock_guard lock(mutex_);
        const ClientId id = next_id_++;
        clients_.emplace(id, std::move(connection));
        return id;
    }

    void remove(ClientId id) {
        std::shared_ptr<Connection> dropped;
        {
            std::lock_guard lock(mutex_);
            auto it = clients_.find(id);
            if (it == clients_.end()) return;
            dropped = std::move(it->second);
            clients_.erase(it);
        }
        dropped->close();
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return clients_.size();
    }

    std::vector<std::pair<ClientId, std::shared_ptr<Connection>>> snapshot() const {
        std::lock_guard lock(mutex_);
        return {clients_.begin(), clients_.end()};
    }

    /// Sends `frame` to every client; clients whose send fails are evicted.
    /// Returns the number of successful deliveries.
    std::size_t broadcast(std::string_view frame) {
        std::lock_guard order(broadcast_mutex_);
        std::size_t delivered = 0;
        std::vector<ClientId> failed;
        for (auto& [id, conn] : snapshot()) {
            if (conn->send(frame)) {
                ++delivered;
            } else {
                failed.push_back(id);
            }
        }
        for (auto id : failed) {
            {
                std::lock_guard lock(mutex_);
                auto it = clients_.find(id);
                if (it != clients_.end()) failures_.push_back(it->second->describe());
            }
            remove(id);
        }
        return delivered;
    }

    std::size_t broadcast(const wire::Message& msg) { return broadcast(wire::encode(msg)); }

    void record_ack(ClientId id, std::uint64_t seq) {
        std::lock_guard lock(mutex_);
        last_ack_[id] = seq;
        ++acks_;
    }

    std::size_t ack_count() const {
        std::lock_guard lock(mutex_);
        return acks_;
    }

    /// Descriptions of clients evicted after a failed delivery.
    std::vector<std::string> failures() const {
        std::lock_guard lock(mutex_);
        return failures_;
    }

private:
    mutable std::mutex mutex_;
    std::mutex broadcast_mutex_;
    std::map<ClientId, std::shared_ptr<Connection>> clients_;
    std::map<ClientId, std::uint64_t> last_ack_;
    std::vector<std::string> failures_;
    std::size_t acks_ = 0;
    ClientId next_id_ = 1;
};

/// Sends one prediction frame for `event`; returns deliveries.
inline std::size_t broadcast(const PredictionEvent& event, bool expose_correctness, ClientRegistry& clients) {
    return clients.broadcast(wire::make_prediction(event, expose_correctness));
}

/// Connection backed by an in-process queue, drained by a streaming HTTP
/// response. A full queue means the reader is too slow and counts as failure.
class QueuedConnection : public Connection {
public:
    explicit QueuedConnection(std::size_t capacity = 1024, std::string name = "stream") : capacity_(capacity), name_(std::move(name)) {}

    bool send(std::string_view frame) override {
        std::lock_guard lock(mutex_);
        if (closed_ || frames_.size() >= capacity_) return false;
        frames_.emplace_back(frame);
        cv_.notify_all();
        return true;
    }

    void close() override {
        std::lock_guard lock(mutex_);
        closed_ = true;
        cv_.notify_all();
    }

    /// Waits up to `timeout` for the next frame. Empty optional on timeout
    /// or once closed and drained.
    std::optional<std::string> pop(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, timeout, [&] { return closed_ || !frames_.empty(); });
        if (frames_.empty()) return std::nullopt;
        auto frame = std::move(frames_.front());
        frames_.pop_front();
        return frame;
    }

    bool closed() const {
        std::lock_guard lock(mutex_);
        return closed_;
    }

    std::string describe() const override { return name_; }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> frames_;
    std::size_t capacity_;
    std::string name_;
    bool closed_ = false;
};

struct HostPort {
    std::string host;
    std::uint16_t port = 0;
};

/// Splits "host:port"; a bare ":port" or "port" binds all interfaces.
inline HostPort parse_host_port(std::string_view text) {
    const auto colon = text.rfind(':');
    std::string_view host = colon == std::string_view::npos ? std::string_view("0.0.0.0") : text.substr(0, colon);
    std::string_view port = colon == std::string_view::npos ? text : text.substr(colon + 1);
    if (host.empty()) host = "0.0.0.0";
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (port.empty() || ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) {
        throw Error(ErrorCode::InvalidConfig, "bad address '" + std::string(text) + "', expected host:port");
    }
    return HostPort{std::string(host), static_cast<std::uint16_t>(value)};
}

class TcpConnection : public Connection {
public:
    TcpConnection(int fd, std::string peer, std::chrono::milliseconds write_timeout)
        : fd_(fd), peer_(std::move(peer)), write_timeout_(write_timeout) {}
    ~TcpConnection() override { ::close(fd_); }

    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    bool send(std::string_view frame) override {
        const auto deadline = std::chrono::steady_clock::now() + write_timeout_;
        while (!frame.empty()) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return false;
            pollfd p{fd_, POLLOUT, 0};
            if (::poll(&p, 1, static_cast<int>(left.count())) <= 0 || (p.revents & (POLLERR | POLLHUP | POLLNVAL))) return false;
            const auto n = ::send(fd_, frame.data(), frame.size(), MSG_NOSIGNAL | MSG_DONTWAIT);
            if (n < 0) {
                if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
                return false;
            }
            frame.remove_prefix(static_cast<std::size_t>(n));
        }
        return true;
    }

    void close() override { ::shutdown(fd_, SHUT_RDWR); }

    int fd() const noexcept { return fd_; }
    std::string describe() const override { return "tcp " + peer_; }

private:
    int fd_;
    std::string peer_;
    std::chrono::milliseconds write_timeout_;
};

/// Accepts prototype clients on a TCP socket, registers them with the
/// registry and reads their ack frames. Runs its own I/O thread.
class TcpPrototypeServer {
public:
    TcpPrototypeServer(ClientRegistry& registry, const HostPort& bind, std::chrono::milliseconds write_timeout = std::chrono::milliseconds(250))
        : registry_(registry), write_timeout_(write_timeout) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw Error(ErrorCode::InvalidConfig, std::string("socket: ") + std::strerror(errno));
        int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(bind.port);
        if (::inet_pton(AF_INET, bind.host == "localhost" ? "127.0.0.1" : bind.host.c_str(), &addr.sin_addr) != 1) {
            ::close(listen_fd_);
            throw Error(ErrorCode::InvalidConfig, "bad IPv4 address '" + bind.host + "'");
        }
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
            const std::string why = std::strerror(errno);
            ::close(listen_fd_);
            throw Error(ErrorCode::InvalidConfig, "cannot listen on " + bind.host + ":" + std::to_string(bind.port) + ": " + why);
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
        thread_ = std::thread([this] { run(); });
    }

    ~TcpPrototypeServer() { stop(); }

    TcpPrototypeServer(const TcpPrototypeServer&) = delete;
    TcpPrototypeServer& operator=(const TcpPrototypeServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }

    void stop() {
        if (stopping_.exchange(true)) return;
        if (thread_.joinable()) thread_.join();
        ::close(listen_fd_);
        for (auto& [id, client] : clients_) registry_.remove(id);
    }

private:
    struct Client {
        std::shared_ptr<TcpConnection> conn;
        std::string buffer;
    };

    void run() {
        while (!stopping_) {
            std::vector<pollfd> fds{{listen_fd_, POLLIN, 0}};
            std::vector<ClientId> ids;
            for (auto& [id, client] : clients_) {
                fds.push_back({client.conn->fd(), POLLIN, 0});
                ids.push_back(id);
            }
            if (::poll(fds.data(), fds.size(), 100) <= 0) continue;
            if (fds[0].revents & POLLIN) accept_one();
            for (std::size_t i = 1; i < fds.size(); ++i) {
                if (fds[i].revents & (POLLIN | POLLHUP | POLLERR | POLLNVAL)) read_from(ids[i - 1]);
            }
        }
    }

    void accept_one() {
        sockaddr_in peer{};
        socklen_t len = sizeof peer;
        const int fd = ::accept(listen_fd_, reinterpret_cast<sockaddr*>(&peer), &len);
        if (fd < 0) return;
        char host[INET_ADDRSTRLEN] = {};
        ::inet_ntop(AF_INET, &peer.sin_addr, host, sizeof host);
        auto conn = std::make_shared<TcpConnection>(fd, std::string(host) + ":" + std::to_string(ntohs(peer.sin_port)), write_timeout_);
        const auto id = registry_.add(conn);
        clients_.emplace(id, Client{conn, {}});
    }

    void read_from(ClientId id) {
        auto it = clients_.find(id);
        char buf[4096];
        const auto n = ::recv(it->second.conn->fd(), buf, sizeof buf, MSG_DONTWAIT);
        if (n <= 0) {
            if (n < 0 && (errno == EAGAIN || errno == EINTR)) return;
            registry_.remove(id);
            clients_.erase(it);
            return;
        }
        auto& buffer = it->second.buffer;
        buffer.append(buf, static_cast<std::size_t>(n));
        for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n')) {
            const std::string line = buffer.substr(0, nl + 1);
            buffer.erase(0, nl + 1);
            try {
                if (auto msg = wire::decode(line); auto* ack = std::get_if<wire::Ack>(&msg)) registry_.record_ack(id, ack->seq);
            } catch (const Error&) {
                // Prototypes may only ack; anything else is ignored.
            }
        }
        if (buffer.size() > 65536) buffer.clear();
    }

    ClientRegistry& registry_;
    std::chrono::milliseconds write_timeout_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::map<ClientId, Client> clients_;  // owned by the I/O thread
    std::thread thread_;
};

}  // namespace woe
