#include "incrasat/transport/socket_transport.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>
#include <poll.h>
#include <sys/eventfd.h>
#include <sys/socket.h>
#include <sys/uio.h>
#include <sys/un.h>
#include <unistd.h>

#include "incrasat/model/bytes.hpp"

namespace incrasat {

namespace {

sockaddr_un makeAddress(const std::filesystem::path& path) {
    sockaddr_un addr {};
    addr.sun_family = AF_UNIX;
    auto s = path.string();
    if (s.size() >= sizeof(addr.sun_path))
        throw RoutingError("socket path too long: " + s);
    std::memcpy(addr.sun_path, s.c_str(), s.size() + 1);
    return addr;
}

int tryConnect(const std::filesystem::path& path) {
    int fd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) return -1;
    auto addr = makeAddress(path);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        return -1;
    }
    return fd;
}

void writeAll(int fd, std::span<const uint8_t> header, std::span<const uint8_t> body) {
    iovec iov[2] = {{const_cast<uint8_t*>(header.data()), header.size()},
                    {const_cast<uint8_t*>(body.data()), body.size()}};
    int iovcnt = body.empty() ? 1 : 2;
    iovec* cur = iov;
    while (iovcnt > 0) {
        msghdr msg {};
        msg.msg_iov = cur;
        msg.msg_iovlen = iovcnt;
        ssize_t n = ::sendmsg(fd, &msg, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw RoutingError(std::string("socket write failed: ") + std::strerror(errno));
        }
        size_t left = static_cast<size_t>(n);
        while (iovcnt > 0 && left >= cur->iov_len) {
            left -= cur->iov_len;
            cur++;
            iovcnt--;
        }
        if (iovcnt > 0) {
            cur->iov_base = static_cast<uint8_t*>(cur->iov_base) + left;
            cur->iov_len -= left;
        }
    }
}

} // namespace

std::filesystem::path SocketTransport::socketPath(const std::filesystem::path& dir, int rank) {
    return dir / ("rank" + std::to_string(rank) + ".sock");
}

std::vector<std::filesystem::path> SocketTransport::findConflicts(const std::filesystem::path& dir, int size) {
    std::vector<std::filesystem::path> conflicts;
    for (int r = 0; r < size; r++) {
        auto path = socketPath(dir, r);
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) continue;
        int fd = tryConnect(path);
        if (fd >= 0) {
            ::close(fd);
            conflicts.push_back(path);
        } else {
            std::filesystem::remove(path, ec);
        }
    }
    return conflicts;
}

SocketTransport::SocketTransport(int size, int rank, std::filesystem::path dir, size_t maxMessageSize)
    : Transport(maxMessageSize), _size(size), _rank(rank), _dir(std::move(dir)) {
    checkRank(rank);
    std::filesystem::create_directories(_dir);
    for (int r = 0; r < size; r++) _peers.push_back(std::make_unique<Peer>());

    auto path = socketPath(_dir, rank);
    auto addr = makeAddress(path);
    std::error_code ec;
    std::filesystem::remove(path, ec);
    _listenFd = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC | SOCK_NONBLOCK, 0);
    if (_listenFd < 0 || ::bind(_listenFd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0
        || ::listen(_listenFd, 128) != 0) {
        std::string err = std::strerror(errno);
        if (_listenFd >= 0) ::close(_listenFd);
        throw RoutingError("cannot listen on " + path.string() + ": " + err);
    }
    _wakeFd = ::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
    _receiver = std::thread([this] { receiveLoop(); });
}

SocketTransport::~SocketTransport() {
    _stop = true;
    uint64_t one = 1;
    [[maybe_unused]] auto n = ::write(_wakeFd, &one, sizeof(one));
    if (_receiver.joinable()) _receiver.join();
    for (auto& p : _peers)
        if (p->fd >= 0) ::close(p->fd);
    ::close(_listenFd);
    ::close(_wakeFd);
    std::error_code ec;
    std::filesystem::remove(socketPath(_dir, _rank), ec);
}

void SocketTransport::checkRank(int rank) const {
    if (rank < 0 || rank >= _size) throw RoutingError("unknown rank " + std::to_string(rank));
}

int SocketTransport::connectTo(int dest) {
    auto path = socketPath(_dir, dest);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (true) {
        int fd = tryConnect(path);
        if (fd >= 0) return fd;
        if (std::chrono::steady_clock::now() > deadline)
            throw RoutingError("rank " + std::to_string(dest) + " is not reachable at " + path.string());
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
}

void SocketTransport::send(Envelope env) {
    checkEnvelope(env);
    if (env.source != _rank) throw RoutingError("socket endpoint can only send as its own rank");
    if (env.dest == _rank) {
        deliver(std::move(env));
        return;
    }
    ByteWriter header(kFrameHeaderSize);
    header.u32(static_cast<uint32_t>(kFrameHeaderSize - 4 + env.body.size()));
    header.u16(static_cast<uint16_t>(env.tag));
    header.u32(static_cast<uint32_t>(env.source));
    header.u32(static_cast<uint32_t>(env.dest));

    auto& peer = *_peers[env.dest];
    std::lock_guard lock(peer.mtx);
    if (peer.fd < 0) peer.fd = connectTo(env.dest);
    writeAll(peer.fd, header.buffer(), env.body);
}

void SocketTransport::deliver(Envelope env) {
    std::lock_guard lock(_inboxMtx);
    env.seq = _recvSeq[env.source]++;
    _inbox.push_back(std::move(env));
    _inboxCv.notify_all();
}

void SocketTransport::receiveLoop() {
    std::vector<Connection> conns;
    std::vector<pollfd> fds;
    std::vector<uint8_t> chunk(1 << 20);
    while (!_stop) {
        fds.clear();
        fds.push_back({_listenFd, POLLIN, 0});
        fds.push_back({_wakeFd, POLLIN, 0});
        for (auto& c : conns) fds.push_back({c.fd, POLLIN, 0});
        int rc = ::poll(fds.data(), fds.size(), 100);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (fds[0].revents & POLLIN) {
            int fd;
            while ((fd = ::accept4(_listenFd, nullptr, nullptr, SOCK_CLOEXEC)) >= 0)
                conns.push_back({fd, {}});
        }
        std::vector<size_t> closed;
        for (size_t i = 0; i < conns.size(); i++) {
            if (!(fds[i + 2].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            auto& c = conns[i];
            ssize_t n = ::read(c.fd, chunk.data(), chunk.size());
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) {
                closed.push_back(i);
                continue;
            }
            c.buffer.insert(c.buffer.end(), chunk.begin(), chunk.begin() + n);
            size_t pos = 0;
            while (c.buffer.size() - pos >= 4) {
                ByteReader r(std::span<const uint8_t>(c.buffer).subspan(pos));
                uint32_t len = r.u32();
                if (c.buffer.size() - pos - 4 < len) break;
                Envelope env;
                env.tag = static_cast<Tag>(r.u16());
                env.source = static_cast<int>(r.u32());
                env.dest = static_cast<int>(r.u32());
                auto body = r.bytes(len - (kFrameHeaderSize - 4));
                env.body.assign(body.begin(), body.end());
                pos += 4 + len;
                deliver(std::move(env));
            }
            c.buffer.erase(c.buffer.begin(), c.buffer.begin() + pos);
        }
        for (auto it = closed.rbegin(); it != closed.rend(); ++it) {
            ::close(conns[*it].fd);
            conns.erase(conns.begin() + *it);
        }
    }
    for (auto& c : conns) ::close(c.fd);
}

std::vector<Envelope> SocketTransport::poll(int rank, size_t budget) {
    if (rank != _rank) throw RoutingError("socket endpoint polled for a foreign rank");
    std::lock_guard lock(_inboxMtx);
    _woken = false;
    std::vector<Envelope> out;
    while (!_inbox.empty() && out.size() < budget) {
        out.push_back(std::move(_inbox.front()));
        _inbox.pop_front();
    }
    return out;
}

bool SocketTransport::waitForMessage(int rank, double timeoutMs) {
    if (rank != _rank) throw RoutingError("socket endpoint polled for a foreign rank");
    std::unique_lock lock(_inboxMtx);
    _inboxCv.wait_for(lock, std::chrono::microseconds(static_cast<int64_t>(timeoutMs * 1000)),
                      [&] { return _woken || !_inbox.empty(); });
    _woken = false;
    return !_inbox.empty();
}

void SocketTransport::wake(int rank) {
    if (rank != _rank) return;
    std::lock_guard lock(_inboxMtx);
    _woken = true;
    _inboxCv.notify_all();
}

} // namespace incrasat
