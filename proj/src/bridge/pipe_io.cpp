#include "incrasat/bridge/pipe_io.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/stat.h>
#include <unistd.h>

#include "incrasat/model/bytes.hpp"
#include "incrasat/model/payload_codec.hpp"

namespace incrasat::bridge {

namespace {

using SteadyClock = std::chrono::steady_clock;

int remainingMs(SteadyClock::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - SteadyClock::now()).count();
    return left < 0 ? 0 : static_cast<int>(std::min<int64_t>(left, 100));
}

SteadyClock::time_point deadlineIn(double ms) {
    return SteadyClock::now() + std::chrono::microseconds(static_cast<int64_t>(ms * 1000));
}

std::string sysError(const std::string& what) { return what + ": " + std::strerror(errno); }

// Fills buf[0..n) from fd.
void readFully(int fd, uint8_t* buf, size_t n, SteadyClock::time_point deadline) {
    size_t got = 0;
    while (got < n) {
        ssize_t r = ::read(fd, buf + got, n - got);
        if (r > 0) {
            got += r;
            continue;
        }
        if (r < 0 && errno == EINTR) continue;
        if (r < 0 && errno != EAGAIN) throw TransportError(sysError("payload pipe read"));
        if (SteadyClock::now() >= deadline) throw TransportError("timeout reading payload pipe");
        // read() also returns 0 while no writer has connected yet; Linux
        // reports POLLHUP only once a writer came and went.
        pollfd p {fd, POLLIN, 0};
        if (::poll(&p, 1, remainingMs(deadline)) > 0 && (p.revents & POLLHUP) && !(p.revents & POLLIN))
            throw TransportError("payload pipe closed after " + std::to_string(got) + " of " + std::to_string(n)
                                 + " bytes");
    }
}

} // namespace

Fd& Fd::operator=(Fd&& o) noexcept {
    if (this != &o) {
        reset();
        _fd = o._fd;
        o._fd = -1;
    }
    return *this;
}

void Fd::reset() {
    if (_fd >= 0) ::close(_fd);
    _fd = -1;
}

void makeFifo(const std::filesystem::path& path) {
    if (::mkfifo(path.c_str(), 0600) != 0) throw TransportError(sysError("mkfifo " + path.string()));
}

void setBlocking(int fd, bool blocking) {
    int flags = ::fcntl(fd, F_GETFL);
    ::fcntl(fd, F_SETFL, blocking ? flags & ~O_NONBLOCK : flags | O_NONBLOCK);
}

std::vector<uint8_t> readPayload(int fd, double timeoutMs) {
    auto deadline = deadlineIn(timeoutMs);
    std::vector<uint8_t> buf(kPayloadHeaderSize);
    readFully(fd, buf.data(), buf.size(), deadline);
    ByteReader r(buf);
    if (r.u32() != kPayloadMagic) throw ParseError("bad payload magic", 0);
    r.u32();
    r.u32();
    uint64_t nClause = r.u64(), nAssume = r.u64();
    // 2^31 ints per section is far beyond anything a local pipe should carry.
    if (nClause > (uint64_t(1) << 31) || nAssume > (uint64_t(1) << 31))
        throw ParseError("payload section too large", kPayloadHeaderSize - 16);
    size_t body = (nClause + nAssume) * 4;
    buf.resize(kPayloadHeaderSize + body);
    readFully(fd, buf.data() + kPayloadHeaderSize, body, deadline);
    return buf;
}

void writeAll(int fd, std::span<const uint8_t> data, double timeoutMs) {
    auto deadline = deadlineIn(timeoutMs);
    size_t done = 0;
    while (done < data.size()) {
        ssize_t w = ::write(fd, data.data() + done, data.size() - done);
        if (w > 0) {
            done += w;
            continue;
        }
        if (w < 0 && errno == EINTR) continue;
        if (w < 0 && errno != EAGAIN) throw TransportError(sysError("pipe write"));
        if (SteadyClock::now() >= deadline) throw TransportError("timeout writing pipe");
        pollfd p {fd, POLLOUT, 0};
        ::poll(&p, 1, remainingMs(deadline));
        if (p.revents & (POLLERR | POLLHUP)) throw TransportError("pipe reader went away");
    }
}

size_t completeOutcomeSize(std::span<const uint8_t> data) {
    if (data.size() < 9) return 0;
    ByteReader r(data);
    r.u8();
    uint64_t count = r.u64();
    if (count > (uint64_t(1) << 32)) throw ParseError("outcome count too large", 1);
    size_t total = 9 + count * 4;
    return data.size() >= total ? total : 0;
}

} // namespace incrasat::bridge
