#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace incrasat::bridge {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// RAII file descriptor.
class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : _fd(fd) {}
    Fd(Fd&& o) noexcept : _fd(o._fd) { o._fd = -1; }
    Fd& operator=(Fd&& o) noexcept;
    ~Fd() { reset(); }
    int get() const { return _fd; }
    explicit operator bool() const { return _fd >= 0; }
    void reset();

private:
    int _fd {-1};
};

void makeFifo(const std::filesystem::path& path);
void setBlocking(int fd, bool blocking);

/// Reads one payload (header plus the body length it announces) from an
/// already opened FIFO. Throws TransportError on timeout or early EOF and
/// ParseError on a malformed header.
std::vector<uint8_t> readPayload(int fd, double timeoutMs);

/// Writes everything to a non-blocking fd, polling while the pipe is full.
/// Throws TransportError when the reader disappears or on timeout.
void writeAll(int fd, std::span<const uint8_t> data, double timeoutMs);

/// Bytes of a complete outcome encoding starting at data[0], or 0 if more
/// bytes are needed.
size_t completeOutcomeSize(std::span<const uint8_t> data);

} // namespace incrasat::bridge
