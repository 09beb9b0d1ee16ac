#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "incrasat/transport/transport.hpp"

namespace incrasat {

/// Transport endpoint of one rank over local stream sockets. Each rank binds
/// `<dir>/rank<k>.sock`; peers connect lazily on first send. Frames are
///   u32 length | u16 tag | u32 source | u32 dest | body
/// where length counts everything after the length field.
/// A receiver thread drains all connections into the inbox so that senders
/// never block on a rank that is busy sending itself.
class SocketTransport : public Transport {
public:
    static constexpr size_t kFrameHeaderSize = 4 + 2 + 4 + 4;

    SocketTransport(int size, int rank, std::filesystem::path dir,
                    size_t maxMessageSize = kDefaultMaxMessageSize);
    ~SocketTransport() override;
    SocketTransport(const SocketTransport&) = delete;
    SocketTransport& operator=(const SocketTransport&) = delete;

    static std::filesystem::path socketPath(const std::filesystem::path& dir, int rank);
    /// Socket paths in `dir` for ranks 0..size-1 that a live process is
    /// listening on. Stale socket files are removed.
    static std::vector<std::filesystem::path> findConflicts(const std::filesystem::path& dir, int size);

    int size() const override { return _size; }
    int rank() const { return _rank; }
    void send(Envelope env) override;
    std::vector<Envelope> poll(int rank, size_t budget) override;
    bool waitForMessage(int rank, double timeoutMs) override;
    void wake(int rank) override;

private:
    struct Peer {
        std::mutex mtx;
        int fd {-1};
    };
    struct Connection {
        int fd;
        std::vector<uint8_t> buffer;
    };

    void receiveLoop();
    void deliver(Envelope env);
    int connectTo(int dest);
    void checkRank(int rank) const;

    int _size;
    int _rank;
    std::filesystem::path _dir;
    int _listenFd {-1};
    int _wakeFd {-1};
    std::atomic_bool _stop {false};
    std::thread _receiver;

    std::vector<std::unique_ptr<Peer>> _peers;

    std::mutex _inboxMtx;
    std::condition_variable _inboxCv;
    std::deque<Envelope> _inbox;
    bool _woken {false};
    std::map<int, uint64_t> _recvSeq;
};

} // namespace incrasat
