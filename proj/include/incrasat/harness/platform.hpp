#pragma once

#include <memory>

#include "incrasat/bridge/daemon.hpp"
#include "incrasat/node/fleet.hpp"

namespace incrasat::harness {

/// A threaded fleet with the bridge daemon on its coordinator rank, all in
/// this process. Shuts down in the safe order (rank loops first).
class LocalPlatform {
public:
    LocalPlatform(FleetConfig fleet, bridge::DaemonConfig daemon);
    ~LocalPlatform();

    Fleet& fleet() { return *_fleet; }
    bridge::Daemon& daemon() { return *_daemon; }
    void stop();

private:
    std::unique_ptr<Fleet> _fleet;
    std::unique_ptr<bridge::Daemon> _daemon;
};

} // namespace incrasat::harness
