#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "incrasat/bridge/daemon.hpp"
#include "incrasat/node/fleet.hpp"

namespace incrasat::harness {

/// Settings of a fleet run, loadable from a key=value file:
///
///   workers = 4
///   threads_per_process = 3
///   submission_dir = "/tmp/incrasat-api"
///
/// '#' starts a comment. Unknown keys are errors.
struct RunConfig {
    int workers {1};
    int threadsPerProcess {3};
    double growthIntervalMs {500};
    double sharingPeriodMs {500};
    bool sharing {true};
    std::filesystem::path submissionDir;
    std::filesystem::path metricsDir {"metrics"};
    std::optional<uint64_t> deterministicSeed;
    uint64_t seed {0};
    TransportKind transport {TransportKind::SOCKET};
    std::filesystem::path socketDir;

    RunConfig();
    /// Sets one key from its textual value; throws std::invalid_argument.
    void set(const std::string& key, const std::string& value);
    void loadFile(const std::filesystem::path& file);
    /// Throws std::invalid_argument.
    void validate() const;

    FleetConfig fleetConfig() const;
    bridge::DaemonConfig daemonConfig() const;
};

} // namespace incrasat::harness
