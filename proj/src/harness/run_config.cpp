#include "incrasat/harness/run_config.hpp"

#include <charconv>
#include <fstream>

#include "incrasat/bridge/ipasir_session.hpp"

namespace incrasat::harness {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <typename T>
T number(const std::string& key, const std::string& v) {
    T out {};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument(key + ": '" + v + "' is not a valid number");
    return out;
}

bool boolean(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument(key + ": '" + v + "' is not a boolean");
}

} // namespace

RunConfig::RunConfig() : submissionDir(bridge::defaultApiDir()) {
    socketDir = submissionDir / "sockets";
}

void RunConfig::set(const std::string& key, const std::string& raw) {
    std::string v = trim(raw);
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
    if (key == "workers") workers = number<int>(key, v);
    else if (key == "threads_per_process") threadsPerProcess = number<int>(key, v);
    else if (key == "growth_interval_ms") growthIntervalMs = number<double>(key, v);
    else if (key == "sharing_period_ms") sharingPeriodMs = number<double>(key, v);
    else if (key == "sharing") sharing = boolean(key, v);
    else if (key == "submission_dir") submissionDir = v;
    else if (key == "metrics_dir") metricsDir = v;
    else if (key == "deterministic_seed") {
        if (v.empty() || v == "none") deterministicSeed.reset();
        else deterministicSeed = number<uint64_t>(key, v);
    } else if (key == "seed") seed = number<uint64_t>(key, v);
    else if (key == "transport") {
        if (v == "socket") transport = TransportKind::SOCKET;
        else if (v == "loopback") transport = TransportKind::LOOPBACK;
        else throw std::invalid_argument("transport: expected socket or loopback, got '" + v + "'");
    } else if (key == "socket_dir") socketDir = v;
    else throw std::invalid_argument("unknown configuration key '" + key + "'");
}

void RunConfig::loadFile(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot read configuration " + file.string());
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        lineNo++;
        bool quoted = false;
        for (size_t i = 0; i < line.size(); i++) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(file.string() + ":" + std::to_string(lineNo) + ": expected key = value");
        try {
            set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(file.string() + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
}

void RunConfig::validate() const {
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
    if (threadsPerProcess < 1) throw std::invalid_argument("threads_per_process must be at least 1");
    if (growthIntervalMs <= 0) throw std::invalid_argument("growth_interval_ms must be positive");
    if (sharingPeriodMs <= 0) throw std::invalid_argument("sharing_period_ms must be positive");
}

FleetConfig RunConfig::fleetConfig() const {
    validate();
    FleetConfig f;
    f.workers = workers;
    f.threadsPerProcess = threadsPerProcess;
    f.growthIntervalMs = growthIntervalMs;
    f.sharingPeriodMs = sharingPeriodMs;
    f.sharing = sharing;
    f.seed = seed;
    f.deterministicSeed = deterministicSeed;
    // a deterministic run is one in-process simulation
    f.transport = deterministicSeed ? TransportKind::LOOPBACK : transport;
    f.socketDir = socketDir;
    return f;
}

bridge::DaemonConfig RunConfig::daemonConfig() const {
    bridge::DaemonConfig d;
    d.submissionDir = submissionDir;
    return d;
}

} // namespace incrasat::harness
