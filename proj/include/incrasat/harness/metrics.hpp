#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "incrasat/model/types.hpp"

namespace incrasat::harness {

struct CallRecord {
    std::string job;
    uint32_t revision {0};
    Verdict verdict {Verdict::UNKNOWN};
    double turnaroundMs {0};
    double solveMs {0};
};

struct TimedValue {
    double timeMs {0};
    int value {0};
    bool operator==(const TimedValue&) const = default;
};

/// Append-only metrics of a fleet run. Thread-safe.
class MetricsRecorder {
public:
    void recordCall(CallRecord record);
    /// Events are kept strictly time-ordered; a second event at the same
    /// timestamp replaces the first.
    void recordVolume(const std::string& job, double timeMs, int volume);
    void recordDemand(const std::string& job, double timeMs, int demand);

    std::vector<CallRecord> calls() const;
    std::map<std::string, std::vector<TimedValue>> volumes() const;
    std::map<std::string, std::vector<TimedValue>> demands() const;
    void clear();

    /// Writes calls.csv and volume_<job>.csv into `dir`.
    void writeCsv(const std::filesystem::path& dir) const;

private:
    static void append(std::vector<TimedValue>& series, double timeMs, int value);

    mutable std::mutex _mtx;
    std::vector<CallRecord> _calls;
    std::map<std::string, std::vector<TimedValue>> _volumes;
    std::map<std::string, std::vector<TimedValue>> _demands;
};

std::vector<CallRecord> readCallsCsv(const std::filesystem::path& file);
std::vector<TimedValue> readVolumeCsv(const std::filesystem::path& file);

/// Empirical CDF points (value, fraction <= value), sorted by value.
std::vector<std::pair<double, double>> empiricalCdf(std::vector<double> values);

/// Renders turnaround_cdf.svg and volume_<job>.svg from the CSV files in
/// `dir`. Returns the written files.
std::vector<std::filesystem::path> renderPlots(const std::filesystem::path& dir);

/// writeCsv followed by renderPlots.
std::vector<std::filesystem::path> emitMetrics(const MetricsRecorder& metrics, const std::filesystem::path& dir);

} // namespace incrasat::harness
