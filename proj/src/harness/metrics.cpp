#include "incrasat/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace incrasat::harness {

namespace fs = std::filesystem;

void MetricsRecorder::append(std::vector<TimedValue>& series, double timeMs, int value) {
    if (!series.empty() && series.back().timeMs >= timeMs) {
        series.back().value = value;
        return;
    }
    series.push_back({timeMs, value});
}

void MetricsRecorder::recordCall(CallRecord record) {
    std::lock_guard lock(_mtx);
    _calls.push_back(std::move(record));
}

void MetricsRecorder::recordVolume(const std::string& job, double timeMs, int volume) {
    std::lock_guard lock(_mtx);
    append(_volumes[job], timeMs, volume);
}

void MetricsRecorder::recordDemand(const std::string& job, double timeMs, int demand) {
    std::lock_guard lock(_mtx);
    append(_demands[job], timeMs, demand);
}

std::vector<CallRecord> MetricsRecorder::calls() const {
    std::lock_guard lock(_mtx);
    return _calls;
}

std::map<std::string, std::vector<TimedValue>> MetricsRecorder::volumes() const {
    std::lock_guard lock(_mtx);
    return _volumes;
}

std::map<std::string, std::vector<TimedValue>> MetricsRecorder::demands() const {
    std::lock_guard lock(_mtx);
    return _demands;
}

void MetricsRecorder::clear() {
    std::lock_guard lock(_mtx);
    _calls.clear();
    _volumes.clear();
    _demands.clear();
}

namespace {

// Job names end up in file names.
std::string fileSafe(const std::string& name) {
    std::string out;
    for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

Verdict parseVerdict(const std::string& s) {
    if (s == "SAT") return Verdict::SAT;
    if (s == "UNSAT") return Verdict::UNSAT;
    if (s == "UNKNOWN") return Verdict::UNKNOWN;
    throw std::runtime_error("bad verdict '" + s + "'");
}

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::ofstream openOut(const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    return out;
}

} // namespace

void MetricsRecorder::writeCsv(const fs::path& dir) const {
    std::lock_guard lock(_mtx);
    fs::create_directories(dir);
    auto out = openOut(dir / "calls.csv");
    out << "job,revision,verdict,turnaround_ms,solve_ms\n";
    for (auto& c : _calls)
        out << fileSafe(c.job) << "," << c.revision << "," << nameOf(c.verdict) << "," << c.turnaroundMs << ","
            << c.solveMs << "\n";
    for (auto& [job, series] : _volumes) {
        auto v = openOut(dir / ("volume_" + fileSafe(job) + ".csv"));
        v << "time_ms,volume\n";
        for (auto& e : series) v << e.timeMs << "," << e.value << "\n";
    }
}

std::vector<CallRecord> readCallsCsv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::vector<CallRecord> out;
    std::string line;
    std::getline(in, line);
    int lineNo = 1;
    while (std::getline(in, line)) {
        lineNo++;
        if (line.empty()) continue;
        auto cells = splitCsv(line);
        if (cells.size() != 5) throw std::runtime_error(file.string() + ":" + std::to_string(lineNo) + ": expected 5 fields");
        out.push_back({cells[0], static_cast<uint32_t>(std::stoul(cells[1])), parseVerdict(cells[2]),
                       std::stod(cells[3]), std::stod(cells[4])});
    }
    return out;
}

std::vector<TimedValue> readVolumeCsv(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::vector<TimedValue> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = splitCsv(line);
        if (cells.size() != 2) throw std::runtime_error(file.string() + ": expected 2 fields");
        out.push_back({std::stod(cells[0]), std::stoi(cells[1])});
    }
    return out;
}

std::vector<std::pair<double, double>> empiricalCdf(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    double n = values.size();
    for (size_t i = 0; i < values.size(); i++) {
        // ties collapse onto their last index
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        out.emplace_back(values[i], (i + 1) / n);
    }
    return out;
}

namespace {

struct Plot {
    double w {640}, h {400}, margin {50};
    double xmin {0}, xmax {1}, ymin {0}, ymax {1};
    std::ostringstream body;

    double px(double x) const { return margin + (x - xmin) / std::max(1e-9, xmax - xmin) * (w - 2 * margin); }
    double py(double y) const { return h - margin - (y - ymin) / std::max(1e-9, ymax - ymin) * (h - 2 * margin); }

    void polyline(const std::vector<std::pair<double, double>>& pts) {
        body << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
        for (auto& [x, y] : pts) body << px(x) << "," << py(y) << " ";
        body << "\"/>\n";
    }

    void write(const fs::path& file, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
        auto out = openOut(file);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
        out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin << "\" y2=\"" << h - margin
            << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << h - margin
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
        out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
        out << "<text x=\"12\" y=\"" << h / 2 << "\" transform=\"rotate(-90 12 " << h / 2
            << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
        out << "<text x=\"" << margin << "\" y=\"" << h - margin + 15 << "\">" << xmin << "</text>\n";
        out << "<text x=\"" << w - margin << "\" y=\"" << h - margin + 15 << "\" text-anchor=\"end\">" << xmax
            << "</text>\n";
        out << "<text x=\"" << margin - 5 << "\" y=\"" << margin << "\" text-anchor=\"end\">" << ymax << "</text>\n";
        out << "<text x=\"" << margin - 5 << "\" y=\"" << h - margin << "\" text-anchor=\"end\">" << ymin << "</text>\n";
        out << body.str() << "</svg>\n";
    }
};

} // namespace

std::vector<fs::path> renderPlots(const fs::path& dir) {
    std::vector<fs::path> written;
    if (fs::exists(dir / "calls.csv")) {
        std::vector<double> t;
        for (auto& c : readCallsCsv(dir / "calls.csv")) t.push_back(c.turnaroundMs);
        auto cdf = empiricalCdf(t);
        Plot p;
        if (!cdf.empty()) {
            p.xmin = 0;
            p.xmax = std::max(1.0, cdf.back().first);
            std::vector<std::pair<double, double>> steps {{0, 0}};
            double prev = 0;
            for (auto& [x, y] : cdf) {
                steps.emplace_back(x, prev);
                steps.emplace_back(x, y);
                prev = y;
            }
            p.polyline(steps);
        }
        auto file = dir / "turnaround_cdf.svg";
        p.write(file, "Turnaround CDF", "turnaround [ms]", "fraction of calls");
        written.push_back(file);
    }
    std::vector<fs::path> csvs;
    for (auto& e : fs::directory_iterator(dir)) {
        auto name = e.path().filename().string();
        if (name.rfind("volume_", 0) == 0 && e.path().extension() == ".csv") csvs.push_back(e.path());
    }
    std::sort(csvs.begin(), csvs.end());
    for (auto& csv : csvs) {
        auto series = readVolumeCsv(csv);
        Plot p;
        if (!series.empty()) {
            p.xmin = series.front().timeMs;
            p.xmax = std::max(p.xmin + 1, series.back().timeMs);
            p.ymin = 0;
            int top = 1;
            for (auto& s : series) top = std::max(top, s.value);
            p.ymax = top;
            std::vector<std::pair<double, double>> steps;
            for (size_t i = 0; i < series.size(); i++) {
                if (i > 0) steps.emplace_back(series[i].timeMs, series[i - 1].value);
                steps.emplace_back(series[i].timeMs, series[i].value);
            }
            p.polyline(steps);
        }
        auto file = csv;
        file.replace_extension(".svg");
        p.write(file, csv.stem().string(), "time [ms]", "volume");
        written.push_back(file);
    }
    return written;
}

std::vector<fs::path> emitMetrics(const MetricsRecorder& metrics, const fs::path& dir) {
    metrics.writeCsv(dir);
    return renderPlots(dir);
}

} // namespace incrasat::harness
