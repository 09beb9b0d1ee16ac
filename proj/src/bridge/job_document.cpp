#include "incrasat/bridge/job_document.hpp"

#include <atomic>
#include <fstream>
#include <set>

#include <unistd.h>

#include "incrasat/model/types.hpp"
#include "json.hpp"

namespace incrasat::bridge {

using nlohmann::json;

std::string JobDocument::fileName() const { return name + "." + std::to_string(revision) + ".json"; }

std::string JobDocument::toJson() const {
    json j;
    j["name"] = name;
    j["application"] = application;
    j["revision"] = revision;
    j["incremental"] = incremental;
    j["precursor"] = precursor ? json(*precursor) : json(nullptr);
    j["payload_pipe"] = payloadPipe;
    j["result_pipe"] = resultPipe;
    j["done"] = done;
    return j.dump();
}

namespace {

template <typename F>
auto field(const json& j, const char* key, F check, const char* type) {
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    if (!check(*it)) throw ProtocolError(std::string("field '") + key + "' must be " + type);
    return it;
}

} // namespace

JobDocument JobDocument::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("document is not a JSON object");
    static const std::set<std::string> known {"name", "application", "revision", "incremental",
                                              "precursor", "payload_pipe", "result_pipe", "done"};
    for (auto& [k, v] : j.items())
        if (!known.count(k)) throw ProtocolError("unknown field '" + k + "'");

    auto isString = [](const json& v) { return v.is_string(); };
    auto isBool = [](const json& v) { return v.is_boolean(); };
    JobDocument d;
    d.name = field(j, "name", isString, "a string")->get<std::string>();
    d.application = field(j, "application", isString, "a string")->get<std::string>();
    auto rev = field(j, "revision", [](const json& v) { return v.is_number_integer(); }, "an integer");
    if (rev->get<int64_t>() < 0 || rev->get<int64_t>() > UINT32_MAX) throw ProtocolError("revision out of range");
    d.revision = rev->get<uint32_t>();
    d.incremental = field(j, "incremental", isBool, "a boolean")->get<bool>();
    if (j.contains("precursor") && !j["precursor"].is_null()) {
        if (!j["precursor"].is_string()) throw ProtocolError("field 'precursor' must be a string or null");
        d.precursor = j["precursor"].get<std::string>();
    }
    d.payloadPipe = field(j, "payload_pipe", isString, "a string")->get<std::string>();
    d.resultPipe = field(j, "result_pipe", isString, "a string")->get<std::string>();
    d.done = field(j, "done", isBool, "a boolean")->get<bool>();

    if (!validJobName(d.name)) throw ProtocolError("invalid job name '" + d.name + "'");
    if (d.application != "SAT") throw ProtocolError("unsupported application '" + d.application + "'");
    if (d.revision >= 1) {
        if (!d.precursor) throw ProtocolError("revision " + std::to_string(d.revision) + " without precursor");
        if (*d.precursor != precursorFor(d.name, d.revision))
            throw ProtocolError("precursor '" + *d.precursor + "' does not name revision "
                                + std::to_string(d.revision - 1));
    }
    if (!d.incremental && d.revision > 0) throw ProtocolError("non-incremental job with revision > 0");
    if (!d.done && (d.payloadPipe.empty() || d.resultPipe.empty()))
        throw ProtocolError("payload_pipe and result_pipe are required");
    return d;
}

std::optional<std::string> JobDocument::salvageResultPipe(const std::string& text) {
    try {
        auto j = json::parse(text);
        if (j.is_object() && j.contains("result_pipe") && j["result_pipe"].is_string()) {
            auto p = j["result_pipe"].get<std::string>();
            if (!p.empty()) return p;
        }
    } catch (...) {
    }
    return std::nullopt;
}

std::string precursorFor(const std::string& name, uint32_t revision) {
    return name + "." + std::to_string(revision - 1);
}

std::optional<std::pair<std::string, uint32_t>> splitDocumentName(const std::string& fileName,
                                                                   const std::string& extension) {
    std::string suffix = "." + extension;
    if (fileName.size() <= suffix.size() || fileName.compare(fileName.size() - suffix.size(), suffix.size(), suffix))
        return std::nullopt;
    std::string stem = fileName.substr(0, fileName.size() - suffix.size());
    auto dot = stem.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == stem.size()) return std::nullopt;
    std::string rev = stem.substr(dot + 1);
    if (rev.size() > 10 || rev.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    uint64_t r = std::stoull(rev);
    if (r > UINT32_MAX) return std::nullopt;
    return std::make_pair(stem.substr(0, dot), static_cast<uint32_t>(r));
}

bool validJobName(const std::string& name) {
    if (name.empty() || name.size() > 200 || name == "." || name == "..") return false;
    for (unsigned char c : name)
        if (c == '/' || c < 0x20 || c == 0x7f) return false;
    return true;
}

void publishAtomically(const std::filesystem::path& tmpDir, const std::filesystem::path& dir,
                       const std::string& fileName, const std::string& content) {
    static std::atomic<uint64_t> counter {0};
    auto tmp = tmpDir / (fileName + "." + std::to_string(::getpid()) + "." + std::to_string(counter++) + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, dir / fileName);
}

} // namespace incrasat::bridge
