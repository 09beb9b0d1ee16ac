#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace incrasat::bridge {

/// Metadata file a client drops into the submission directory, one per
/// solve call (and one with done=true to finalize the job).
struct JobDocument {
    std::string name;
    std::string application {"SAT"};
    uint32_t revision {0};
    bool incremental {true};
    std::optional<std::string> precursor;
    std::string payloadPipe;
    std::string resultPipe;
    bool done {false};

    /// <name>.<revision>.json
    std::string fileName() const;
    std::string toJson() const;
    /// Throws ProtocolError on syntax errors, missing, extra or mistyped
    /// fields and violated invariants.
    static JobDocument parse(const std::string& text);
    /// Best effort: the result pipe of a document that failed to parse.
    static std::optional<std::string> salvageResultPipe(const std::string& text);

    bool operator==(const JobDocument&) const = default;
};

/// "<name>.<revision - 1>", the precursor a revision >= 1 must name.
std::string precursorFor(const std::string& name, uint32_t revision);

/// Splits "<name>.<rev>.<ext>" into name and revision.
std::optional<std::pair<std::string, uint32_t>> splitDocumentName(const std::string& fileName,
                                                                   const std::string& extension);

/// Job names end up in file names: non-empty, no '/', no control chars.
bool validJobName(const std::string& name);

/// Writes `content` to tmpDir, then renames it to dir/fileName.
void publishAtomically(const std::filesystem::path& tmpDir, const std::filesystem::path& dir,
                       const std::string& fileName, const std::string& content);

} // namespace incrasat::bridge
