#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace sphand {

inline constexpr const char* kToolVersion = "0.3.0";

// Provenance record written next to every command's output: what ran, with
// which fully resolved settings, on what, and for how long. Re-running the
// same command with the recorded config in deterministic mode reproduces
// the output artifacts byte for byte.
struct RunManifest {
    std::string command;
    std::string version = kToolVersion;
    std::uint64_t seed = 0;
    double duration_seconds = 0.0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, std::string> config; // resolved key -> value

    void write(std::ostream& out) const;
    static RunManifest read(std::istream& in);

    void write_file(const std::string& path) const;
    static RunManifest read_file(const std::string& path);
};

} // namespace sphand
