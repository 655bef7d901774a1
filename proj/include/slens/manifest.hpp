#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace slens::manifest {

// Reproducibility sidecar written next to every CLI output: the command, the
// fully resolved configuration (defaults materialized), input digests, and
// the produced files. Re-running a command from its manifest must reproduce
// every output byte for byte, so no timestamps or host details live here.
struct RunManifest {
    std::string command;
    std::string tool_version;
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> input_digests;
    std::vector<std::string> outputs;
    std::map<std::string, std::string> output_digests;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text, const std::string& name);

    void save(const std::filesystem::path& path) const;
    static RunManifest load(const std::filesystem::path& path);
};

}  // namespace slens::manifest
