#include "slens/manifest.hpp"

#include <json.hpp>

#include "slens/common.hpp"
#include "slens/io.hpp"

namespace slens::manifest {

using nlohmann::json;

std::string RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["tool_version"] = tool_version;
    j["config"] = config;
    j["input_digests"] = input_digests;
    j["outputs"] = outputs;
    j["output_digests"] = output_digests;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text, const std::string& name) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(name + ": " + e.what());
    }
    RunManifest m;
    try {
        m.command = j.at("command").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.config = j.at("config").get<std::map<std::string, std::string>>();
        m.input_digests = j.at("input_digests").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::vector<std::string>>();
        m.output_digests = j.at("output_digests").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw DataError(name + ": " + e.what());
    }
    return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
    io::atomic_write(path, to_json());
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
    const auto buf = io::read_file(path);
    return from_json(std::string(buf.begin(), buf.end()), path.string());
}

}  // namespace slens::manifest
