// Shared fixtures for the test suites: deterministic content generators,
// scripted-workload builders, and scratch directories.
#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

namespace test_helpers {

// Content sized to an exact token count under the default bytes/4 estimate.
inline std::string filler(int tokens, char fill = 'a') {
    return std::string(static_cast<std::size_t>(tokens) * 4, fill);
}

// Unique content with an exact token count: "<tag># followed by padding.
inline std::string tagged_filler(int tokens, const std::string& tag) {
    std::string text = tag + "#";
    if (text.size() > static_cast<std::size_t>(tokens) * 4) {
        text.resize(static_cast<std::size_t>(tokens) * 4);
        return text;
    }
    text.append(static_cast<std::size_t>(tokens) * 4 - text.size(), 'x');
    return text;
}

inline std::string verdict_json(int plan, int info, int score, const std::string& reasoning) {
    nlohmann::json obj;
    obj["plan_alignment"] = plan;
    obj["information_preservation"] = info;
    obj["score"] = score;
    obj["reasoning"] = reasoning;
    return obj.dump();
}

inline std::string accept_verdict() { return verdict_json(10, 10, 10, "consistent"); }

inline nlohmann::json script_entry(const std::string& content, double latency) {
    return nlohmann::json{{"content", content}, {"latency_s", latency}};
}

// n agent steps of the given token size and latency, contents tagged by index.
inline nlohmann::json agent_entries(int n, int tokens, double latency,
                                    const std::string& tag = "step") {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < n; ++i) {
        arr.push_back(script_entry(tagged_filler(tokens, tag + std::to_string(i)), latency));
    }
    return arr;
}

class TempDir {
public:
    explicit TempDir(const std::string& name) : path_(std::filesystem::path("test_tmp") / name) {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }

    const std::filesystem::path& path() const { return path_; }

    std::filesystem::path write(const std::string& name, const std::string& contents) const {
        const auto file = path_ / name;
        std::ofstream out(file, std::ios::binary);
        out << contents;
        return file;
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

}  // namespace test_helpers
