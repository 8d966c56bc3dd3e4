#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "jkraim/scenario.hpp"

namespace jkraim::cli {

enum ExitCode { kOk = 0, kUsage = 1, kParse = 2, kNumerical = 3, kIo = 4 };

struct Files {
    std::string gps_almanac;
    std::string galileo_almanac;
    std::string bounds;
    std::string records_out = "records.csv";
    std::string summary_out = "summary.json";
    std::string manifest_out = "manifest.json";
};

struct RunConfig {
    ScenarioConfig scenario;
    Files files;
};

// key=value sections; empty path gives the full-scale defaults
RunConfig load_config(const std::string& path);
std::string config_echo_json(const RunConfig& cfg, int k_max, int max_fault_modes);

struct Manifest {
    std::string command;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;

    void add_input(const std::string& path);
    std::string json() const;
};

std::string sha256_file(const std::string& path);

// Runs the command line; returns the process exit code. Machine output goes
// to out, diagnostics to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace jkraim::cli
