#pragma once

#include "run_config.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wavectl::cli {

enum ExitStatus { kPass = 0, kScenarioFailure = 1, kConfigError = 2 };

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct ScenarioOutput {
    nlohmann::ordered_json report;
    bool pass = false;
    std::vector<CsvTable> tables;
};

struct RunOptions {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

struct RunOutcome {
    int status = kConfigError;
    std::string message;
    std::filesystem::path directory;
};

/// Runs one scenario: manifest first, then report.json and the CSV tables.
/// Never throws; configuration problems map to kConfigError.
RunOutcome run_config_file(const std::string& config_path, const RunOptions& options);
RunOutcome run_config(RunConfig config, const RunOptions& options);

/// Executes the scenario without touching the filesystem.
ScenarioOutput execute(const RunConfig& config);

/// 17 significant digits, fixed header.
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace wavectl::cli
