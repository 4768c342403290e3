#pragma once

#include "wavectl/spectral.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavectl::cli {

/// Invalid configuration; `field` is the dotted path (or block name) at fault.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct RegistryEntry {
    std::string kind;  ///< "f", "g" or "F"
    std::string name;
    std::string params;
    std::string description;
};

const std::vector<RegistryEntry>& registry();
bool registry_contains(const std::string& kind, const std::string& name);
/// "identity, lip_sin" for error messages.
std::string registry_names(const std::string& kind);

const std::vector<std::string>& scenario_names();

/// Typed view of a flat INI table. Every read records the resolved value so
/// the manifest can list the effective configuration including defaults.
class ConfigTable {
public:
    static ConfigTable from_file(const std::string& path);
    /// INI text, as read from a file.
    static ConfigTable from_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt);
    double get_double(const std::string& key, const std::optional<double>& fallback = std::nullopt);
    int get_int(const std::string& key, const std::optional<int>& fallback = std::nullopt);
    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<double> get_list(const std::string& key, const std::optional<std::vector<double>>& fallback = std::nullopt);

    void set_resolved(const std::string& key, const std::string& value) { resolved_[key] = value; }
    /// Throws ConfigError for any key present in the file that was never read.
    void reject_unread() const;
    const std::map<std::string, std::string>& resolved() const { return resolved_; }

private:
    std::map<std::string, std::string> raw_;
    mutable std::map<std::string, bool> read_;
    std::map<std::string, std::string> resolved_;
};

struct DataSpec {
    std::string kind = "modes";  ///< modes | random
    int y0_mode = 1, y1_mode = 1;
    double y0_amplitude = 0.0, y1_amplitude = 0.0;
    /// Random data: unit H1 x L2 draw scaled by `amplitude`.
    double amplitude = 0.0;
    int profile = 0;
};

struct RunConfig {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string output_dir;
    std::string source;

    Domain domain;
    std::optional<GeometrySpec> geometry;
    Box omega;
    double T = 0.0;
    double smoothing = 0.1;
    int N = 16;
    double dt = 1e-3;
    DataSpec data;

    /// Scenario block (section named after the scenario), already type-checked.
    std::map<std::string, std::string> block;
    std::map<std::string, std::string> resolved;
};

/// Parses, applies defaults and validates; throws ConfigError naming the field.
RunConfig load_config(const std::string& path);
RunConfig parse_config(ConfigTable table, const std::string& source);

double block_double(const RunConfig& c, const std::string& key);
int block_int(const RunConfig& c, const std::string& key);
const std::string& block_string(const RunConfig& c, const std::string& key);

}  // namespace wavectl::cli
