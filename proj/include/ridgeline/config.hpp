#pragma once

// Run configuration read from a TOML file. Every table and key is optional and
// falls back to the defaults below; unknown tables or keys are errors.

#include "ridgeline/dynamics.hpp"
#include "ridgeline/harness.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ridgeline {

struct SeedConfig {
    std::uint64_t dataset_a = 1;
    std::uint64_t dataset_b = 2;
    std::uint64_t features = 1;
};

struct RunConfig {
    ArmParameters arm;
    TrajectoryRegime regime_a = TrajectoryRegime::regime_a();
    TrajectoryRegime regime_b = TrajectoryRegime::regime_b();
    double duration_a = 500.0;  ///< seconds of regime A to record
    double duration_b = 500.0;
    ProtocolConfig protocol;    ///< protocol.gravity and feature seed are resolved from arm/seeds
    SeedConfig seeds;
    std::filesystem::path out_dir = "out";

    /// Copies arm gravity and the feature seed into the protocol.
    void resolve();
    /// Checks every nested config and that the recorded datasets cover the protocol.
    void validate() const;
    /// --seed override: dataset A uses `seed`, dataset B `seed + 1`.
    void apply_seed(std::uint64_t seed);

    std::size_t samples_a() const;
    std::size_t samples_b() const;
};

/// Parses TOML text; `source` names the file in error messages.
RunConfig parse_run_config(std::string_view text, const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

/// TOML text that parses back to the same configuration.
std::string run_config_to_toml(const RunConfig& cfg);
nlohmann::json run_config_to_json(const RunConfig& cfg);

}  // namespace ridgeline
