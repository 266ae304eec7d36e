#pragma once

#include "ridgeline/harness.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace ridgeline {

nlohmann::json protocol_to_json(const ProtocolConfig& cfg);

/// Full report: config, per-variant hyperparameters, series, summaries, timing.
nlohmann::json report_to_json(const ExperimentReport& report);

/// Columns t_seconds, eps_mean, eps_subset_1..K for one variant.
std::string series_csv(const ExperimentReport& report, const VariantReport& variant);

/// File name of a variant's series, e.g. "eps_NP-ML.csv".
std::string series_file_name(const VariantReport& variant);

/// Writes report.json (with `resolved_config` embedded when not null) and one
/// CSV per successful variant into `dir`, each atomically.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                  const nlohmann::json& resolved_config = nullptr);

}  // namespace ridgeline
