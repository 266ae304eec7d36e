#pragma once

#include "ridgeline/dynamics.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace ridgeline {

/// CSV header for an n-joint dataset: t,q1..qn,dq1..dqn,ddq1..ddqn,y1..yn
std::string dataset_header(Eigen::Index joints);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string dataset_to_csv(const Dataset& d);
/// Parses CSV text. The rate is recovered from the first time step.
Dataset dataset_from_csv(std::string_view text);

void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// Writes to a sibling temporary then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace ridgeline
